#include "owssl/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace owssl {

namespace {

constexpr double kProbFloor = 1e-30;

void check_predictions(const Matrix& y_hat, const ClassPrior& prior) {
  prior.validate();
  if (y_hat.cols() != prior.num_classes())
    throw std::invalid_argument("sinkhorn: prediction width != prior classes");
  if (y_hat.rows() == 0) throw std::invalid_argument("sinkhorn: empty batch");
}

}  // namespace

void SinkhornConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("SinkhornConfig: lambda must be > 0");
  if (iterations < 1) throw std::invalid_argument("SinkhornConfig: iterations must be >= 1");
  if (hard_threshold < 0.0 || hard_threshold > 1.0)
    throw std::invalid_argument("SinkhornConfig: hard_threshold must be in [0,1]");
}

std::vector<std::size_t> estimate_permutation(const Matrix& y_hat,
                                              const ClassPrior& prior) {
  check_predictions(y_hat, prior);
  const std::size_t c = prior.num_classes();
  const std::size_t seen = prior.seen_count;

  std::vector<std::size_t> perm(c);
  std::iota(perm.begin(), perm.end(), 0);
  if (prior.novel_count <= 1) return perm;

  const std::vector<double> marginals = column_sums(y_hat);

  // Novel columns by marginal, novel prior entries by value, both descending
  // with index-ascending tie-break.
  std::vector<std::size_t> cols_by_marginal, priors_by_value;
  for (std::size_t j = seen; j < c; ++j) {
    cols_by_marginal.push_back(j);
    priors_by_value.push_back(j);
  }
  std::stable_sort(cols_by_marginal.begin(), cols_by_marginal.end(),
                   [&](std::size_t a, std::size_t b) { return marginals[a] > marginals[b]; });
  std::stable_sort(priors_by_value.begin(), priors_by_value.end(),
                   [&](std::size_t a, std::size_t b) {
                     return prior.fractions[a] > prior.fractions[b];
                   });

  for (std::size_t k = 0; k < cols_by_marginal.size(); ++k)
    perm[cols_by_marginal[k]] = priors_by_value[k];

  // Within a run of tied prior values any assignment is equivalent; hand the
  // run to its receiving columns in ascending column order so the balanced
  // prior maps to the identity.
  std::size_t run_start = 0;
  const std::size_t n_novel = priors_by_value.size();
  while (run_start < n_novel) {
    std::size_t run_end = run_start + 1;
    while (run_end < n_novel && prior.fractions[priors_by_value[run_end]] ==
                                    prior.fractions[priors_by_value[run_start]])
      ++run_end;
    if (run_end - run_start > 1) {
      std::vector<std::size_t> cols(cols_by_marginal.begin() + run_start,
                                    cols_by_marginal.begin() + run_end);
      std::vector<std::size_t> pris(priors_by_value.begin() + run_start,
                                    priors_by_value.begin() + run_end);
      std::sort(cols.begin(), cols.end());
      std::sort(pris.begin(), pris.end());
      for (std::size_t k = 0; k < cols.size(); ++k) perm[cols[k]] = pris[k];
    }
    run_start = run_end;
  }
  return perm;
}

AssignmentMatrix sinkhorn_assign(const Matrix& y_hat, const ClassPrior& prior,
                                 const SinkhornConfig& cfg) {
  cfg.validate();
  check_predictions(y_hat, prior);

  const std::size_t n = y_hat.rows();
  const std::size_t c = y_hat.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  const std::vector<std::size_t> perm = estimate_permutation(y_hat, prior);
  std::vector<double> col_target(c);
  for (std::size_t j = 0; j < c; ++j) col_target[j] = prior.fractions[perm[j]];

  // Gibbs kernel exp(log(Y_hat/N)/lambda) = (Y_hat/N)^(1/lambda), elementwise,
  // with zero clamping. lambda plays the entropic-regularization role: 0.05
  // sharpens the predictions (prediction ratios raised to the 20th power)
  // before the marginal scaling.
  Matrix kernel(n, c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j)
      kernel(i, j) = std::pow(std::max(y_hat(i, j), kProbFloor) * inv_n, 1.0 / cfg.lambda);

  std::vector<double> m(n, 1.0), nu(c, 1.0);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    // m_i <- (1/N) / (K nu)_i
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      const auto row = kernel.row(i);
      for (std::size_t j = 0; j < c; ++j) dot += row[j] * nu[j];
      m[i] = inv_n / dot;
      if (!std::isfinite(m[i]))
        throw std::runtime_error("sinkhorn: non-finite row scaling at iteration " +
                                 std::to_string(it));
    }
    // nu_j <- rho_pi(j) / (K^T m)_j
    for (std::size_t j = 0; j < c; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += kernel(i, j) * m[i];
      nu[j] = col_target[j] / dot;
      if (!std::isfinite(nu[j]))
        throw std::runtime_error("sinkhorn: non-finite column scaling at iteration " +
                                 std::to_string(it));
    }
  }

  AssignmentMatrix out;
  out.permutation = perm;
  out.a = Matrix(n, c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) out.a(i, j) = m[i] * kernel(i, j) * nu[j];
  return out;
}

PseudoLabelBatch mixed_pseudo_labels(const AssignmentMatrix& assignment,
                                     const ClassPrior& prior,
                                     const SinkhornConfig& cfg) {
  cfg.validate();
  const Matrix& a = assignment.a;
  if (a.cols() != prior.num_classes())
    throw std::invalid_argument("mixed_pseudo_labels: plan width != prior classes");

  PseudoLabelBatch out;
  out.labels = Matrix(a.rows(), a.cols());
  out.is_hard.assign(a.rows(), false);

  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto src = a.row(i);
    double sum = 0.0;
    for (double v : src) sum += v;
    if (!(sum > 0.0))
      throw std::invalid_argument("mixed_pseudo_labels: empty assignment row");

    std::size_t argmax = 0;
    for (std::size_t j = 1; j < src.size(); ++j)
      if (src[j] > src[argmax]) argmax = j;

    const double top = src[argmax] / sum;
    const bool novel_argmax = argmax >= prior.seen_count;
    if (novel_argmax && top >= cfg.hard_threshold) {
      out.labels(i, argmax) = 1.0;
      out.is_hard[i] = true;
    } else {
      for (std::size_t j = 0; j < src.size(); ++j) out.labels(i, j) = src[j] / sum;
    }
  }
  return out;
}

}  // namespace owssl
