#include "owssl/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "owssl/eval.hpp"

namespace owssl {

namespace {

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Squared distance of every row to its nearest center; returns total.
double assign_all(const Matrix& x, const Matrix& centers,
                  std::vector<std::size_t>& assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows(); ++c) {
      const double d = dist2(xi, centers.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assignments[i] = best;
    total += best_d;
  }
  return total;
}

Matrix kmeanspp_init(const Matrix& x, std::size_t k, RngStream& rng) {
  const std::size_t n = x.rows();
  Matrix centers(k, x.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t first = rng.next_below(n);
  std::copy(x.row(first).begin(), x.row(first).end(), centers.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], dist2(x.row(i), centers.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.next_double() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.next_below(n);
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(c).begin());
  }
  return centers;
}

}  // namespace

void EstimatorConfig::validate() const {
  if (k_min == 0) throw std::invalid_argument("EstimatorConfig: k_min must be >= 1");
  if (k_max < k_min) throw std::invalid_argument("EstimatorConfig: k_max < k_min");
  if (runs_per_k < 1) throw std::invalid_argument("EstimatorConfig: runs_per_k must be >= 1");
  if (top_values < 1) throw std::invalid_argument("EstimatorConfig: top_values must be >= 1");
}

KmeansResult kmeans(const Matrix& x, std::size_t k, RngStream rng,
                    std::size_t max_iters) {
  if (k == 0 || k > x.rows())
    throw std::invalid_argument("kmeans: need 1 <= k <= number of rows");

  KmeansResult res;
  res.centers = kmeanspp_init(x, k, rng);
  res.assignments.assign(x.rows(), 0);

  std::vector<std::size_t> prev;
  for (std::size_t it = 0; it < max_iters; ++it) {
    res.inertia = assign_all(x, res.centers, res.assignments);
    res.inertia_history.push_back(res.inertia);
    if (res.assignments == prev) break;
    prev = res.assignments;

    // Recompute centers; reseed any empty cluster at the farthest point.
    res.centers.fill(0.0);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto cr = res.centers.row(res.assignments[i]);
      const auto xi = x.row(i);
      for (std::size_t d = 0; d < xi.size(); ++d) cr[d] += xi[d];
      sizes[res.assignments[i]]++;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
          const double d = dist2(x.row(i), res.centers.row(res.assignments[i]));
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        std::copy(x.row(far).begin(), x.row(far).end(), res.centers.row(c).begin());
      } else {
        auto cr = res.centers.row(c);
        for (double& v : cr) v /= static_cast<double>(sizes[c]);
      }
    }
  }
  res.inertia = assign_all(x, res.centers, res.assignments);
  return res;
}

double labeled_cluster_score(const KmeansResult& result, const Matrix& x,
                             const std::vector<std::size_t>& labeled_idx,
                             const std::vector<int>& labeled_gt, bool reassign) {
  if (labeled_idx.empty() || labeled_idx.size() != labeled_gt.size())
    throw std::invalid_argument("labeled_cluster_score: bad labeled subset");
  const std::size_t k = result.centers.rows();
  std::size_t num_labeled_classes = 0;
  for (int g : labeled_gt)
    num_labeled_classes = std::max(num_labeled_classes, static_cast<std::size_t>(g) + 1);
  if (k < num_labeled_classes)
    throw std::invalid_argument("labeled_cluster_score: fewer clusters than labeled classes");

  // Contingency over labeled samples, padded square for Hungarian.
  Matrix counts(k, k);
  for (std::size_t i = 0; i < labeled_idx.size(); ++i)
    counts(result.assignments[labeled_idx[i]], static_cast<std::size_t>(labeled_gt[i])) +=
        1.0;
  Matrix neg(k, k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) neg(r, c) = -counts(r, c);
  auto [cluster_to_class, cost] = hungarian(neg);
  (void)cost;

  // Dominant clusters are those matched to the real labeled classes.
  std::vector<bool> dominant(k, false);
  std::vector<std::size_t> dominant_list;
  for (std::size_t c = 0; c < k; ++c) {
    if (cluster_to_class[c] < num_labeled_classes) {
      dominant[c] = true;
      dominant_list.push_back(c);
    }
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < labeled_idx.size(); ++i) {
    std::size_t cluster = result.assignments[labeled_idx[i]];
    if (!dominant[cluster]) {
      if (!reassign) continue;
      const auto xi = x.row(labeled_idx[i]);
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t dc : dominant_list) {
        const double d = dist2(xi, result.centers.row(dc));
        if (d < best_d) {
          best_d = d;
          cluster = dc;
        }
      }
    }
    if (cluster_to_class[cluster] == static_cast<std::size_t>(labeled_gt[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labeled_idx.size());
}

EstimateResult estimate_class_count(const Matrix& x,
                                    const std::vector<std::size_t>& labeled_idx,
                                    const std::vector<int>& labeled_gt,
                                    const EstimatorConfig& cfg) {
  cfg.validate();
  if (cfg.k_max > x.rows())
    throw std::invalid_argument("estimate_class_count: k_max exceeds sample count");

  EstimateResult out;
  for (std::size_t k = cfg.k_min; k <= cfg.k_max; ++k) {
    double sum = 0.0;
    for (std::size_t run = 0; run < cfg.runs_per_k; ++run) {
      RngStream rng(cfg.seed, derive_stream({0x6B, k, run}));
      const KmeansResult result = kmeans(x, k, rng, cfg.max_lloyd_iters);
      sum += labeled_cluster_score(result, x, labeled_idx, labeled_gt, /*reassign=*/true);
    }
    out.table.push_back({k, sum / static_cast<double>(cfg.runs_per_k)});
  }

  std::vector<std::size_t> order(out.table.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.table[a].score > out.table[b].score;
  });
  const std::size_t take = std::min<std::size_t>(cfg.top_values, order.size());
  double mean_k = 0.0;
  for (std::size_t i = 0; i < take; ++i)
    mean_k += static_cast<double>(out.table[order[i]].k);
  mean_k /= static_cast<double>(take);
  out.estimated_classes = static_cast<std::size_t>(std::llround(mean_k));
  return out;
}

std::string score_table_csv(const EstimateResult& result) {
  std::ostringstream out;
  out << "k,score\n";
  out.setf(std::ios::fmtflags(0), std::ios::floatfield);
  out.precision(17);
  for (const auto& row : result.table) out << row.k << "," << row.score << "\n";
  return out.str();
}

}  // namespace owssl
