#include "owssl/numerics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <stdexcept>

namespace owssl {

void softmax_inplace(std::span<double> z, double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("softmax: temperature must be > 0");
  if (z.empty()) throw std::invalid_argument("softmax: empty input");
  // Scale first so softmax(z, t) and softmax(z/t, 1) run the exact same
  // float sequence, then stabilize by max subtraction.
  double mx = -std::numeric_limits<double>::infinity();
  for (double& v : z) {
    if (!std::isfinite(v)) throw std::invalid_argument("softmax: non-finite logit");
    if (temperature != 1.0) v /= temperature;
    mx = std::max(mx, v);
  }
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

std::vector<double> softmax(std::span<const double> z, double temperature) {
  std::vector<double> out(z.begin(), z.end());
  softmax_inplace(out, temperature);
  return out;
}

bool is_prob_vector(std::span<const double> p, double tol) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

double entropy(std::span<const double> p) {
  if (!is_prob_vector(p)) throw std::invalid_argument("entropy: not a distribution");
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return std::max(h, 0.0);
}

}  // namespace owssl
