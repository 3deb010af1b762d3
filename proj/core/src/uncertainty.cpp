#include "owssl/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "owssl/numerics.hpp"

namespace owssl {

void UncertaintyConfig::validate() const {
  if (mc_samples < 2)
    throw std::invalid_argument("UncertaintyConfig: mc_samples must be >= 2");
  if (!(clip_lo > 0.0) || !(clip_lo < clip_hi))
    throw std::invalid_argument("UncertaintyConfig: need 0 < clip_lo < clip_hi");
}

std::vector<double> mc_variance(const PredictFn& predict, std::span<const double> x,
                                const AugmentFn& augmenter,
                                const UncertaintyConfig& cfg, RngStream rng) {
  cfg.validate();
  const std::size_t t = cfg.mc_samples;
  std::vector<std::vector<double>> preds;
  preds.reserve(t);
  for (std::size_t i = 0; i < t; ++i) {
    std::vector<double> view = augmenter(x, rng);
    std::vector<double> p = predict(view);
    if (!is_prob_vector(p, 1e-6))
      throw std::invalid_argument("mc_variance: predict returned an invalid distribution");
    if (!preds.empty() && p.size() != preds.front().size())
      throw std::invalid_argument("mc_variance: inconsistent prediction width");
    preds.push_back(std::move(p));
  }

  const std::size_t c = preds.front().size();
  std::vector<double> mean(c, 0.0), var(c, 0.0);
  for (const auto& p : preds)
    for (std::size_t j = 0; j < c; ++j) mean[j] += p[j];
  for (double& m : mean) m /= static_cast<double>(t);
  for (const auto& p : preds)
    for (std::size_t j = 0; j < c; ++j) {
      const double d = p[j] - mean[j];
      var[j] += d * d;
    }
  for (double& v : var) v /= static_cast<double>(t);
  return var;
}

double reduce_uncertainty(std::span<const double> var, UncertaintyReduce reduce,
                          std::size_t argmax_class) {
  if (var.empty()) throw std::invalid_argument("reduce_uncertainty: empty vector");
  for (double v : var)
    if (!(v >= 0.0)) throw std::invalid_argument("reduce_uncertainty: negative variance");
  switch (reduce) {
    case UncertaintyReduce::kMax:
      return *std::max_element(var.begin(), var.end());
    case UncertaintyReduce::kArgmaxClass:
      if (argmax_class >= var.size())
        throw std::invalid_argument("reduce_uncertainty: argmax class out of range");
      return var[argmax_class];
    case UncertaintyReduce::kMean:
    default: {
      double s = 0.0;
      for (double v : var) s += v;
      return s / static_cast<double>(var.size());
    }
  }
}

std::vector<double> normalize_and_clip(std::span<const double> raw,
                                       const UncertaintyConfig& cfg) {
  cfg.validate();
  if (raw.empty()) throw std::invalid_argument("normalize_and_clip: empty input");
  double mx = 0.0;
  for (double v : raw) {
    if (!(v >= 0.0)) throw std::invalid_argument("normalize_and_clip: negative input");
    mx = std::max(mx, v);
  }
  std::vector<double> out(raw.size());
  if (mx == 0.0) {
    std::fill(out.begin(), out.end(), cfg.clip_lo);
    return out;
  }
  for (std::size_t i = 0; i < raw.size(); ++i)
    out[i] = std::clamp(raw[i] / mx, cfg.clip_lo, cfg.clip_hi);
  return out;
}

std::vector<double> uncertainty_softmax(std::span<const double> z, double u) {
  if (!(u > 0.0)) throw std::invalid_argument("uncertainty_softmax: u must be > 0");
  return softmax(z, u);
}

}  // namespace owssl
