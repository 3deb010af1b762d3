#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "owssl/rng.hpp"

namespace owssl {

enum class UncertaintyReduce { kMean, kMax, kArgmaxClass };

struct UncertaintyConfig {
  std::size_t mc_samples = 10;
  double clip_lo = 0.1;
  double clip_hi = 1.0;
  UncertaintyReduce reduce = UncertaintyReduce::kMean;

  void validate() const;
};

/// Per-sample softmax temperatures for the whole dataset. Labeled entries
/// stay at default_temperature; unlabeled entries are refreshed at epoch
/// boundaries.
struct UncertaintyStore {
  std::vector<double> labeled;
  std::vector<double> unlabeled;
  double default_temperature = 0.1;
};

using PredictFn = std::function<std::vector<double>(std::span<const double>)>;
using AugmentFn =
    std::function<std::vector<double>(std::span<const double>, RngStream&)>;

/// Per-class population variance of predictions over mc_samples stochastic
/// transformations of x (divide by the sample count, not count-1).
std::vector<double> mc_variance(const PredictFn& predict, std::span<const double> x,
                                const AugmentFn& augmenter,
                                const UncertaintyConfig& cfg, RngStream rng);

/// Collapse the per-class variance vector to the scalar u(x).
double reduce_uncertainty(std::span<const double> var,
                          UncertaintyReduce reduce = UncertaintyReduce::kMean,
                          std::size_t argmax_class = 0);

/// Scale so the max becomes 1, then clamp into [clip_lo, clip_hi]. An
/// all-zero input means full certainty: every entry gets clip_lo.
std::vector<double> normalize_and_clip(std::span<const double> raw,
                                       const UncertaintyConfig& cfg);

/// Softmax with per-sample temperature u; identical to softmax(z, u).
std::vector<double> uncertainty_softmax(std::span<const double> z, double u);

}  // namespace owssl
