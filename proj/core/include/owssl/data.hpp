#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "owssl/matrix.hpp"
#include "owssl/rng.hpp"

namespace owssl {

/// Synthetic Gaussian-mixture dataset description. Class j (over the
/// concatenated seen+novel index) receives round(samples_per_class *
/// IF^(-j/(C-1))) training samples; unit within-class sigma; means are
/// max-min spread on a hypersphere of radius class_sep * sqrt(dim).
struct DatasetSpec {
  std::size_t dim = 8;
  std::size_t num_seen = 3;
  std::size_t num_novel = 3;
  std::size_t samples_per_class = 500;
  double labeled_fraction = 0.1;   // applied to seen classes only
  double imbalance_factor = 1.0;   // IF >= 1
  double class_sep = 6.0;          // mean spacing in sigma units
  std::size_t test_per_class = 125;  // class-0 test count; decays with IF like training
  std::uint64_t seed = 1234;

  std::size_t num_classes() const { return num_seen + num_novel; }
  void validate() const;
};

struct AugmentConfig {
  double noise_sigma = 0.15;
  double scale_lo = 0.98;
  double scale_hi = 1.02;
  double mask_prob = 0.02;

  void validate() const;
};

struct SplitDataset {
  Matrix labeled_x;                 // N_l x d, seen classes only
  std::vector<int> labeled_class;   // in [0, num_seen)
  Matrix unlabeled_x;               // N_u x d, all classes
  std::vector<int> unlabeled_gt;    // hidden labels, evaluation only
  Matrix test_x;
  std::vector<int> test_gt;
  Matrix class_means;               // C x d
  std::size_t num_seen = 0;
  std::size_t num_novel = 0;
  std::vector<std::size_t> train_counts;  // generated per-class training counts

  std::size_t num_classes() const { return num_seen + num_novel; }
};

SplitDataset generate(const DatasetSpec& spec);

/// x' = mask o (s*x + eps); eps ~ N(0, noise_sigma^2 I), s uniform in
/// [scale_lo, scale_hi], each coordinate zeroed with mask_prob.
std::vector<double> augment(std::span<const double> x, const AugmentConfig& cfg,
                            RngStream& rng);

/// Row-wise mixup with per-row Beta(gamma, gamma) weights over inputs,
/// labels and uncertainties. Batches of size < 2 are returned unchanged.
void mixup(Matrix& x, Matrix& y, std::vector<double>& u, double gamma, RngStream& rng);

/// Keep only ground-truth-novel samples in the unlabeled set (the novel
/// class discovery split); labeled and test parts are untouched.
SplitDataset make_ncd_split(const SplitDataset& data);

/// Fraction of rows whose nearest class mean is their true class; the
/// Bayes-oracle ceiling on this generator.
double nearest_mean_accuracy(const Matrix& x, const std::vector<int>& gt,
                             const Matrix& means);

Matrix one_hot(const std::vector<int>& labels, std::size_t num_classes);

void export_csv(const SplitDataset& data, const std::string& path);
SplitDataset import_csv(const std::string& path);
void export_binary(const SplitDataset& data, const std::string& path);
SplitDataset import_binary(const std::string& path);

}  // namespace owssl
