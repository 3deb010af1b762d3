#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "owssl/matrix.hpp"
#include "owssl/rng.hpp"

namespace owssl {

struct EstimatorConfig {
  std::size_t k_min = 2;         // the number of labeled classes
  std::size_t k_max = 8;         // defaults to 4x labeled classes upstream
  std::size_t runs_per_k = 3;
  std::size_t top_values = 10;
  std::size_t max_lloyd_iters = 300;
  std::uint64_t seed = 1234;

  void validate() const;
};

struct KmeansResult {
  Matrix centers;                        // k x d
  std::vector<std::size_t> assignments;  // per row, < k
  double inertia = 0.0;
  std::vector<double> inertia_history;   // one entry per Lloyd iteration
};

struct KScore {
  std::size_t k = 0;
  double score = 0.0;
};

struct EstimateResult {
  std::size_t estimated_classes = 0;
  std::vector<KScore> table;  // mean labeled-subset score per k
};

/// k-means++ seeding then Lloyd iterations until the assignment fixed point
/// (or max_lloyd_iters). Empty clusters are reseeded at the point farthest
/// from its center.
KmeansResult kmeans(const Matrix& x, std::size_t k, RngStream rng,
                    std::size_t max_iters = 300);

/// Labeled-subset accuracy of a clustering: Hungarian-match labeled samples'
/// clusters to labeled classes (the matched clusters are "dominant"); with
/// reassign, labeled samples stranded in non-dominant clusters move to the
/// nearest dominant center before scoring.
double labeled_cluster_score(const KmeansResult& result, const Matrix& x,
                             const std::vector<std::size_t>& labeled_idx,
                             const std::vector<int>& labeled_gt, bool reassign);

/// Sweep k over [k_min, k_max], score each k as the mean reassignment score
/// over runs_per_k clusterings, then return the rounded mean of the
/// top_values best-scoring k values.
EstimateResult estimate_class_count(const Matrix& x,
                                    const std::vector<std::size_t>& labeled_idx,
                                    const std::vector<int>& labeled_gt,
                                    const EstimatorConfig& cfg);

std::string score_table_csv(const EstimateResult& result);

}  // namespace owssl
