#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "owssl/matrix.hpp"

namespace owssl {

/// Cluster-to-class assignment chosen by Hungarian matching.
struct MatchResult {
  std::vector<std::size_t> mapping;  // predicted cluster id -> ground-truth class
  std::size_t total_matched_correct = 0;
};

struct EvalReport {
  double seen_acc = 0.0;
  double novel_acc = 0.0;
  double all_acc = 0.0;
  Matrix confusion;  // rows: ground-truth class, cols: mapped prediction
  std::size_t removed_count = 0;
};

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns (assignment[i] = column of row i, total cost).
/// Throws on non-square or non-finite input.
std::pair<std::vector<std::size_t>, double> hungarian(const Matrix& cost);

/// Clustering accuracy: builds the contingency table (padded square), matches
/// clusters to classes by maximizing agreement, returns accuracy and the
/// chosen mapping. ids must be < num_classes.
std::pair<double, MatchResult> clustering_accuracy(const std::vector<int>& pred,
                                                   const std::vector<int>& gt,
                                                   std::size_t num_classes);

/// Open-world evaluation: standard accuracy on seen classes; novel clustering
/// accuracy where novel samples predicted as seen are removed and counted as
/// errors (denominator keeps them); all-class clustering accuracy and the
/// confusion matrix under the all-class mapping. With novel_count == 0 the
/// mapping is the identity and all_acc == seen_acc exactly.
EvalReport open_world_report(const std::vector<int>& pred, const std::vector<int>& gt,
                             std::size_t seen_count, std::size_t novel_count);

std::string to_json(const EvalReport& report);
std::string confusion_csv(const EvalReport& report);

}  // namespace owssl
