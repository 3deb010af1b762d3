#pragma once

#include <cstddef>
#include <vector>

#include "owssl/matrix.hpp"
#include "owssl/prior.hpp"

namespace owssl {

struct SinkhornConfig {
  /// Entropic regularization: the scaled kernel is (Y_hat/N)^(1/lambda), so
  /// smaller values sharpen the prediction-driven tilt of the plan.
  double lambda = 0.05;
  /// Alternating scaling rounds. 3 during training; convergence tests use
  /// a few hundred.
  std::size_t iterations = 3;
  /// Row-normalized confidence above which a novel-argmax row is hardened
  /// to a one-hot label.
  double hard_threshold = 0.5;

  void validate() const;
};

/// Transport plan over a batch: A is N x C, entrywise positive, summing to 1
/// overall. permutation[j] is the prior index whose mass column j absorbs
/// (seen columns always map to themselves; novel columns are rank-matched).
struct AssignmentMatrix {
  Matrix a;
  std::vector<std::size_t> permutation;
};

/// Row-normalized pseudo-labels; rows flagged hard are exact one-hot.
struct PseudoLabelBatch {
  Matrix labels;
  std::vector<bool> is_hard;
};

/// Rank-match novel prediction marginals against novel prior fractions: the
/// novel column with the k-th largest marginal sum_i Y_hat[i][j] receives the
/// k-th largest novel prior entry. Seen columns keep their own prior entries.
/// Runs of tied prior values are assigned to their columns in ascending
/// column order, so a fully balanced prior yields the identity.
std::vector<std::size_t> estimate_permutation(const Matrix& y_hat,
                                              const ClassPrior& prior);

/// Solve the batch transport problem: scale the Gibbs kernel so rows approach
/// 1/N and column j approaches prior.fractions[permutation[j]]. Zero entries
/// are clamped to 1e-30 before the power; a non-finite scaling aborts with
/// the iteration index in the message.
AssignmentMatrix sinkhorn_assign(const Matrix& y_hat, const ClassPrior& prior,
                                 const SinkhornConfig& cfg);

/// Row-normalize the plan into per-sample distributions and harden confident
/// novel assignments: a row becomes one-hot iff its argmax is a novel column
/// and the normalized max >= cfg.hard_threshold. Columns are already in model
/// output order (the permutation redirects prior mass, not matrix columns).
PseudoLabelBatch mixed_pseudo_labels(const AssignmentMatrix& assignment,
                                     const ClassPrior& prior,
                                     const SinkhornConfig& cfg);

}  // namespace owssl
