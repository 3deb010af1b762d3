#pragma once

#include <cstddef>
#include <vector>

namespace owssl {

/// Target class distribution rho over seen + novel classes. fractions[j] is
/// the expected share of unlabeled samples in class j; the first seen_count
/// entries belong to classes with labeled data.
struct ClassPrior {
  std::vector<double> fractions;
  std::size_t seen_count = 0;
  std::size_t novel_count = 0;

  std::size_t num_classes() const { return seen_count + novel_count; }

  /// Validates shape, nonnegativity and sum == 1 within 1e-9; throws.
  void validate() const;

  static ClassPrior balanced(std::size_t seen, std::size_t novel);
  static ClassPrior from_counts(const std::vector<double>& counts, std::size_t seen,
                                std::size_t novel);
};

}  // namespace owssl
