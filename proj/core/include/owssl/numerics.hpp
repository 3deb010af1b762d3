#pragma once

#include <span>
#include <vector>

namespace owssl {

/// Max-stabilized softmax exp(z_j/temperature) / sum_k exp(z_k/temperature).
/// Throws on non-finite input or temperature <= 0.
std::vector<double> softmax(std::span<const double> z, double temperature = 1.0);

/// In-place variant writing the distribution over the logits buffer.
void softmax_inplace(std::span<double> z, double temperature = 1.0);

/// Shannon entropy -sum p ln p with 0 ln 0 := 0. Validates that p is a
/// probability vector (nonnegative, sums to 1 within 1e-9).
double entropy(std::span<const double> p);

bool is_prob_vector(std::span<const double> p, double tol = 1e-9);

}  // namespace owssl
