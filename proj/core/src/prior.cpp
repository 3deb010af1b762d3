#include "owssl/prior.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace owssl {

void ClassPrior::validate() const {
  if (fractions.size() != num_classes())
    throw std::invalid_argument("ClassPrior: length != seen_count + novel_count");
  if (fractions.empty()) throw std::invalid_argument("ClassPrior: empty");
  double sum = 0.0;
  for (double f : fractions) {
    if (!std::isfinite(f) || f < 0.0)
      throw std::invalid_argument("ClassPrior: fractions must be finite and >= 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("ClassPrior: fractions must sum to 1");
}

ClassPrior ClassPrior::balanced(std::size_t seen, std::size_t novel) {
  ClassPrior p;
  p.seen_count = seen;
  p.novel_count = novel;
  const std::size_t c = seen + novel;
  if (c == 0) throw std::invalid_argument("ClassPrior: no classes");
  p.fractions.assign(c, 1.0 / static_cast<double>(c));
  return p;
}

ClassPrior ClassPrior::from_counts(const std::vector<double>& counts, std::size_t seen,
                                   std::size_t novel) {
  if (counts.size() != seen + novel)
    throw std::invalid_argument("ClassPrior: counts length mismatch");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("ClassPrior: no mass in counts");
  ClassPrior p;
  p.seen_count = seen;
  p.novel_count = novel;
  p.fractions.resize(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) p.fractions[j] = counts[j] / total;
  p.validate();
  return p;
}

}  // namespace owssl
