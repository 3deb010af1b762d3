#include <benchmark/benchmark.h>

#include "owssl/numerics.hpp"
#include "owssl/rng.hpp"
#include "owssl/sinkhorn.hpp"

namespace {

owssl::Matrix random_predictions(std::size_t n, std::size_t c, owssl::RngStream& rng) {
  owssl::Matrix y(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = y.row(i);
    for (double& v : row) v = rng.uniform(-4.0, 4.0);
    owssl::softmax_inplace(row);
  }
  return y;
}

void BM_SinkhornAssign(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  owssl::RngStream rng(1, 0);
  const owssl::Matrix y = random_predictions(n, c, rng);
  const owssl::ClassPrior prior = owssl::ClassPrior::balanced(c / 2, c - c / 2);
  owssl::SinkhornConfig cfg;
  cfg.iterations = static_cast<std::size_t>(state.range(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(owssl::sinkhorn_assign(y, prior, cfg));
  }
}

}  // namespace

BENCHMARK(BM_SinkhornAssign)
    ->Args({256, 6, 3})
    ->Args({256, 32, 3})
    ->Args({512, 32, 200});
