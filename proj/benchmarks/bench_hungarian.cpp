#include <benchmark/benchmark.h>

#include "owssl/eval.hpp"
#include "owssl/rng.hpp"

namespace {

void BM_Hungarian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  owssl::RngStream rng(3, 0);
  owssl::Matrix cost(n, n);
  for (double& v : cost.data()) v = rng.uniform(0.0, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(owssl::hungarian(cost));
  }
}

}  // namespace

BENCHMARK(BM_Hungarian)->Arg(8)->Arg(32)->Arg(128);
