#include <benchmark/benchmark.h>

#include "owssl/data.hpp"
#include "owssl/estimate.hpp"

namespace {

void BM_Kmeans(benchmark::State& state) {
  owssl::DatasetSpec spec;
  spec.num_seen = 5;
  spec.num_novel = 5;
  spec.samples_per_class = 150;
  spec.class_sep = 4.0;
  const owssl::SplitDataset data = owssl::generate(spec);
  const auto k = static_cast<std::size_t>(state.range(0));
  std::uint64_t run = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        owssl::kmeans(data.unlabeled_x, k, owssl::RngStream(17, run++), 300));
  }
}

}  // namespace

BENCHMARK(BM_Kmeans)->Arg(5)->Arg(10)->Arg(20);
