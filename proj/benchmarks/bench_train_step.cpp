#include <benchmark/benchmark.h>

#include <numeric>

#include "owssl/data.hpp"
#include "owssl/train.hpp"

namespace {

void BM_TrainStep(benchmark::State& state) {
  owssl::DatasetSpec spec;
  const owssl::SplitDataset data = owssl::generate(spec);
  owssl::TrainConfig cfg;
  cfg.batch_size = static_cast<std::size_t>(state.range(0));
  owssl::TrainState ts = owssl::init_train_state(data, cfg);

  std::vector<std::size_t> l_idx(data.labeled_x.rows() < 16 ? data.labeled_x.rows() : 16);
  std::iota(l_idx.begin(), l_idx.end(), 0);
  std::vector<std::size_t> u_idx(cfg.batch_size);
  std::iota(u_idx.begin(), u_idx.end(), 0);

  std::uint64_t step = 0;
  for (auto _ : state) {
    owssl::train_step(ts, data, l_idx, u_idx, cfg, 0.01,
                      owssl::RngStream(cfg.seed, owssl::derive_stream({1, step})),
                      owssl::RngStream(cfg.seed, owssl::derive_stream({2, step})),
                      owssl::RngStream(cfg.seed, owssl::derive_stream({3, step})));
    ++step;
  }
}

}  // namespace

BENCHMARK(BM_TrainStep)->Arg(64)->Arg(256);
