#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "owssl/data.hpp"
#include "owssl/eval.hpp"
#include "owssl/matrix.hpp"
#include "owssl/model.hpp"
#include "owssl/prior.hpp"
#include "owssl/rng.hpp"
#include "owssl/sinkhorn.hpp"
#include "owssl/uncertainty.hpp"

namespace owssl {

enum class PriorMode { kOracle, kBalanced, kEstimated };

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  SinkhornConfig sinkhorn;
  UncertaintyConfig uncertainty;
  AugmentConfig augment;
  double default_temperature = 0.1;
  double mixup_gamma = 0.75;
  double base_lr = 0.1;
  std::size_t warmup_epochs = 10;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t hidden_width = 64;  // 0 => linear head
  PriorMode prior_mode = PriorMode::kOracle;
  std::size_t prior_update_interval = 10;
  long prior_update_start = -1;  // first update epoch; -1 => epochs/2
  bool ncd_mode = false;
  long head_novel_override = -1;  // -1 => use the dataset's novel count
  std::uint64_t seed = 1234;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double seen_acc = 0.0;
  double novel_acc = 0.0;
  double all_acc = 0.0;
  std::vector<double> prior;
};

struct TrainState {
  ModelParams params;
  OptimizerState opt;
  UncertaintyStore uncertainties;
  ClassPrior current_prior;
  std::size_t epoch = 0;
  std::vector<EpochRecord> history;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  EvalReport final_report;
  ClassPrior final_prior;
};

/// One step's assembled training rows before mixup: labeled samples plus the
/// two cross pseudo-labeled unlabeled views.
struct StepBatch {
  Matrix x;
  Matrix y;
  std::vector<double> u;
};

TrainState init_train_state(const SplitDataset& data, const TrainConfig& cfg);

/// Builds [labeled; view1; view2] with labels [one-hot; PL(view2 preds);
/// PL(view1 preds)] and matching uncertainties. Pure given the two view
/// streams; swapping them permutes the views and their labels together.
StepBatch assemble_step_batch(const ModelParams& params, const SplitDataset& data,
                              const std::vector<std::size_t>& labeled_idx,
                              const std::vector<std::size_t>& unlabeled_idx,
                              const UncertaintyStore& uncertainties,
                              const ClassPrior& prior, const TrainConfig& cfg,
                              RngStream view1_rng, RngStream view2_rng);

/// Assemble, mixup, and one SGD update; returns the step loss.
double train_step(TrainState& state, const SplitDataset& data,
                  const std::vector<std::size_t>& labeled_idx,
                  const std::vector<std::size_t>& unlabeled_idx, const TrainConfig& cfg,
                  double lr, RngStream view1_rng, RngStream view2_rng,
                  RngStream mixup_rng);

/// Epoch-boundary refresh of unlabeled uncertainties (labeled entries keep
/// the default temperature). Per-sample streams make the result independent
/// of traversal order.
void refresh_uncertainties(TrainState& state, const SplitDataset& data,
                           const TrainConfig& cfg, std::size_t epoch);

/// Posterior class fractions from unlabeled argmax counts, floored at
/// 1/(10C): floored entries get exactly the floor and the remaining mass is
/// rescaled over the rest.
ClassPrior update_prior(const std::vector<int>& unlabeled_argmax,
                        std::size_t seen_count, std::size_t novel_count);

/// Test-time prediction: argmax of the plain softmax (equivalently of the
/// logits).
std::vector<int> predict_classes(const ModelParams& params, const Matrix& x);

TrainResult train(const SplitDataset& data, const TrainConfig& cfg);

}  // namespace owssl
