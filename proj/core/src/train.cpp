#include "owssl/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "owssl/log.hpp"
#include "owssl/numerics.hpp"

namespace owssl {

namespace {

enum StreamTag : std::uint64_t {
  kInitTag = 0x01,
  kShuffleUnlabeledTag = 0x02,
  kShuffleLabeledTag = 0x03,
  kView1Tag = 0x04,
  kView2Tag = 0x05,
  kMixupTag = 0x06,
  kUncertaintyTag = 0x07,
};

void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.next_below(i)]);
}

std::vector<double> predict_row(const ModelParams& params, std::span<const double> x) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  return softmax(forward(params, m).row(0));
}

std::size_t head_novel_count(const SplitDataset& data, const TrainConfig& cfg) {
  if (cfg.head_novel_override >= 0)
    return static_cast<std::size_t>(cfg.head_novel_override);
  return data.num_novel;
}

ClassPrior initial_prior(const SplitDataset& data, const TrainConfig& cfg) {
  const std::size_t seen = data.num_seen;
  const std::size_t novel = head_novel_count(data, cfg);
  if (cfg.prior_mode == PriorMode::kOracle && seen + novel == data.num_classes()) {
    std::vector<double> counts(seen + novel, 0.0);
    for (int g : data.unlabeled_gt) counts[static_cast<std::size_t>(g)] += 1.0;
    if (std::accumulate(counts.begin(), counts.end(), 0.0) > 0.0)
      return ClassPrior::from_counts(counts, seen, novel);
  }
  if (cfg.prior_mode == PriorMode::kOracle && seen + novel != data.num_classes())
    log_debug("oracle prior unavailable for an over/under-provisioned head; "
              "falling back to balanced");
  return ClassPrior::balanced(seen, novel);
}

// Slice of the prior over novel classes only, renormalized; used in NCD mode
// where pseudo-labels cover only novel columns.
ClassPrior novel_only_prior(const ClassPrior& prior) {
  ClassPrior out;
  out.seen_count = 0;
  out.novel_count = prior.novel_count;
  out.fractions.assign(prior.fractions.begin() + static_cast<long>(prior.seen_count),
                       prior.fractions.end());
  const double sum = std::accumulate(out.fractions.begin(), out.fractions.end(), 0.0);
  if (!(sum > 0.0))
    throw std::invalid_argument("ncd mode: prior has no mass on novel classes");
  for (double& f : out.fractions) f /= sum;
  return out;
}

Matrix augment_rows(const SplitDataset& data, const std::vector<std::size_t>& idx,
                    const AugmentConfig& cfg, RngStream& rng) {
  Matrix out(idx.size(), data.unlabeled_x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::vector<double> v = augment(data.unlabeled_x.row(idx[i]), cfg, rng);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

// Pseudo-labels for one view's predictions, full head width. In NCD mode the
// transport runs over the novel block only and the result is re-embedded.
Matrix pseudo_labels_for(const Matrix& probs, const ClassPrior& prior,
                         const TrainConfig& cfg) {
  if (!cfg.ncd_mode) {
    const AssignmentMatrix a = sinkhorn_assign(probs, prior, cfg.sinkhorn);
    return mixed_pseudo_labels(a, prior, cfg.sinkhorn).labels;
  }
  const std::size_t seen = prior.seen_count;
  const std::size_t novel = prior.novel_count;
  if (novel == 0) throw std::invalid_argument("ncd mode: no novel classes");
  Matrix novel_probs(probs.rows(), novel);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < novel; ++j) sum += probs(i, seen + j);
    sum = std::max(sum, 1e-30);
    for (std::size_t j = 0; j < novel; ++j)
      novel_probs(i, j) = probs(i, seen + j) / sum;
  }
  const ClassPrior np = novel_only_prior(prior);
  const AssignmentMatrix a = sinkhorn_assign(novel_probs, np, cfg.sinkhorn);
  const Matrix novel_labels = mixed_pseudo_labels(a, np, cfg.sinkhorn).labels;
  Matrix full(probs.rows(), prior.num_classes());
  for (std::size_t i = 0; i < probs.rows(); ++i)
    for (std::size_t j = 0; j < novel; ++j) full(i, seen + j) = novel_labels(i, j);
  return full;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  if (prior_update_interval < 1)
    throw std::invalid_argument("TrainConfig: prior_update_interval must be >= 1");
  if (!(default_temperature > 0.0))
    throw std::invalid_argument("TrainConfig: temperature must be > 0");
  if (!(mixup_gamma > 0.0)) throw std::invalid_argument("TrainConfig: mixup_gamma must be > 0");
  sinkhorn.validate();
  uncertainty.validate();
  augment.validate();
}

TrainState init_train_state(const SplitDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  TrainState state;
  const std::size_t head = data.num_seen + head_novel_count(data, cfg);

  // Coordinate RMS of the training features keeps first-layer activations
  // near unit scale at init regardless of class separation.
  double sq = 0.0;
  std::size_t n_coords = 0;
  for (const Matrix* m : {&data.unlabeled_x, &data.labeled_x}) {
    for (double v : m->data()) sq += v * v;
    n_coords += m->data().size();
  }
  const double input_scale =
      n_coords > 0 ? std::max(1e-6, std::sqrt(sq / static_cast<double>(n_coords))) : 1.0;

  state.params = init_params(data.class_means.cols(), cfg.hidden_width, head,
                             RngStream(cfg.seed, derive_stream({kInitTag})), input_scale);
  state.opt = init_optimizer(state.params, cfg.momentum, cfg.weight_decay);
  state.current_prior = initial_prior(data, cfg);
  state.uncertainties.default_temperature = cfg.default_temperature;
  state.uncertainties.labeled.assign(data.labeled_x.rows(), cfg.default_temperature);
  state.uncertainties.unlabeled.assign(data.unlabeled_x.rows(), cfg.default_temperature);
  return state;
}

StepBatch assemble_step_batch(const ModelParams& params, const SplitDataset& data,
                              const std::vector<std::size_t>& labeled_idx,
                              const std::vector<std::size_t>& unlabeled_idx,
                              const UncertaintyStore& uncertainties,
                              const ClassPrior& prior, const TrainConfig& cfg,
                              RngStream view1_rng, RngStream view2_rng) {
  const std::size_t c = prior.num_classes();
  const std::size_t d = data.labeled_x.cols();
  const std::size_t bl = labeled_idx.size();
  const std::size_t bu = unlabeled_idx.size();

  StepBatch batch;
  batch.x = Matrix(bl + 2 * bu, d);
  batch.y = Matrix(bl + 2 * bu, c);
  batch.u.resize(bl + 2 * bu);

  for (std::size_t i = 0; i < bl; ++i) {
    const auto src = data.labeled_x.row(labeled_idx[i]);
    std::copy(src.begin(), src.end(), batch.x.row(i).begin());
    batch.y(i, static_cast<std::size_t>(data.labeled_class[labeled_idx[i]])) = 1.0;
    batch.u[i] = uncertainties.labeled[labeled_idx[i]];
  }
  if (bu == 0) return batch;  // supervised-only step

  const Matrix view1 = augment_rows(data, unlabeled_idx, cfg.augment, view1_rng);
  const Matrix view2 = augment_rows(data, unlabeled_idx, cfg.augment, view2_rng);
  const Matrix probs1 = predict_batch(params, view1).probs;
  const Matrix probs2 = predict_batch(params, view2).probs;

  // Cross pseudo-labeling: each view is supervised by the other's labels.
  const Matrix labels_v1 = pseudo_labels_for(probs2, prior, cfg);
  const Matrix labels_v2 = pseudo_labels_for(probs1, prior, cfg);

  for (std::size_t i = 0; i < bu; ++i) {
    const double ui = uncertainties.unlabeled[unlabeled_idx[i]];
    std::copy(view1.row(i).begin(), view1.row(i).end(), batch.x.row(bl + i).begin());
    std::copy(labels_v1.row(i).begin(), labels_v1.row(i).end(),
              batch.y.row(bl + i).begin());
    batch.u[bl + i] = ui;
    std::copy(view2.row(i).begin(), view2.row(i).end(),
              batch.x.row(bl + bu + i).begin());
    std::copy(labels_v2.row(i).begin(), labels_v2.row(i).end(),
              batch.y.row(bl + bu + i).begin());
    batch.u[bl + bu + i] = ui;
  }
  return batch;
}

double train_step(TrainState& state, const SplitDataset& data,
                  const std::vector<std::size_t>& labeled_idx,
                  const std::vector<std::size_t>& unlabeled_idx, const TrainConfig& cfg,
                  double lr, RngStream view1_rng, RngStream view2_rng,
                  RngStream mixup_rng) {
  StepBatch batch =
      assemble_step_batch(state.params, data, labeled_idx, unlabeled_idx,
                          state.uncertainties, state.current_prior, cfg, view1_rng,
                          view2_rng);
  mixup(batch.x, batch.y, batch.u, cfg.mixup_gamma, mixup_rng);
  auto [loss, grads] = ce_loss_and_grad(state.params, batch.x, batch.y, batch.u);
  sgd_step(state.params, grads, state.opt, lr);
  return loss;
}

void refresh_uncertainties(TrainState& state, const SplitDataset& data,
                           const TrainConfig& cfg, std::size_t epoch) {
  const std::size_t n = data.unlabeled_x.rows();
  if (n == 0) return;
  std::vector<double> raw(n, 0.0);
  const PredictFn predict = [&](std::span<const double> x) {
    return predict_row(state.params, x);
  };
  const AugmentFn augmenter = [&](std::span<const double> x, RngStream& rng) {
    return augment(x, cfg.augment, rng);
  };
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(cfg.seed, derive_stream({kUncertaintyTag, epoch, i}));
    const std::vector<double> var =
        mc_variance(predict, data.unlabeled_x.row(i), augmenter, cfg.uncertainty, rng);
    std::size_t argmax_class = 0;
    if (cfg.uncertainty.reduce == UncertaintyReduce::kArgmaxClass) {
      const std::vector<double> p = predict_row(state.params, data.unlabeled_x.row(i));
      argmax_class = static_cast<std::size_t>(
          std::max_element(p.begin(), p.end()) - p.begin());
    }
    raw[i] = reduce_uncertainty(var, cfg.uncertainty.reduce, argmax_class);
  }
  state.uncertainties.unlabeled = normalize_and_clip(raw, cfg.uncertainty);
}

ClassPrior update_prior(const std::vector<int>& unlabeled_argmax,
                        std::size_t seen_count, std::size_t novel_count) {
  const std::size_t c = seen_count + novel_count;
  if (c == 0 || unlabeled_argmax.empty())
    throw std::invalid_argument("update_prior: empty input");
  std::vector<double> fractions(c, 0.0);
  for (int p : unlabeled_argmax) {
    if (p < 0 || static_cast<std::size_t>(p) >= c)
      throw std::invalid_argument("update_prior: prediction out of range");
    fractions[static_cast<std::size_t>(p)] += 1.0;
  }
  for (double& f : fractions) f /= static_cast<double>(unlabeled_argmax.size());

  // Floor at 1/(10C): floored entries keep exactly the floor, the rest are
  // rescaled to the remaining mass (repeated if the rescale drags new
  // entries under).
  const double floor = 1.0 / (10.0 * static_cast<double>(c));
  std::vector<bool> fixed(c, false);
  for (;;) {
    std::size_t n_fixed = 0;
    double unfixed_mass = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (fixed[j]) {
        ++n_fixed;
      } else {
        unfixed_mass += fractions[j];
      }
    }
    const double target = 1.0 - floor * static_cast<double>(n_fixed);
    const double scale = unfixed_mass > 0.0 ? target / unfixed_mass : 0.0;
    bool changed = false;
    for (std::size_t j = 0; j < c; ++j) {
      if (!fixed[j] && fractions[j] * scale < floor) {
        fixed[j] = true;
        changed = true;
      }
    }
    if (!changed) {
      for (std::size_t j = 0; j < c; ++j)
        fractions[j] = fixed[j] ? floor : fractions[j] * scale;
      break;
    }
  }

  ClassPrior prior;
  prior.seen_count = seen_count;
  prior.novel_count = novel_count;
  prior.fractions = std::move(fractions);
  prior.validate();
  return prior;
}

std::vector<int> predict_classes(const ModelParams& params, const Matrix& x) {
  const Matrix logits = forward(params, x);
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto r = logits.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

TrainResult train(const SplitDataset& data, const TrainConfig& cfg) {
  TrainState state = init_train_state(data, cfg);
  const std::size_t head_novel = state.current_prior.novel_count;

  const std::size_t n_l = data.labeled_x.rows();
  const std::size_t n_u = data.unlabeled_x.rows();
  if (n_l == 0) throw std::invalid_argument("train: no labeled data");

  LrSchedule schedule;
  schedule.base_lr = cfg.base_lr;
  schedule.total_epochs = cfg.epochs;
  schedule.warmup_epochs =
      cfg.epochs > 0 ? std::min(cfg.warmup_epochs, cfg.epochs - 1) : 0;

  // One labeled batch per step at the same nominal batch size (capped by the
  // labeled pool), cycling a per-epoch shuffle. Equal-size labeled and
  // unlabeled batches keep the labeled anchor strong enough to pin seen
  // classes to their own columns while pseudo-labels organize the rest.
  const std::size_t labeled_bs = std::min(n_l, cfg.batch_size);

  std::vector<std::size_t> unlabeled_order(n_u);
  std::iota(unlabeled_order.begin(), unlabeled_order.end(), 0);
  std::vector<std::size_t> labeled_order(n_l);
  std::iota(labeled_order.begin(), labeled_order.end(), 0);

  auto evaluate = [&]() {
    const std::vector<int> pred = predict_classes(state.params, data.test_x);
    return open_world_report(pred, data.test_gt, data.num_seen, head_novel);
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(schedule, epoch);
    {
      RngStream su(cfg.seed, derive_stream({kShuffleUnlabeledTag, epoch}));
      shuffle_indices(unlabeled_order, su);
      RngStream sl(cfg.seed, derive_stream({kShuffleLabeledTag, epoch}));
      shuffle_indices(labeled_order, sl);
    }

    const std::size_t steps =
        n_u > 0 ? std::max<std::size_t>(1, n_u / cfg.batch_size)
                : std::max<std::size_t>(1, n_l / labeled_bs);

    double loss_sum = 0.0;
    std::size_t labeled_cursor = 0;
    for (std::size_t step = 0; step < steps; ++step) {
      std::vector<std::size_t> u_idx;
      if (n_u > 0) {
        const std::size_t lo = step * cfg.batch_size;
        const std::size_t hi = std::min(lo + cfg.batch_size, n_u);
        u_idx.assign(unlabeled_order.begin() + static_cast<long>(lo),
                     unlabeled_order.begin() + static_cast<long>(hi));
      }
      std::vector<std::size_t> l_idx(labeled_bs);
      for (std::size_t i = 0; i < labeled_bs; ++i)
        l_idx[i] = labeled_order[(labeled_cursor + i) % n_l];
      labeled_cursor = (labeled_cursor + labeled_bs) % n_l;

      loss_sum += train_step(
          state, data, l_idx, u_idx, cfg, lr,
          RngStream(cfg.seed, derive_stream({kView1Tag, epoch, step})),
          RngStream(cfg.seed, derive_stream({kView2Tag, epoch, step})),
          RngStream(cfg.seed, derive_stream({kMixupTag, epoch, step})));
    }

    refresh_uncertainties(state, data, cfg, epoch);

    const std::size_t prior_start =
        cfg.prior_update_start >= 0 ? static_cast<std::size_t>(cfg.prior_update_start)
                                    : cfg.epochs / 2;
    if (cfg.prior_mode == PriorMode::kEstimated && n_u > 0 && epoch + 1 >= prior_start &&
        (epoch + 1) % cfg.prior_update_interval == 0) {
      const std::vector<int> preds = predict_classes(state.params, data.unlabeled_x);
      state.current_prior =
          update_prior(preds, state.current_prior.seen_count, head_novel);
    }

    const EvalReport report = evaluate();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.loss = loss_sum / static_cast<double>(steps);
    rec.seen_acc = report.seen_acc;
    rec.novel_acc = report.novel_acc;
    rec.all_acc = report.all_acc;
    rec.prior = state.current_prior.fractions;
    state.history.push_back(rec);
    state.epoch = epoch + 1;
    log_debug("epoch " + std::to_string(epoch) + " loss " + std::to_string(rec.loss) +
              " all_acc " + std::to_string(rec.all_acc));
  }

  TrainResult result;
  result.final_report = evaluate();
  result.params = std::move(state.params);
  result.history = std::move(state.history);
  result.final_prior = std::move(state.current_prior);
  return result;
}

}  // namespace owssl
