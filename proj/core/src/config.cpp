#include "owssl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace owssl {

namespace {

using nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

void check_keys(const ordered_json& obj, const std::string& scope,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(scope + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) fail("unknown key '" + key + "' in " + scope);
  }
}

template <typename T>
void read(const ordered_json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(std::string("bad value for '") + key + "'");
  }
}

std::string prior_mode_name(PriorMode mode) {
  switch (mode) {
    case PriorMode::kOracle: return "oracle";
    case PriorMode::kBalanced: return "balanced";
    case PriorMode::kEstimated: return "estimated";
  }
  return "oracle";
}

PriorMode prior_mode_from(const std::string& name) {
  if (name == "oracle") return PriorMode::kOracle;
  if (name == "balanced") return PriorMode::kBalanced;
  if (name == "estimated") return PriorMode::kEstimated;
  fail("prior_mode must be oracle|balanced|estimated");
}

std::string reduce_name(UncertaintyReduce reduce) {
  switch (reduce) {
    case UncertaintyReduce::kMean: return "mean";
    case UncertaintyReduce::kMax: return "max";
    case UncertaintyReduce::kArgmaxClass: return "argmax_class";
  }
  return "mean";
}

UncertaintyReduce reduce_from(const std::string& name) {
  if (name == "mean") return UncertaintyReduce::kMean;
  if (name == "max") return UncertaintyReduce::kMax;
  if (name == "argmax_class") return UncertaintyReduce::kArgmaxClass;
  fail("uncertainty_reduce must be mean|max|argmax_class");
}

void apply_dataset(const ordered_json& obj, DatasetSpec& spec) {
  check_keys(obj, "dataset",
             {"dim", "num_seen", "num_novel", "samples_per_class", "labeled_fraction",
              "imbalance_factor", "class_sep", "test_per_class"});
  read(obj, "dim", spec.dim);
  read(obj, "num_seen", spec.num_seen);
  read(obj, "num_novel", spec.num_novel);
  read(obj, "samples_per_class", spec.samples_per_class);
  read(obj, "labeled_fraction", spec.labeled_fraction);
  read(obj, "imbalance_factor", spec.imbalance_factor);
  read(obj, "class_sep", spec.class_sep);
  read(obj, "test_per_class", spec.test_per_class);
}

void apply_augment(const ordered_json& obj, AugmentConfig& cfg) {
  check_keys(obj, "augment", {"noise_sigma", "scale_lo", "scale_hi", "mask_prob"});
  read(obj, "noise_sigma", cfg.noise_sigma);
  read(obj, "scale_lo", cfg.scale_lo);
  read(obj, "scale_hi", cfg.scale_hi);
  read(obj, "mask_prob", cfg.mask_prob);
}

void apply_train(const ordered_json& obj, TrainConfig& cfg) {
  check_keys(obj, "train",
             {"epochs", "batch_size", "lambda", "sinkhorn_iterations", "hard_threshold",
              "temperature", "clip_lo", "clip_hi", "mc_samples", "uncertainty_reduce",
              "mixup_gamma", "base_lr", "warmup_epochs", "momentum", "weight_decay",
              "hidden_width", "prior_mode", "prior_update_interval", "prior_update_start", "ncd_mode",
              "head_novel_override"});
  read(obj, "epochs", cfg.epochs);
  read(obj, "batch_size", cfg.batch_size);
  read(obj, "lambda", cfg.sinkhorn.lambda);
  read(obj, "sinkhorn_iterations", cfg.sinkhorn.iterations);
  read(obj, "hard_threshold", cfg.sinkhorn.hard_threshold);
  read(obj, "temperature", cfg.default_temperature);
  read(obj, "clip_lo", cfg.uncertainty.clip_lo);
  read(obj, "clip_hi", cfg.uncertainty.clip_hi);
  read(obj, "mc_samples", cfg.uncertainty.mc_samples);
  if (obj.contains("uncertainty_reduce"))
    cfg.uncertainty.reduce = reduce_from(obj.at("uncertainty_reduce").get<std::string>());
  read(obj, "mixup_gamma", cfg.mixup_gamma);
  read(obj, "base_lr", cfg.base_lr);
  read(obj, "warmup_epochs", cfg.warmup_epochs);
  read(obj, "momentum", cfg.momentum);
  read(obj, "weight_decay", cfg.weight_decay);
  read(obj, "hidden_width", cfg.hidden_width);
  if (obj.contains("prior_mode"))
    cfg.prior_mode = prior_mode_from(obj.at("prior_mode").get<std::string>());
  read(obj, "prior_update_interval", cfg.prior_update_interval);
  read(obj, "prior_update_start", cfg.prior_update_start);
  read(obj, "ncd_mode", cfg.ncd_mode);
  read(obj, "head_novel_override", cfg.head_novel_override);
}

void apply_estimator(const ordered_json& obj, EstimatorConfig& cfg) {
  check_keys(obj, "estimator",
             {"k_min", "k_max", "runs_per_k", "top_values", "max_lloyd_iters"});
  read(obj, "k_min", cfg.k_min);
  read(obj, "k_max", cfg.k_max);
  read(obj, "runs_per_k", cfg.runs_per_k);
  read(obj, "top_values", cfg.top_values);
  read(obj, "max_lloyd_iters", cfg.max_lloyd_iters);
}

}  // namespace

void ExperimentConfig::resolve() {
  dataset.seed = seed;
  train.seed = seed;
  estimator.seed = seed;
  if (train.uncertainty.clip_lo <= 0.0)
    train.uncertainty.clip_lo = train.default_temperature;
  if (estimator.k_min == 0) estimator.k_min = dataset.num_seen;
  if (estimator.k_max == 0) estimator.k_max = 4 * dataset.num_seen;
}

void ExperimentConfig::validate() const {
  dataset.validate();
  train.validate();
  estimator.validate();
  if (output_dir.empty()) throw std::invalid_argument("config: output_dir is empty");
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.estimator.k_min = 0;  // auto: num_seen
  cfg.estimator.k_max = 0;  // auto: 4 * num_seen
  cfg.resolve();
  return cfg;
}

ExperimentConfig parse_config(const std::string& json_text) {
  ordered_json root;
  try {
    root = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "top level",
             {"schema_version", "seed", "output_dir", "emit_confusion", "dataset",
              "augment", "train", "estimator"});
  if (root.contains("schema_version") &&
      root.at("schema_version").get<int>() != kSchemaVersion)
    fail("unsupported schema_version");

  ExperimentConfig cfg;
  cfg.estimator.k_min = 0;
  cfg.estimator.k_max = 0;
  read(root, "seed", cfg.seed);
  read(root, "output_dir", cfg.output_dir);
  read(root, "emit_confusion", cfg.emit_confusion);
  if (root.contains("dataset")) apply_dataset(root.at("dataset"), cfg.dataset);
  if (root.contains("augment")) apply_augment(root.at("augment"), cfg.train.augment);
  if (root.contains("train")) apply_train(root.at("train"), cfg.train);
  if (root.contains("estimator")) apply_estimator(root.at("estimator"), cfg.estimator);
  cfg.resolve();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  ordered_json root;
  root["schema_version"] = kSchemaVersion;
  root["seed"] = config.seed;
  root["output_dir"] = config.output_dir;
  root["emit_confusion"] = config.emit_confusion;
  root["dataset"] = {{"dim", config.dataset.dim},
                     {"num_seen", config.dataset.num_seen},
                     {"num_novel", config.dataset.num_novel},
                     {"samples_per_class", config.dataset.samples_per_class},
                     {"labeled_fraction", config.dataset.labeled_fraction},
                     {"imbalance_factor", config.dataset.imbalance_factor},
                     {"class_sep", config.dataset.class_sep},
                     {"test_per_class", config.dataset.test_per_class}};
  root["augment"] = {{"noise_sigma", config.train.augment.noise_sigma},
                     {"scale_lo", config.train.augment.scale_lo},
                     {"scale_hi", config.train.augment.scale_hi},
                     {"mask_prob", config.train.augment.mask_prob}};
  root["train"] = {{"epochs", config.train.epochs},
                   {"batch_size", config.train.batch_size},
                   {"lambda", config.train.sinkhorn.lambda},
                   {"sinkhorn_iterations", config.train.sinkhorn.iterations},
                   {"hard_threshold", config.train.sinkhorn.hard_threshold},
                   {"temperature", config.train.default_temperature},
                   {"clip_lo", config.train.uncertainty.clip_lo},
                   {"clip_hi", config.train.uncertainty.clip_hi},
                   {"mc_samples", config.train.uncertainty.mc_samples},
                   {"uncertainty_reduce", reduce_name(config.train.uncertainty.reduce)},
                   {"mixup_gamma", config.train.mixup_gamma},
                   {"base_lr", config.train.base_lr},
                   {"warmup_epochs", config.train.warmup_epochs},
                   {"momentum", config.train.momentum},
                   {"weight_decay", config.train.weight_decay},
                   {"hidden_width", config.train.hidden_width},
                   {"prior_mode", prior_mode_name(config.train.prior_mode)},
                   {"prior_update_interval", config.train.prior_update_interval},
                   {"prior_update_start", config.train.prior_update_start},
                   {"ncd_mode", config.train.ncd_mode},
                   {"head_novel_override", config.train.head_novel_override}};
  root["estimator"] = {{"k_min", config.estimator.k_min},
                       {"k_max", config.estimator.k_max},
                       {"runs_per_k", config.estimator.runs_per_k},
                       {"top_values", config.estimator.top_values},
                       {"max_lloyd_iters", config.estimator.max_lloyd_iters}};
  return root.dump(2) + "\n";
}

}  // namespace owssl
