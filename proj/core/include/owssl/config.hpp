#pragma once

#include <cstdint>
#include <string>

#include "owssl/data.hpp"
#include "owssl/estimate.hpp"
#include "owssl/train.hpp"

namespace owssl {

/// One declarative experiment: dataset generator, training recipe, class
/// count estimator, and output settings. Parsed from a single JSON file;
/// every field has a default, unknown keys are rejected.
struct ExperimentConfig {
  DatasetSpec dataset;
  TrainConfig train;
  EstimatorConfig estimator;
  std::string output_dir = "out";
  bool emit_confusion = false;
  std::uint64_t seed = 1234;

  /// Pushes the top-level seed into dataset/train/estimator and resolves
  /// auto fields (clip_lo = temperature, estimator k range from num_seen).
  void resolve();
  void validate() const;
};

ExperimentConfig default_config();

/// Parse JSON text over the defaults. Throws std::invalid_argument on
/// malformed input or unknown keys.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

/// Canonical JSON form; parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace owssl
