#pragma once

#include "glyco/train.hpp"
#include "glyco/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace glyco {

// Every knob of every stage, resolvable from a flat "key = value" config file
// with '#' comments; command-line flags win over file values. The resolved
// view is echoed into each output directory for provenance.
struct RunConfig {
  // synth
  int n_patients = 50;
  int days = 7;
  std::int64_t cgm_interval = 300;
  std::int64_t activity_epoch = 30;
  double noise_sd = 0.3;
  double dropout = 0.0;
  // ingest
  std::string target = "hba1c";
  std::int64_t min_cgm_len = 1445;
  // sync
  double overlap_ratio = 0.5;
  // train
  std::string experiment = "wide_and_deep";
  int epochs = 50;
  int folds = 5;
  double learning_rate = 1e-3;
  int hidden_dim = 64;
  bool wide_sigmoid = false;
  // shared
  std::uint64_t seed = 0;
  int threads = 1;

  BiomarkerTarget target_enum() const { return parse_target(target); }
  Experiment experiment_enum() const { return parse_experiment(experiment); }
  TrainConfig train_config() const;

  // Sorted key=value lines; deterministic bytes for a given config.
  std::string serialize() const;

  // Unknown keys are ConfigError; values go through the same parsers the
  // flags use.
  void apply_file(const std::filesystem::path& path);
  void apply_pair(const std::string& key, const std::string& value);
};

// Writes serialize() plus the toolkit version into dir/resolved_config.txt.
void echo_resolved_config(const RunConfig& config, const std::filesystem::path& dir);

} // namespace glyco
