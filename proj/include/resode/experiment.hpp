#pragma once

#include "resode/data.hpp"
#include "resode/diagnostics.hpp"
#include "resode/train.hpp"

#include <optional>
#include <string>

namespace resode {

struct MoonsConfig {
  int n_train = 1000;
  int n_test = 1000;
  double noise_std = 0.1;
};

struct CsvConfig {
  std::string path;
  CsvSpec spec;
  double train_fraction = 0.8;
  bool stratified = true;
};

struct DatasetConfig {
  enum class Kind { Moons, Csv };
  Kind kind = Kind::Moons;
  MoonsConfig moons;
  CsvConfig csv;
  std::optional<bool> standardize;  // default: raw moons, standardized csv

  bool standardize_effective() const {
    return standardize.value_or(kind == Kind::Csv);
  }
};

struct SweepConfig {
  std::vector<double> h_grid = default_h_grid();
  int n_trials = 10;
  std::vector<Variant> variants = default_variants();
};

struct TrajectoryConfig {
  bool enabled = false;
  std::vector<int> layers;  // empty: default schedule for the depth
};

struct DiagnosticsConfig {
  double epsilon = 1e-3;
  int n_directions = 16;
  MarginKind margin = MarginKind::Modulus;
};

/// One JSON document drives every subcommand; unknown keys are rejected so a
/// typo cannot silently fall back to a default.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  DatasetConfig dataset;
  NetworkConfig network;  // input_dim/n_classes/seed are filled from data+seed
  TrainSpec train;
  SweepConfig sweep;
  TrajectoryConfig trajectory;
  DiagnosticsConfig diagnostics;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

struct BuiltData {
  Dataset train;
  Dataset test;
  int csv_rows_dropped = 0;
};

/// Generates or loads the configured dataset, splits it, applies
/// standardization fitted on the train split only.
BuiltData build_dataset(const ExperimentConfig& cfg);

/// Copies data-dependent fields (input_dim, n_classes, width when it was
/// left as 0, seed) into the network config and validates it.
NetworkConfig resolve_network(const ExperimentConfig& cfg,
                              const BuiltData& data);

}  // namespace resode
