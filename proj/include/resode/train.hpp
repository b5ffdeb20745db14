#pragma once

#include "resode/data.hpp"
#include "resode/nn.hpp"

#include <string>

namespace resode {

struct TrainSpec {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.0;  // SGD momentum, in [0, 1)
};

void validate(const TrainSpec& spec);

struct History {
  std::vector<double> train_loss;  // one entry per completed epoch
  std::vector<double> train_acc;
  std::vector<double> test_acc;
  bool diverged = false;
  int diverged_epoch = -1;  // 1-based epoch in which the guard tripped
  int diverged_layer = -1;
};

struct TrainResult {
  Model model;
  History history;
};

/// SGD over shuffled mini-batches. A tripped divergence guard ends training
/// early; the history up to the last completed epoch is returned with the
/// diverged flag set.
TrainResult train(const NetworkConfig& cfg, const TrainSpec& spec,
                  const Dataset& train_set, const Dataset& test_set);

/// Argmax-of-logits accuracy, batch norm in inference mode.
double evaluate(const Model& m, const NetworkConfig& cfg, const Dataset& d);

// ----- h sweep -----------------------------------------------------------------

enum class Variant { Residual, ResidualBatchNorm, Shrinkage };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);
NetworkConfig apply_variant(NetworkConfig cfg, Variant v);

struct TrialResult {
  std::uint64_t seed = 0;
  bool diverged = false;
  bool has_accuracy = false;  // at least one test evaluation completed
  double accuracy = 0.0;      // last successful test evaluation
};

struct SweepCell {
  double h = 0.0;
  Variant variant = Variant::Residual;
  std::vector<TrialResult> trials;
  double mean = 0.0;    // over trials with an accuracy (NaN when none)
  double stddev = 0.0;  // population std over the same trials
  int completed = 0;    // trials that finished without divergence
  int diverged_count = 0;
};

struct SweepReport {
  std::vector<double> h_values;
  std::vector<Variant> variants;
  std::vector<SweepCell> cells;  // ordered by (h, variant)
};

inline std::vector<double> default_h_grid() {
  return {0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
}

inline std::vector<Variant> default_variants() {
  return {Variant::Residual, Variant::ResidualBatchNorm, Variant::Shrinkage};
}

/// Runs n_trials per (h, variant) cell; trial t uses seed master_seed ^ t so
/// trials are paired across cells. Diverged trials keep the accuracy of their
/// last completed evaluation when one exists, and are always counted.
SweepReport sweep(const NetworkConfig& cfg_template, const TrainSpec& spec,
                  const std::vector<double>& h_values, int n_trials,
                  const Dataset& train_set, const Dataset& test_set,
                  std::uint64_t master_seed,
                  const std::vector<Variant>& variants = default_variants());

}  // namespace resode
