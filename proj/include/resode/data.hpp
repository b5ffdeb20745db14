#pragma once

#include "resode/linalg.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace resode {

struct Standardization {
  Vector mean;
  Vector std;  // population std; 0 marks a constant column
};

struct Dataset {
  Matrix features;  // n x d
  std::vector<int> labels;
  std::vector<std::string> class_names;  // index = class id; may be empty
  std::optional<Standardization> standardization;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  int n_classes() const;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = true;
};

/// Two interleaved unit-radius half-moons with isotropic Gaussian noise:
/// class 0 on the upper arc, class 1 on the lower arc offset by (1.0, -0.5).
/// Deterministic per (n, noise_std, seed).
Dataset generate_moons(int n, double noise_std, std::uint64_t seed);

// ----- CSV ingestion ----------------------------------------------------------

enum class ColumnEncoding { Numeric, OneHot, Integer };

/// Inclusive numeric range mapping label values onto one class.
struct LabelBin {
  std::string name;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct CsvSpec {
  bool header = true;
  std::string label_column;  // column name, or decimal index when unnamed
  std::map<std::string, ColumnEncoding> encodings;  // keyed like label_column
  std::vector<std::string> missing_markers = {"", "?", "NA"};
  std::vector<LabelBin> label_bins;  // empty: distinct values become classes
};

struct CsvLoadReport {
  int rows_read = 0;
  int rows_dropped = 0;  // rows with missing values
};

/// Rows with missing values are dropped (counted in the report). Categorical
/// feature columns must be declared in spec.encodings; any other cell that
/// fails numeric parsing is an error.
Dataset load_csv(const std::string& path, const CsvSpec& spec,
                 CsvLoadReport* report = nullptr);

// ----- preprocessing -----------------------------------------------------------

/// Per-feature zero mean / unit variance fitted on d itself; the fitted stats
/// are stored in the result so they can be applied to a held-out split.
Dataset standardize(const Dataset& d);

/// Applies previously fitted stats (use on the test split).
Dataset apply_standardization(const Dataset& d, const Standardization& s);

/// Inverse transform; requires stats stored in the dataset.
Dataset unstandardize(const Dataset& d);

std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& s);

/// One epoch of shuffled row-index batches; the last partial batch is kept.
/// batch_size larger than the dataset yields a single batch.
std::vector<std::vector<int>> make_batches(int n, int batch_size,
                                           std::mt19937_64& rng);

Matrix take_rows(const Matrix& m, const std::vector<int>& idx);
std::vector<int> take_labels(const std::vector<int>& labels,
                             const std::vector<int>& idx);

}  // namespace resode
