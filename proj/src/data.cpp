#include "resode/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace resode {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  out.push_back(trim(cell));
  return out;
}

bool parse_double(const std::string& s, double* out) {
  try {
    size_t pos = 0;
    *out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

int Dataset::n_classes() const {
  if (!class_names.empty()) return static_cast<int>(class_names.size());
  int mx = -1;
  for (int lab : labels) mx = std::max(mx, lab);
  return mx + 1;
}

Dataset generate_moons(int n, double noise_std, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_moons: n must be >= 2");
  if (noise_std < 0.0)
    throw std::invalid_argument("generate_moons: noise_std must be >= 0");

  const int n0 = (n + 1) / 2;  // class 0 takes the extra point when n is odd
  const int n1 = n / 2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  Matrix pts(n, 2);
  std::vector<int> labels(n);
  auto arc_angle = [](int j, int count) {
    return count > 1 ? std::numbers::pi * double(j) / double(count - 1) : 0.0;
  };
  for (int j = 0; j < n0; ++j) {
    const double t = arc_angle(j, n0);
    pts(j, 0) = std::cos(t);
    pts(j, 1) = std::sin(t);
    labels[j] = 0;
  }
  for (int j = 0; j < n1; ++j) {
    const double t = arc_angle(j, n1);
    pts(n0 + j, 0) = 1.0 - std::cos(t);
    pts(n0 + j, 1) = 0.5 - std::sin(t);
    labels[n0 + j] = 1;
  }
  if (noise_std > 0.0) {
    for (int i = 0; i < n; ++i) {
      pts(i, 0) += noise_std * noise(rng);
      pts(i, 1) += noise_std * noise(rng);
    }
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  Dataset d;
  d.features.resize(n, 2);
  d.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    d.features.row(i) = pts.row(order[i]);
    d.labels[i] = labels[order[i]];
  }
  d.class_names = {"0", "1"};
  return d;
}

Dataset load_csv(const std::string& path, const CsvSpec& spec,
                 CsvLoadReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    rows.push_back(split_line(line));
  }
  if (rows.empty()) throw std::runtime_error("load_csv: " + path + " is empty");

  std::vector<std::string> column_names;
  size_t first_data_row = 0;
  const size_t n_cols = rows[0].size();
  if (spec.header) {
    column_names = rows[0];
    first_data_row = 1;
  } else {
    for (size_t c = 0; c < n_cols; ++c) column_names.push_back(std::to_string(c));
  }
  for (size_t r = first_data_row; r < rows.size(); ++r) {
    if (rows[r].size() != n_cols) {
      throw std::runtime_error("load_csv: row " + std::to_string(r + 1) +
                               " has " + std::to_string(rows[r].size()) +
                               " cells, expected " + std::to_string(n_cols));
    }
  }

  auto column_index = [&](const std::string& key) -> size_t {
    for (size_t c = 0; c < column_names.size(); ++c)
      if (column_names[c] == key) return c;
    double idx;
    if (parse_double(key, &idx) && idx >= 0 && idx < double(n_cols) &&
        idx == std::floor(idx))
      return static_cast<size_t>(idx);
    throw std::runtime_error("load_csv: no column named '" + key + "'");
  };
  const size_t label_col = column_index(spec.label_column);

  auto is_missing = [&](const std::string& cell) {
    return std::find(spec.missing_markers.begin(), spec.missing_markers.end(),
                     cell) != spec.missing_markers.end();
  };

  // Drop rows with any missing cell.
  std::vector<size_t> kept;
  int dropped = 0;
  for (size_t r = first_data_row; r < rows.size(); ++r) {
    bool missing = false;
    for (const auto& cell : rows[r]) {
      if (is_missing(cell)) {
        missing = true;
        break;
      }
    }
    if (missing)
      ++dropped;
    else
      kept.push_back(r);
  }
  if (report) {
    report->rows_read = static_cast<int>(rows.size() - first_data_row);
    report->rows_dropped = dropped;
  }
  if (kept.empty())
    throw std::runtime_error("load_csv: no usable rows in " + path);

  // Resolve per-column encodings and collect categorical vocabularies in
  // first-appearance order.
  std::vector<ColumnEncoding> enc(n_cols, ColumnEncoding::Numeric);
  for (const auto& [key, e] : spec.encodings) enc[column_index(key)] = e;
  std::vector<std::vector<std::string>> vocab(n_cols);
  auto vocab_id = [&](size_t c, const std::string& v) {
    auto& words = vocab[c];
    for (size_t i = 0; i < words.size(); ++i)
      if (words[i] == v) return static_cast<int>(i);
    words.push_back(v);
    return static_cast<int>(words.size() - 1);
  };
  for (size_t r : kept) {
    for (size_t c = 0; c < n_cols; ++c) {
      if (c == label_col) continue;
      if (enc[c] != ColumnEncoding::Numeric) vocab_id(c, rows[r][c]);
    }
  }

  // Feature layout after encoding.
  size_t out_dim = 0;
  std::vector<size_t> col_offset(n_cols, 0);
  for (size_t c = 0; c < n_cols; ++c) {
    if (c == label_col) continue;
    col_offset[c] = out_dim;
    out_dim += enc[c] == ColumnEncoding::OneHot ? vocab[c].size() : 1;
  }

  Dataset d;
  d.features = Matrix::Zero(static_cast<Eigen::Index>(kept.size()),
                            static_cast<Eigen::Index>(out_dim));
  d.labels.resize(kept.size());

  // Label handling: numeric binning when bins are configured, otherwise
  // distinct values in first-appearance order.
  std::vector<std::string> label_vocab;
  auto label_id = [&](const std::string& v, size_t row_no) -> int {
    if (!spec.label_bins.empty()) {
      double value;
      if (!parse_double(v, &value))
        throw std::runtime_error("load_csv: row " + std::to_string(row_no + 1) +
                                 ": label '" + v + "' is not numeric");
      for (size_t b = 0; b < spec.label_bins.size(); ++b) {
        if (value >= spec.label_bins[b].lo && value <= spec.label_bins[b].hi)
          return static_cast<int>(b);
      }
      throw std::runtime_error("load_csv: row " + std::to_string(row_no + 1) +
                               ": label value " + v + " falls in no bin");
    }
    for (size_t i = 0; i < label_vocab.size(); ++i)
      if (label_vocab[i] == v) return static_cast<int>(i);
    label_vocab.push_back(v);
    return static_cast<int>(label_vocab.size() - 1);
  };

  for (size_t i = 0; i < kept.size(); ++i) {
    const auto& cells = rows[kept[i]];
    for (size_t c = 0; c < n_cols; ++c) {
      if (c == label_col) continue;
      const std::string& cell = cells[c];
      switch (enc[c]) {
        case ColumnEncoding::Numeric: {
          double v;
          if (!parse_double(cell, &v))
            throw std::runtime_error(
                "load_csv: row " + std::to_string(kept[i] + 1) + ", column '" +
                column_names[c] + "': cannot parse '" + cell +
                "' as a number (declare an encoding for categorical columns)");
          d.features(i, col_offset[c]) = v;
          break;
        }
        case ColumnEncoding::Integer:
          d.features(i, col_offset[c]) = vocab_id(c, cell);
          break;
        case ColumnEncoding::OneHot:
          d.features(i, col_offset[c] + vocab_id(c, cell)) = 1.0;
          break;
      }
    }
    d.labels[i] = label_id(cells[label_col], kept[i]);
  }

  if (!spec.label_bins.empty()) {
    for (const auto& b : spec.label_bins) d.class_names.push_back(b.name);
  } else {
    d.class_names = label_vocab;
  }
  if (!all_finite(d.features))
    throw std::runtime_error("load_csv: non-finite feature values in " + path);
  return d;
}

Dataset standardize(const Dataset& d) {
  if (d.size() < 2)
    throw std::invalid_argument("standardize: need at least 2 rows");
  Standardization s;
  s.mean = d.features.colwise().mean().transpose();
  Matrix centered = d.features.rowwise() - s.mean.transpose();
  s.std = centered.array().square().colwise().mean().sqrt().transpose().matrix();

  Dataset out = d;
  out.features = centered;
  for (Eigen::Index c = 0; c < out.features.cols(); ++c) {
    if (s.std(c) > 0.0)
      out.features.col(c) /= s.std(c);
    else
      out.features.col(c).setZero();  // constant column
  }
  out.standardization = s;
  return out;
}

Dataset apply_standardization(const Dataset& d, const Standardization& s) {
  if (d.dim() != s.mean.size())
    throw std::invalid_argument("apply_standardization: dimension mismatch");
  Dataset out = d;
  out.features = d.features.rowwise() - s.mean.transpose();
  for (Eigen::Index c = 0; c < out.features.cols(); ++c) {
    if (s.std(c) > 0.0)
      out.features.col(c) /= s.std(c);
    else
      out.features.col(c).setZero();
  }
  out.standardization = s;
  return out;
}

Dataset unstandardize(const Dataset& d) {
  if (!d.standardization)
    throw std::invalid_argument("unstandardize: dataset carries no stats");
  const auto& s = *d.standardization;
  Dataset out = d;
  for (Eigen::Index c = 0; c < out.features.cols(); ++c)
    out.features.col(c) = d.features.col(c) * s.std(c);
  out.features.rowwise() += s.mean.transpose();
  out.standardization.reset();
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& s) {
  const int n = static_cast<int>(d.size());
  if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0))
    throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
  const int n_train_target = static_cast<int>(std::lround(s.train_fraction * n));
  if (n_train_target < 1 || n_train_target >= n)
    throw std::invalid_argument("split: both splits must be non-empty");

  std::mt19937_64 rng(s.seed);
  std::vector<int> train_idx, test_idx;

  if (s.stratified) {
    const int k = d.n_classes();
    std::vector<std::vector<int>> by_class(k);
    for (int i = 0; i < n; ++i) by_class[d.labels[i]].push_back(i);
    for (auto& idx : by_class) std::shuffle(idx.begin(), idx.end(), rng);

    // Largest-remainder apportioning keeps class ratios within one sample.
    std::vector<int> take(k);
    std::vector<std::pair<double, int>> remainder(k);
    int assigned = 0;
    for (int c = 0; c < k; ++c) {
      const double exact = s.train_fraction * double(by_class[c].size());
      take[c] = static_cast<int>(std::floor(exact));
      remainder[c] = {exact - std::floor(exact), c};
      assigned += take[c];
    }
    std::sort(remainder.rbegin(), remainder.rend());
    for (int i = 0; assigned < n_train_target && i < k; ++i) {
      const int c = remainder[i].second;
      if (take[c] < static_cast<int>(by_class[c].size())) {
        ++take[c];
        ++assigned;
      }
    }
    for (int c = 0; c < k; ++c) {
      for (size_t j = 0; j < by_class[c].size(); ++j) {
        (static_cast<int>(j) < take[c] ? train_idx : test_idx)
            .push_back(by_class[c][j]);
      }
    }
  } else {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    train_idx.assign(order.begin(), order.begin() + n_train_target);
    test_idx.assign(order.begin() + n_train_target, order.end());
  }

  if (train_idx.empty() || test_idx.empty())
    throw std::invalid_argument("split: both splits must be non-empty");

  auto build = [&](const std::vector<int>& idx) {
    Dataset out;
    out.features = take_rows(d.features, idx);
    out.labels = take_labels(d.labels, idx);
    out.class_names = d.class_names;
    out.standardization = d.standardization;
    return out;
  };
  return {build(train_idx), build(test_idx)};
}

std::vector<std::vector<int>> make_batches(int n, int batch_size,
                                           std::mt19937_64& rng) {
  if (batch_size < 1)
    throw std::invalid_argument("make_batches: batch_size must be >= 1");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

Matrix take_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = m.row(idx[i]);
  return out;
}

std::vector<int> take_labels(const std::vector<int>& labels,
                             const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
  return out;
}

}  // namespace resode
