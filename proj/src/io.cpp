#include "resode/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace resode {

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.good())
      throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string dataset_csv(const Dataset& d) {
  std::ostringstream out;
  for (Eigen::Index c = 0; c < d.dim(); ++c) out << 'x' << c << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    for (Eigen::Index c = 0; c < d.dim(); ++c)
      out << fmt_full(d.features(i, c)) << ',';
    out << d.labels[static_cast<size_t>(i)] << '\n';
  }
  return out.str();
}

std::string history_csv(const History& h) {
  std::ostringstream out;
  out << "epoch,train_loss,train_acc,test_acc\n";
  for (size_t e = 0; e < h.test_acc.size(); ++e) {
    out << (e + 1) << ',' << fmt_full(h.train_loss[e]) << ','
        << fmt_full(h.train_acc[e]) << ',' << fmt_full(h.test_acc[e]) << '\n';
  }
  return out.str();
}

std::string sweep_csv(const SweepReport& r) {
  std::ostringstream out;
  out << "h,variant,trial,seed,accuracy,diverged\n";
  for (const auto& cell : r.cells) {
    for (size_t t = 0; t < cell.trials.size(); ++t) {
      const auto& trial = cell.trials[t];
      out << fmt_full(cell.h) << ',' << variant_name(cell.variant) << ',' << t
          << ',' << trial.seed << ',';
      if (trial.has_accuracy) out << fmt_full(trial.accuracy);
      out << ',' << (trial.diverged ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::string sweep_summary_csv(const SweepReport& r) {
  std::ostringstream out;
  out << "h,variant,mean,std,completed,diverged\n";
  for (const auto& cell : r.cells) {
    out << fmt_full(cell.h) << ',' << variant_name(cell.variant) << ',';
    if (!std::isnan(cell.mean))
      out << fmt_full(cell.mean) << ',' << fmt_full(cell.stddev);
    else
      out << ',';
    out << ',' << cell.completed << ',' << cell.diverged_count << '\n';
  }
  return out.str();
}

}  // namespace resode
