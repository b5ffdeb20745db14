#pragma once

#include "resode/data.hpp"
#include "resode/train.hpp"

#include <string>

namespace resode {

/// Writes via a temp file in the same directory plus rename, so readers never
/// observe a half-written file.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

/// Full-precision decimal formatting (round-trips a double exactly).
std::string fmt_full(double v);

/// Header x0..x{d-1},label; one row per sample.
std::string dataset_csv(const Dataset& d);

/// Header epoch,train_loss,train_acc,test_acc; one row per completed epoch.
std::string history_csv(const History& h);

/// Header h,variant,trial,seed,accuracy,diverged; rows ordered by
/// (h, variant, trial). Trials with no completed evaluation leave the
/// accuracy cell empty.
std::string sweep_csv(const SweepReport& r);

/// Header h,variant,mean,std,completed,diverged.
std::string sweep_summary_csv(const SweepReport& r);

}  // namespace resode
