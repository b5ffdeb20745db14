#pragma once

#include "resode/data.hpp"
#include "resode/diagnostics.hpp"
#include "resode/train.hpp"

#include <string>

namespace resode {

/// One scatter panel per recorded layer, three panels per row, points colored
/// by class. fixed_axes renders every panel with the global bounds; otherwise
/// each panel is scaled to its own tight bounds.
std::string trajectory_grid_svg(const TrajectoryRecord& rec, bool fixed_axes);

/// Side-by-side train/test scatter of a 2-D dataset.
std::string dataset_pair_svg(const Dataset& train, const Dataset& test);

/// Mean test accuracy vs h, one series per variant, error bars of one std.
std::string accuracy_vs_h_svg(const SweepReport& report);

}  // namespace resode
