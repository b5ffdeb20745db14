#include "resode/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace resode {

namespace {

const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c",
                          "#ff7f0e", "#9467bd", "#8c564b"};
constexpr int kPaletteSize = 6;

const char* class_color(int label) {
  return kPalette[label % kPaletteSize];
}

const char* variant_color(Variant v) {
  switch (v) {
    case Variant::Residual: return "#d62728";
    case Variant::ResidualBatchNorm: return "#2ca02c";
    case Variant::Shrinkage: return "#1f77b4";
  }
  return "#000000";
}

std::string num(double v, const char* spec = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct Box {
  double xmin, xmax, ymin, ymax;
  void pad(double frac) {
    double dx = xmax - xmin;
    double dy = ymax - ymin;
    if (dx <= 0.0) dx = 1.0;
    if (dy <= 0.0) dy = 1.0;
    xmin -= frac * dx;
    xmax += frac * dx;
    ymin -= frac * dy;
    ymax += frac * dy;
  }
};

struct PanelSpec {
  std::string title;
  std::string subtitle;
  const Matrix* points;
  const std::vector<int>* labels;
  Box bounds;
};

constexpr double kPanelSize = 200.0;
constexpr double kBand = 30.0;  // label band above each panel
constexpr double kGap = 14.0;
constexpr double kMargin = 12.0;

void render_panel(std::ostringstream& out, const PanelSpec& panel, double ox,
                  double oy) {
  const Box& b = panel.bounds;
  auto px = [&](double x) {
    return ox + (x - b.xmin) / (b.xmax - b.xmin) * kPanelSize;
  };
  auto py = [&](double y) {
    return oy + kPanelSize - (y - b.ymin) / (b.ymax - b.ymin) * kPanelSize;
  };
  out << "<text x=\"" << num(ox) << "\" y=\"" << num(oy - 16.0)
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << panel.title
      << "</text>\n";
  out << "<text x=\"" << num(ox) << "\" y=\"" << num(oy - 4.0)
      << "\" font-family=\"sans-serif\" font-size=\"9\" fill=\"#555555\">"
      << panel.subtitle << "</text>\n";
  out << "<rect x=\"" << num(ox) << "\" y=\"" << num(oy) << "\" width=\""
      << num(kPanelSize) << "\" height=\"" << num(kPanelSize)
      << "\" fill=\"none\" stroke=\"#999999\"/>\n";
  const Matrix& pts = *panel.points;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    out << "<circle cx=\"" << num(px(pts(i, 0))) << "\" cy=\""
        << num(py(pts(i, 1))) << "\" r=\"2\" fill=\""
        << class_color((*panel.labels)[static_cast<size_t>(i)])
        << "\" fill-opacity=\"0.7\"/>\n";
  }
}

std::string render_grid(const std::vector<PanelSpec>& panels, int cols) {
  const int n = static_cast<int>(panels.size());
  const int rows = (n + cols - 1) / cols;
  const double width = kMargin * 2 + cols * kPanelSize + (cols - 1) * kGap;
  const double height =
      kMargin * 2 + rows * (kPanelSize + kBand) + (rows - 1) * kGap;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width)
      << ' ' << num(height) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" fill=\"#ffffff\"/>\n";
  for (int i = 0; i < n; ++i) {
    const int r = i / cols;
    const int c = i % cols;
    const double ox = kMargin + c * (kPanelSize + kGap);
    const double oy = kMargin + kBand + r * (kPanelSize + kBand + kGap);
    render_panel(out, panels[i], ox, oy);
  }
  out << "</svg>\n";
  return out.str();
}

Box bounds_of(const Matrix& pts) {
  return {pts.col(0).minCoeff(), pts.col(0).maxCoeff(), pts.col(1).minCoeff(),
          pts.col(1).maxCoeff()};
}

std::string range_label(const Box& b) {
  return "x:[" + num(b.xmin) + ", " + num(b.xmax) + "]  y:[" + num(b.ymin) +
         ", " + num(b.ymax) + "]";
}

}  // namespace

std::string trajectory_grid_svg(const TrajectoryRecord& rec, bool fixed_axes) {
  if (rec.snapshots.empty())
    throw std::invalid_argument("trajectory_grid_svg: empty record");
  if (rec.snapshots.front().cols() != 2)
    throw std::invalid_argument(
        "trajectory_grid_svg: only 2-D feature widths can be plotted");

  Box global = bounds_of(rec.snapshots.front());
  for (const Matrix& snap : rec.snapshots) {
    const Box b = bounds_of(snap);
    global.xmin = std::min(global.xmin, b.xmin);
    global.xmax = std::max(global.xmax, b.xmax);
    global.ymin = std::min(global.ymin, b.ymin);
    global.ymax = std::max(global.ymax, b.ymax);
  }
  global.pad(0.06);

  std::vector<PanelSpec> panels;
  for (size_t i = 0; i < rec.snapshots.size(); ++i) {
    PanelSpec p;
    p.title = "layer " + std::to_string(rec.layers[i]);
    Box tight = bounds_of(rec.snapshots[i]);
    tight.pad(0.06);
    p.bounds = fixed_axes ? global : tight;
    p.subtitle = range_label(p.bounds);
    p.points = &rec.snapshots[i];
    p.labels = &rec.point_labels;
    panels.push_back(std::move(p));
  }
  return render_grid(panels, 3);
}

std::string dataset_pair_svg(const Dataset& train, const Dataset& test) {
  if (train.dim() != 2 || test.dim() != 2)
    throw std::invalid_argument("dataset_pair_svg: datasets must be 2-D");
  std::vector<PanelSpec> panels(2);
  panels[0].title = "training data";
  panels[0].points = &train.features;
  panels[0].labels = &train.labels;
  panels[0].bounds = bounds_of(train.features);
  panels[0].bounds.pad(0.06);
  panels[0].subtitle = range_label(panels[0].bounds);
  panels[1].title = "test data";
  panels[1].points = &test.features;
  panels[1].labels = &test.labels;
  panels[1].bounds = bounds_of(test.features);
  panels[1].bounds.pad(0.06);
  panels[1].subtitle = range_label(panels[1].bounds);
  return render_grid(panels, 2);
}

std::string accuracy_vs_h_svg(const SweepReport& report) {
  const double width = 640.0, height = 440.0;
  const double x0 = 70.0, x1 = 600.0, y0 = 390.0, y1 = 30.0;

  double hmin = report.h_values.front(), hmax = report.h_values.front();
  for (double h : report.h_values) {
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
  }
  if (hmax <= hmin) hmax = hmin + 1.0;
  const double hpad = 0.05 * (hmax - hmin);
  hmin -= hpad;
  hmax += hpad;

  auto px = [&](double h) { return x0 + (h - hmin) / (hmax - hmin) * (x1 - x0); };
  auto py = [&](double acc) { return y0 + acc * (y1 - y0); };  // acc in [0,1]

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width)
      << ' ' << num(height) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" fill=\"#ffffff\"/>\n";

  // grid and axes
  for (int t = 0; t <= 10; ++t) {
    const double acc = t / 10.0;
    out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(py(acc))
        << "\" x2=\"" << num(x1) << "\" y2=\"" << num(py(acc))
        << "\" stroke=\"#e0e0e0\"/>\n"
        << "<text x=\"" << num(x0 - 8.0) << "\" y=\"" << num(py(acc) + 4.0)
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"end\">"
        << num(acc, "%.1f") << "</text>\n";
  }
  for (double h : report.h_values) {
    out << "<line x1=\"" << num(px(h)) << "\" y1=\"" << num(y0) << "\" x2=\""
        << num(px(h)) << "\" y2=\"" << num(y0 + 5.0)
        << "\" stroke=\"#333333\"/>\n"
        << "<text x=\"" << num(px(h)) << "\" y=\"" << num(y0 + 20.0)
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"middle\">"
        << num(h, "%.2g") << "</text>\n";
  }
  out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\""
      << num(x1 - x0) << "\" height=\"" << num(y0 - y1)
      << "\" fill=\"none\" stroke=\"#333333\"/>\n"
      << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(height - 8.0)
      << "\" font-family=\"sans-serif\" font-size=\"13\" "
         "text-anchor=\"middle\">h</text>\n"
      << "<text x=\"16\" y=\"" << num((y0 + y1) / 2)
      << "\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 16 "
      << num((y0 + y1) / 2) << ")\" text-anchor=\"middle\">test accuracy"
      << "</text>\n";

  // one series per variant
  for (size_t vi = 0; vi < report.variants.size(); ++vi) {
    const Variant v = report.variants[vi];
    const char* color = variant_color(v);
    std::ostringstream pts;
    bool first = true;
    for (const auto& cell : report.cells) {
      if (cell.variant != v || std::isnan(cell.mean)) continue;
      pts << (first ? "" : " ") << num(px(cell.h)) << ',' << num(py(cell.mean));
      first = false;
      const double lo = py(std::max(0.0, cell.mean - cell.stddev));
      const double hi = py(std::min(1.0, cell.mean + cell.stddev));
      out << "<line x1=\"" << num(px(cell.h)) << "\" y1=\"" << num(lo)
          << "\" x2=\"" << num(px(cell.h)) << "\" y2=\"" << num(hi)
          << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n"
          << "<line x1=\"" << num(px(cell.h) - 4.0) << "\" y1=\"" << num(lo)
          << "\" x2=\"" << num(px(cell.h) + 4.0) << "\" y2=\"" << num(lo)
          << "\" stroke=\"" << color << "\"/>\n"
          << "<line x1=\"" << num(px(cell.h) - 4.0) << "\" y1=\"" << num(hi)
          << "\" x2=\"" << num(px(cell.h) + 4.0) << "\" y2=\"" << num(hi)
          << "\" stroke=\"" << color << "\"/>\n";
    }
    if (!first) {
      out << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\""
          << color << "\" stroke-width=\"1.5\"/>\n";
    }
    for (const auto& cell : report.cells) {
      if (cell.variant != v || std::isnan(cell.mean)) continue;
      out << "<circle cx=\"" << num(px(cell.h)) << "\" cy=\""
          << num(py(cell.mean)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    // legend entry
    const double ly = y1 + 16.0 + 16.0 * double(vi);
    out << "<line x1=\"" << num(x0 + 10.0) << "\" y1=\"" << num(ly - 4.0)
        << "\" x2=\"" << num(x0 + 34.0) << "\" y2=\"" << num(ly - 4.0)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << num(x0 + 40.0) << "\" y=\"" << num(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << variant_name(v) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace resode
