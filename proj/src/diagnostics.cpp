#include "resode/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace resode {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<Complex> block_spectrum(const Matrix& j, BlockKind kind,
                                    bool has_bn) {
  if (kind == BlockKind::Shrinkage && !has_bn) {
    // Symmetric by construction; the specialized solver keeps the spectrum
    // exactly real.
    std::vector<Complex> eigs;
    for (double v : symmetric_eigenvalues(j, 1e-10)) eigs.emplace_back(v, 0.0);
    return eigs;
  }
  return general_eigenvalues(j);
}

}  // namespace

double stability_margin(const std::vector<Complex>& eigs, double h,
                        MarginKind kind) {
  if (eigs.empty())
    throw std::invalid_argument("stability_margin: empty spectrum");
  double worst = 0.0;
  for (const Complex& lam : eigs) {
    const double v = kind == MarginKind::Modulus
                         ? std::abs(1.0 + h * lam)
                         : std::abs(1.0 + h * lam.real());
    worst = std::max(worst, v);
  }
  return worst;
}

double stability_margin(const Matrix& j, double h, MarginKind kind) {
  if (j.rows() != j.cols())
    throw std::invalid_argument("stability_margin: matrix not square");
  const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
  const double asym = (j - j.transpose()).cwiseAbs().maxCoeff();
  if (asym <= 1e-12 * scale) {
    std::vector<Complex> eigs;
    for (double v : symmetric_eigenvalues(0.5 * (j + j.transpose()), 1e-10))
      eigs.emplace_back(v, 0.0);
    return stability_margin(eigs, h, kind);
  }
  return stability_margin(general_eigenvalues(j), h, kind);
}

SpectralReport layer_spectra(const Model& m, const NetworkConfig& cfg,
                             const Matrix& probe_batch, MarginKind kind,
                             int probe_row) {
  if (probe_batch.rows() == 0)
    throw std::invalid_argument("layer_spectra: empty probe batch");
  if (probe_row >= probe_batch.rows())
    throw std::invalid_argument("layer_spectra: probe_row out of range");

  const int depth = static_cast<int>(m.blocks.size());
  std::vector<int> all_layers(depth + 1);
  for (int i = 0; i <= depth; ++i) all_layers[i] = i;

  ForwardOptions opt;
  opt.record_layers = &all_layers;
  opt.throw_on_divergence = false;
  const ForwardPass fp = run_network(probe_batch, m, cfg, opt);

  SpectralReport report;
  report.h = cfg.h;
  report.margin_kind = kind;
  if (fp.diverged()) {
    report.partial = true;
    report.diverged_layer = fp.diverged_layer;
  }

  // Block i takes layer state i-1 as input; a partial forward still allows
  // every block whose input snapshot exists.
  const int n_inputs = static_cast<int>(fp.snapshots.size());
  for (int i = 0; i < depth && i < n_inputs; ++i) {
    LayerSpectrum ls;
    ls.layer = i + 1;
    ls.probe = probe_row < 0
                   ? Vector(fp.snapshots[i].colwise().mean().transpose())
                   : Vector(fp.snapshots[i].row(probe_row).transpose());
    const BatchNormParams* bn = m.bn.empty() ? nullptr : &m.bn[i];
    const Matrix j = block_jacobian(ls.probe, m.blocks[i], cfg.activation, bn);
    ls.eigenvalues = block_spectrum(j, m.blocks[i].kind, bn != nullptr);
    ls.spectral_abscissa = spectral_abscissa(ls.eigenvalues);
    ls.margin = stability_margin(ls.eigenvalues, cfg.h, report.margin_kind);
    ls.stable = ls.margin <= 1.0;
    report.layers.push_back(std::move(ls));
  }
  return report;
}

CertificateResult shrinkage_certificate(const Matrix& j, double tol) {
  if (j.rows() != j.cols())
    throw std::invalid_argument("shrinkage_certificate: matrix not square");
  CertificateResult r;
  r.asymmetry = (j - j.transpose()).cwiseAbs().maxCoeff();
  if (r.asymmetry > tol) {
    r.pass = false;
    r.failure = "asymmetry " + fmt(r.asymmetry) + " exceeds tol " + fmt(tol);
    return r;
  }
  const auto eigs = symmetric_eigenvalues(0.5 * (j + j.transpose()), 1e-10);
  r.max_eigenvalue = eigs.front();  // descending order
  if (r.max_eigenvalue > tol) {
    r.pass = false;
    r.failure =
        "eigenvalue " + fmt(r.max_eigenvalue) + " exceeds tol " + fmt(tol);
    return r;
  }
  r.pass = true;
  return r;
}

PerturbationProbe perturbation_amplification(const Model& m,
                                             const NetworkConfig& cfg,
                                             const Vector& y0, double epsilon,
                                             int n_directions,
                                             std::uint64_t seed) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument(
        "perturbation_amplification: epsilon must be positive");
  if (n_directions < 1)
    throw std::invalid_argument(
        "perturbation_amplification: need at least one direction");
  if (y0.size() != cfg.input_dim)
    throw std::invalid_argument(
        "perturbation_amplification: y0 does not match input_dim");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix batch(n_directions + 1, cfg.input_dim);
  batch.row(0) = y0.transpose();
  for (int k = 1; k <= n_directions; ++k) {
    Vector dir(cfg.input_dim);
    do {
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = gauss(rng);
    } while (dir.norm() == 0.0);
    dir /= dir.norm();
    batch.row(k) = (y0 + epsilon * dir).transpose();
  }

  const int depth = static_cast<int>(m.blocks.size());
  std::vector<int> all_layers(depth + 1);
  for (int i = 0; i <= depth; ++i) all_layers[i] = i;
  ForwardOptions opt;
  opt.record_layers = &all_layers;
  opt.throw_on_divergence = false;
  const ForwardPass fp = run_network(batch, m, cfg, opt);

  PerturbationProbe probe;
  probe.epsilon = epsilon;
  for (const Matrix& snap : fp.snapshots) {
    double worst = 0.0;
    for (int k = 1; k <= n_directions; ++k)
      worst = std::max(worst, (snap.row(k) - snap.row(0)).norm());
    probe.per_layer_deviation.push_back(worst);
  }
  if (fp.diverged()) {
    probe.diverged = true;
    probe.amplification = std::numeric_limits<double>::infinity();
    return probe;
  }
  double worst = 0.0;
  for (double dev : probe.per_layer_deviation)
    worst = std::max(worst, dev / epsilon);
  probe.amplification = worst;
  return probe;
}

std::vector<int> default_layer_schedule(int depth) {
  std::vector<int> layers = {0, std::min(5, depth)};
  for (int k = 1; k <= 10; ++k)
    layers.push_back(static_cast<int>(std::lround(double(k) * depth / 10.0)));
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
  return layers;
}

TrajectoryRecord capture_trajectory(const Model& m, const NetworkConfig& cfg,
                                    const Dataset& d,
                                    std::vector<int> schedule) {
  const int depth = static_cast<int>(m.blocks.size());
  if (schedule.empty())
    throw std::invalid_argument("capture_trajectory: empty layer schedule");
  for (int layer : schedule) {
    if (layer < 0 || layer > depth)
      throw std::invalid_argument("capture_trajectory: layer " +
                                  std::to_string(layer) +
                                  " outside [0, depth]");
  }
  schedule.push_back(0);  // layer 0 is always part of the record
  std::sort(schedule.begin(), schedule.end());
  schedule.erase(std::unique(schedule.begin(), schedule.end()),
                 schedule.end());

  ForwardOptions opt;
  opt.record_layers = &schedule;
  opt.throw_on_divergence = false;
  const ForwardPass fp = run_network(d.features, m, cfg, opt);

  TrajectoryRecord rec;
  rec.point_labels = d.labels;
  rec.layers = fp.recorded_layers;
  rec.snapshots = fp.snapshots;
  for (const Matrix& snap : rec.snapshots) {
    rec.lower_bounds.push_back(snap.colwise().minCoeff().transpose());
    rec.upper_bounds.push_back(snap.colwise().maxCoeff().transpose());
  }
  if (fp.diverged()) {
    rec.truncated = true;
    rec.diverged_layer = fp.diverged_layer;
  }
  return rec;
}

std::string spectral_report_csv(const SpectralReport& r) {
  std::ostringstream out;
  out << "layer,spectral_abscissa,margin,stable\n";
  for (const auto& ls : r.layers) {
    out << ls.layer << ',' << fmt(ls.spectral_abscissa) << ','
        << fmt(ls.margin) << ',' << (ls.stable ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string spectral_report_summary(const SpectralReport& r) {
  int stable = 0;
  for (const auto& ls : r.layers)
    if (ls.stable) ++stable;
  const int total = static_cast<int>(r.layers.size());
  std::ostringstream out;
  out << "layers analyzed: " << total << "\n"
      << "stable layers (margin <= 1): " << stable << "\n"
      << "unstable layers: " << (total - stable) << "\n"
      << "margin kind: "
      << (r.margin_kind == MarginKind::Modulus ? "modulus" : "real_part")
      << ", h = " << fmt(r.h) << "\n";
  if (r.partial)
    out << "partial report: forward pass diverged at layer "
        << r.diverged_layer << "\n";
  if (total > 0) {
    double worst = r.layers.front().margin;
    int worst_layer = r.layers.front().layer;
    for (const auto& ls : r.layers) {
      if (ls.margin > worst) {
        worst = ls.margin;
        worst_layer = ls.layer;
      }
    }
    out << "worst margin: " << fmt(worst) << " at layer " << worst_layer
        << "\n";
  }
  return out.str();
}

std::string perturbation_csv(const PerturbationProbe& p) {
  std::ostringstream out;
  out << "layer,deviation\n";
  for (size_t i = 0; i < p.per_layer_deviation.size(); ++i)
    out << i << ',' << fmt(p.per_layer_deviation[i]) << '\n';
  return out.str();
}

std::string perturbation_summary(const PerturbationProbe& p) {
  std::ostringstream out;
  out << "epsilon: " << fmt(p.epsilon) << "\n"
      << "amplification estimate: " << fmt(p.amplification) << "\n";
  if (p.diverged) out << "perturbed trajectories diverged\n";
  return out.str();
}

}  // namespace resode
