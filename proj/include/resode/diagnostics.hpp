#pragma once

#include "resode/data.hpp"
#include "resode/nn.hpp"

#include <string>
#include <vector>

namespace resode {

/// Euler absolute-stability margin of a spectrum: the update is contractive
/// at this point when the margin stays <= 1. Modulus takes |1 + h*lambda|
/// over the complex eigenvalues; RealPart is the variant |1 + h*Re(lambda)|.
enum class MarginKind { Modulus, RealPart };

double stability_margin(const std::vector<Complex>& eigs, double h,
                        MarginKind kind = MarginKind::Modulus);
double stability_margin(const Matrix& j, double h,
                        MarginKind kind = MarginKind::Modulus);

struct LayerSpectrum {
  int layer = 0;  // 1-based block index
  std::vector<Complex> eigenvalues;
  double spectral_abscissa = 0.0;
  double margin = 0.0;
  bool stable = false;  // margin <= 1
  Vector probe;         // the point the Jacobian was assembled at
};

struct SpectralReport {
  double h = 1.0;
  MarginKind margin_kind = MarginKind::Modulus;
  std::vector<LayerSpectrum> layers;
  bool partial = false;  // forward pass diverged before the last block
  int diverged_layer = -1;
};

/// One spectrum per block, with the Jacobian assembled at the batch-mean
/// activation entering that block (probe_row < 0), or at one sample's
/// activation (probe_row >= 0). Divergence mid-forward yields a partial
/// report covering every block whose input stayed finite.
SpectralReport layer_spectra(const Model& m, const NetworkConfig& cfg,
                             const Matrix& probe_batch,
                             MarginKind kind = MarginKind::Modulus,
                             int probe_row = -1);

struct CertificateResult {
  bool pass = false;
  double max_eigenvalue = 0.0;
  double asymmetry = 0.0;  // max |J - J^T| entry
  std::string failure;     // empty on pass; names the violated condition
};

/// Checks that a shrinkage Jacobian is symmetric within tol with all
/// eigenvalues <= tol; the largest eigenvalue is reported as witness.
CertificateResult shrinkage_certificate(const Matrix& j, double tol);

struct PerturbationProbe {
  double epsilon = 0.0;
  std::vector<double> per_layer_deviation;  // max L2 deviation over directions
  double amplification = 0.0;  // max over layers of deviation / epsilon
  bool diverged = false;       // amplification is +inf when set
};

/// Propagates y0 and y0 + epsilon * dir for random unit directions and
/// records the worst per-layer deviation from the unperturbed trajectory.
PerturbationProbe perturbation_amplification(const Model& m,
                                             const NetworkConfig& cfg,
                                             const Vector& y0, double epsilon,
                                             int n_directions,
                                             std::uint64_t seed);

struct TrajectoryRecord {
  std::vector<int> layers;  // strictly increasing, always includes layer 0
  std::vector<Matrix> snapshots;
  std::vector<Vector> lower_bounds;  // per-layer per-feature minima
  std::vector<Vector> upper_bounds;
  std::vector<int> point_labels;
  bool truncated = false;
  int diverged_layer = -1;
};

/// Records activations at the scheduled layers for every row of d. Layer 0
/// (the features entering the first block) is always included.
TrajectoryRecord capture_trajectory(const Model& m, const NetworkConfig& cfg,
                                    const Dataset& d,
                                    std::vector<int> schedule);

/// {0, 5} plus ten evenly spaced layers up to depth, deduplicated.
std::vector<int> default_layer_schedule(int depth);

// ----- report serialization -----------------------------------------------------

std::string spectral_report_csv(const SpectralReport& r);
std::string spectral_report_summary(const SpectralReport& r);
std::string perturbation_csv(const PerturbationProbe& p);
std::string perturbation_summary(const PerturbationProbe& p);

}  // namespace resode
