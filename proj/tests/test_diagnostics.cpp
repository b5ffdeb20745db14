#include "resode/diagnostics.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <sstream>

using namespace resode;

namespace {

Model zero_weight_model(const NetworkConfig& cfg) {
  Model m = init_model(cfg);
  for (auto& b : m.blocks) {
    b.k1.setZero();
    if (b.k2.size()) b.k2.setZero();
    b.b1.setZero();
    b.b2.setZero();
  }
  m.head_w.setZero();
  m.head_b.setZero();
  return m;
}

}  // namespace

TEST_CASE("stability margin on scalar spectra") {
  CHECK(stability_margin(-Matrix::Identity(2, 2), 1.0) ==
        doctest::Approx(0.0));
  CHECK(stability_margin(-3.0 * Matrix::Identity(2, 2), 1.0) ==
        doctest::Approx(2.0));
  CHECK(stability_margin(-3.0 * Matrix::Identity(2, 2), 0.1) ==
        doctest::Approx(0.7));
}

TEST_CASE("rotation spectrum is marginally unstable under the modulus") {
  Matrix j(2, 2);
  j << 0, 1, -1, 0;
  CHECK(stability_margin(j, 0.1) == doctest::Approx(std::sqrt(1.01)));
  // the real-part variant sees only the zero real part
  CHECK(stability_margin(j, 0.1, MarginKind::RealPart) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(stability_margin(std::vector<Complex>{}, 0.1),
                  std::invalid_argument);
}

TEST_CASE("margin is invariant under the (cJ, h/c) rescaling") {
  std::mt19937_64 rng(40);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix j = testutil::random_matrix(5, 5, rng);
    const double h = 0.3;
    for (double c : {0.5, 2.0, 7.0}) {
      CHECK(std::abs(stability_margin(j, h) -
                     stability_margin(Matrix(c * j), h / c)) < 1e-9);
    }
  }
}

TEST_CASE("real eigenvalues in [-1/h, 0) are strictly stable") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double h = 0.05 + 0.95 * u(rng);
    const double lam = -u(rng) / h;  // in [-1/h, 0)
    if (lam == 0.0) continue;
    CHECK(std::abs(1.0 + h * lam) < 1.0);
  }
}

TEST_CASE("all-shrinkage networks have nonpositive spectral abscissas") {
  NetworkConfig cfg;
  cfg.depth = 12;
  cfg.width = 4;
  cfg.input_dim = 4;
  cfg.n_classes = 2;
  cfg.h = 0.5;
  cfg.block_kind = BlockKind::Shrinkage;
  cfg.seed = 42;
  const Model m = init_model(cfg);
  std::mt19937_64 rng(43);
  const Matrix probe = testutil::random_matrix(16, 4, rng);
  const SpectralReport r = layer_spectra(m, cfg, probe);
  REQUIRE(r.layers.size() == 12);
  CHECK_FALSE(r.partial);
  for (const auto& ls : r.layers) {
    CHECK(ls.spectral_abscissa <= 1e-8);
    // real spectra inside [-2/h, 0] keep the Euler margin at or below one
    double lam_min = 0.0;
    for (const auto& e : ls.eigenvalues)
      lam_min = std::min(lam_min, e.real());
    if (lam_min >= -2.0 / cfg.h) CHECK(ls.margin <= 1.0 + 1e-12);
  }
}

TEST_CASE("zero-weight blocks sit exactly on the stability boundary") {
  NetworkConfig cfg;
  cfg.depth = 3;
  cfg.width = 3;
  cfg.input_dim = 3;
  cfg.n_classes = 2;
  cfg.h = 0.7;
  cfg.seed = 44;
  const Model m = zero_weight_model(cfg);
  const Matrix probe = Matrix::Random(8, 3);
  const SpectralReport r = layer_spectra(m, cfg, probe);
  for (const auto& ls : r.layers) {
    CHECK(ls.margin == 1.0);
    CHECK(ls.stable);
  }
}

TEST_CASE("per-sample spectra linearize at the chosen row") {
  NetworkConfig cfg;
  cfg.depth = 3;
  cfg.width = 3;
  cfg.input_dim = 3;
  cfg.n_classes = 2;
  cfg.h = 0.4;
  cfg.seed = 67;
  const Model m = init_model(cfg);
  std::mt19937_64 rng(68);
  const Matrix probe = testutil::random_matrix(5, 3, rng);

  const SpectralReport per_sample =
      layer_spectra(m, cfg, probe, MarginKind::Modulus, 2);
  const SpectralReport single_row = layer_spectra(
      m, cfg, Matrix(probe.row(2)), MarginKind::Modulus, -1);
  REQUIRE(per_sample.layers.size() == single_row.layers.size());
  for (size_t i = 0; i < per_sample.layers.size(); ++i) {
    CHECK((per_sample.layers[i].probe - single_row.layers[i].probe)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(per_sample.layers[i].margin ==
          doctest::Approx(single_row.layers[i].margin));
  }
  CHECK_THROWS_AS(layer_spectra(m, cfg, probe, MarginKind::Modulus, 7),
                  std::invalid_argument);
}

TEST_CASE("divergence mid-forward yields a flagged partial report") {
  NetworkConfig cfg;
  cfg.depth = 3;
  cfg.width = 1;
  cfg.input_dim = 1;
  cfg.n_classes = 2;
  cfg.h = 1.0;
  cfg.activation = Activation::ReLU;
  cfg.seed = 45;
  Model m = zero_weight_model(cfg);
  m.blocks[1].k1 = Matrix::Constant(1, 1, 1e200);
  m.blocks[1].k2 = Matrix::Constant(1, 1, 1e200);
  const Matrix probe = Matrix::Ones(2, 1);
  const SpectralReport r = layer_spectra(m, cfg, probe);
  CHECK(r.partial);
  CHECK(r.diverged_layer == 2);
  CHECK(r.layers.size() == 2);  // blocks whose input stayed finite
}

TEST_CASE("shrinkage certificate accepts constructed Jacobians") {
  std::mt19937_64 rng(46);
  for (int rep = 0; rep < 20; ++rep) {
    const int w = 2 + static_cast<int>(rng() % 5);
    const Matrix k1 = testutil::random_matrix(w, w, rng);
    Vector d = testutil::random_vector(w, rng).cwiseAbs();
    const Matrix j = -(k1.transpose() * d.asDiagonal() * k1);
    const CertificateResult r = shrinkage_certificate(j, 1e-7);
    CHECK(r.pass);
  }
}

TEST_CASE("shrinkage certificate rejects a positive eigenvalue with witness") {
  const CertificateResult r =
      shrinkage_certificate(Matrix::Constant(1, 1, 0.1), 1e-7);
  CHECK_FALSE(r.pass);
  CHECK(r.max_eigenvalue == doctest::Approx(0.1));
  CHECK(r.failure.find("eigenvalue") != std::string::npos);
}

TEST_CASE("the zero matrix passes the certificate at the boundary") {
  const CertificateResult r = shrinkage_certificate(Matrix::Zero(3, 3), 1e-7);
  CHECK(r.pass);
  CHECK(r.max_eigenvalue == 0.0);
}

TEST_CASE("500 random shrinkage Jacobians pass the certificate") {
  std::mt19937_64 rng(47);
  std::uniform_int_distribution<int> width_dist(2, 64);
  for (int rep = 0; rep < 500; ++rep) {
    const int w = width_dist(rng);
    BlockParams p;
    p.kind = BlockKind::Shrinkage;
    p.k1 = testutil::random_matrix(w, w, rng, 1.0 / std::sqrt(double(w)));
    p.b1 = testutil::random_vector(w, rng);
    p.b2 = testutil::random_vector(w, rng);
    const Vector y = testutil::random_vector(w, rng);
    const Activation act = rep % 2 ? Activation::Tanh : Activation::ReLU;
    const Matrix j = block_jacobian(y, p, act);
    CHECK(shrinkage_certificate(j, 1e-7).pass);
  }
}

TEST_CASE("identity network amplifies a perturbation by exactly one") {
  NetworkConfig cfg;
  cfg.depth = 10;
  cfg.width = 2;
  cfg.input_dim = 2;
  cfg.n_classes = 2;
  cfg.h = 1.0;
  cfg.seed = 48;
  const Model m = zero_weight_model(cfg);
  const Vector y0 = Vector::Zero(2);
  const PerturbationProbe p =
      perturbation_amplification(m, cfg, y0, 1e-3, 8, 49);
  REQUIRE(p.per_layer_deviation.size() == 11);
  for (double dev : p.per_layer_deviation)
    CHECK(dev == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(p.amplification == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(p.diverged);
}

TEST_CASE("amplification estimate is stable across epsilon scales") {
  NetworkConfig cfg;
  cfg.depth = 20;
  cfg.width = 2;
  cfg.input_dim = 2;
  cfg.n_classes = 2;
  cfg.h = 0.1;
  cfg.seed = 50;
  const Model m = init_model(cfg);
  Vector y0(2);
  y0 << 0.3, -0.2;
  const double a1 =
      perturbation_amplification(m, cfg, y0, 1e-3, 16, 51).amplification;
  const double a2 =
      perturbation_amplification(m, cfg, y0, 1e-4, 16, 51).amplification;
  CHECK(a1 / a2 < 2.0);
  CHECK(a2 / a1 < 2.0);
}

TEST_CASE("a full step is more amplifying than a small one at depth 100") {
  NetworkConfig cfg;
  cfg.depth = 100;
  cfg.width = 2;
  cfg.input_dim = 2;
  cfg.n_classes = 2;
  cfg.seed = 52;
  const Model m = init_model(cfg);
  Vector y0(2);
  y0 << 1.0, 0.25;
  NetworkConfig big = cfg;
  big.h = 1.0;
  NetworkConfig small = cfg;
  small.h = 0.1;
  const double amp_big =
      perturbation_amplification(m, big, y0, 1e-3, 8, 53).amplification;
  const double amp_small =
      perturbation_amplification(m, small, y0, 1e-3, 8, 53).amplification;
  CHECK(amp_big > amp_small);
}

TEST_CASE("perturbation probe flags divergence with an infinite estimate") {
  NetworkConfig cfg;
  cfg.depth = 2;
  cfg.width = 1;
  cfg.input_dim = 1;
  cfg.n_classes = 2;
  cfg.h = 1.0;
  cfg.activation = Activation::ReLU;
  cfg.seed = 54;
  Model m = zero_weight_model(cfg);
  m.blocks[0].k1 = Matrix::Constant(1, 1, 1e200);
  m.blocks[0].k2 = Matrix::Constant(1, 1, 1e200);
  const PerturbationProbe p = perturbation_amplification(
      m, cfg, Vector::Ones(1), 1e-3, 4, 55);
  CHECK(p.diverged);
  CHECK(std::isinf(p.amplification));
}

TEST_CASE("layer zero of a trajectory equals the input features") {
  NetworkConfig cfg;
  cfg.depth = 5;
  cfg.width = 2;
  cfg.input_dim = 2;
  cfg.n_classes = 2;
  cfg.h = 0.4;
  cfg.seed = 56;
  const Model m = init_model(cfg);
  const Dataset d = generate_moons(40, 0.1, 57);
  const TrajectoryRecord rec = capture_trajectory(m, cfg, d, {0, 3, 5});
  REQUIRE(rec.layers.size() == 3);
  CHECK(rec.layers[0] == 0);
  CHECK((rec.snapshots[0] - d.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK(rec.point_labels == d.labels);
  // axis bounds are tight per layer
  CHECK(rec.lower_bounds[0](0) == d.features.col(0).minCoeff());
  CHECK(rec.upper_bounds[0](1) == d.features.col(1).maxCoeff());
}

TEST_CASE("a single-layer schedule yields a single snapshot") {
  NetworkConfig cfg;
  cfg.depth = 4;
  cfg.width = 2;
  cfg.input_dim = 2;
  cfg.n_classes = 2;
  cfg.seed = 58;
  const Model m = init_model(cfg);
  const Dataset d = generate_moons(10, 0.1, 59);
  const TrajectoryRecord rec = capture_trajectory(m, cfg, d, {0});
  CHECK(rec.layers == std::vector<int>{0});
  CHECK(rec.snapshots.size() == 1);
  CHECK_THROWS_AS(capture_trajectory(m, cfg, d, {0, 9}),
                  std::invalid_argument);
}

TEST_CASE("snapshots match a manual re-execution of the blocks") {
  NetworkConfig cfg;
  cfg.depth = 3;
  cfg.width = 2;
  cfg.input_dim = 2;
  cfg.n_classes = 2;
  cfg.h = 0.6;
  cfg.seed = 60;
  const Model m = init_model(cfg);
  const Dataset d = generate_moons(6, 0.1, 61);
  const TrajectoryRecord rec = capture_trajectory(m, cfg, d, {0, 1, 2, 3});
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    Vector y = d.features.row(i).transpose();
    for (int layer = 0; layer <= 3; ++layer) {
      CHECK((rec.snapshots[layer].row(i).transpose() - y)
                .cwiseAbs()
                .maxCoeff() < 1e-12);
      if (layer < 3)
        y = residual_block_forward(y, m.blocks[layer], cfg.h, cfg.activation);
    }
  }
}

TEST_CASE("default layer schedules follow the 0,5,k*depth/10 rule") {
  CHECK(default_layer_schedule(100) ==
        std::vector<int>{0, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
  CHECK(default_layer_schedule(500) ==
        std::vector<int>{0, 5, 50, 100, 150, 200, 250, 300, 350, 400, 450,
                         500});
}

TEST_CASE("residual features at h=1 grow while shrinkage features contract") {
  const Dataset d = generate_moons(100, 0.1, 62);
  NetworkConfig cfg;
  cfg.depth = 100;
  cfg.width = 2;
  cfg.input_dim = 2;
  cfg.n_classes = 2;
  cfg.h = 1.0;
  cfg.seed = 63;

  const Model residual = init_model(cfg);
  const TrajectoryRecord grow = capture_trajectory(residual, cfg, d, {0, 100});
  const double grow_first = grow.snapshots.front().rowwise().norm().mean();
  if (!grow.truncated) {
    const double grow_last = grow.snapshots.back().rowwise().norm().mean();
    CHECK(grow_last > grow_first);
  }

  NetworkConfig scfg = cfg;
  scfg.block_kind = BlockKind::Shrinkage;
  const Model shrink = init_model(scfg);
  const TrajectoryRecord rec = capture_trajectory(shrink, scfg, d, {0, 100});
  REQUIRE_FALSE(rec.truncated);
  const double first = rec.snapshots.front().rowwise().norm().mean();
  const double last = rec.snapshots.back().rowwise().norm().mean();
  CHECK(last < first);
}

TEST_CASE("spectral report serializes with the documented columns") {
  NetworkConfig cfg;
  cfg.depth = 2;
  cfg.width = 2;
  cfg.input_dim = 2;
  cfg.n_classes = 2;
  cfg.h = 0.3;
  cfg.seed = 64;
  const Model m = init_model(cfg);
  const Matrix probe = Matrix::Random(4, 2);
  const SpectralReport r = layer_spectra(m, cfg, probe);
  const std::string csv = spectral_report_csv(r);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "layer,spectral_abscissa,margin,stable");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);

  const std::string summary = spectral_report_summary(r);
  CHECK(summary.find("layers analyzed: 2") != std::string::npos);
  CHECK(summary.find("stable layers") != std::string::npos);
}

TEST_CASE("perturbation report serializes one row per layer") {
  NetworkConfig cfg;
  cfg.depth = 4;
  cfg.width = 2;
  cfg.input_dim = 2;
  cfg.n_classes = 2;
  cfg.seed = 65;
  const Model m = zero_weight_model(cfg);
  const PerturbationProbe p = perturbation_amplification(
      m, cfg, Vector::Zero(2), 1e-3, 4, 66);
  const std::string csv = perturbation_csv(p);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "layer,deviation");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
  CHECK(perturbation_summary(p).find("amplification estimate: 1") !=
        std::string::npos);
}
