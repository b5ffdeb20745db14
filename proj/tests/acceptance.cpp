// Acceptance suite: one numbered criterion per section, one PASS/FAIL line
// each, nonzero exit when any fails. Heavier multi-trial runs reuse the same
// trained cells where two criteria share them.

#include "resode/diagnostics.hpp"
#include "resode/experiment.hpp"
#include "resode/io.hpp"
#include "resode/svg.hpp"
#include "resode/train.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

using namespace resode;

namespace {

int g_failures = 0;

void report(int idx, bool pass, const std::string& what,
            const std::string& detail) {
  std::printf("%s criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", idx,
              what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng,
                     double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

// ---- criterion 1: gradient correctness --------------------------------------

double training_loss(const Model& m0, const NetworkConfig& cfg,
                     const Matrix& x, const std::vector<int>& labels) {
  Model m = m0;
  ForwardOptions opt;
  opt.bn_mode = BatchNormMode::Train;
  opt.update_running_stats = false;
  const ForwardPass fp = run_network(x, m, cfg, opt);
  return softmax_cross_entropy(fp.logits, labels).loss;
}

struct ParamRef {
  double* value;
  const double* grad;
  Eigen::Index count;
};

std::vector<ParamRef> param_refs(Model& m, const Gradients& g) {
  std::vector<ParamRef> refs;
  if (!m.identity_input) {
    refs.push_back({m.input_w.data(), g.input_w.data(), m.input_w.size()});
    refs.push_back({m.input_b.data(), g.input_b.data(), m.input_b.size()});
  }
  for (size_t i = 0; i < m.blocks.size(); ++i) {
    auto& b = m.blocks[i];
    const auto& gb = g.blocks[i];
    refs.push_back({b.k1.data(), gb.k1.data(), b.k1.size()});
    if (b.kind == BlockKind::Residual)
      refs.push_back({b.k2.data(), gb.k2.data(), b.k2.size()});
    refs.push_back({b.b1.data(), gb.b1.data(), b.b1.size()});
    refs.push_back({b.b2.data(), gb.b2.data(), b.b2.size()});
    if (!m.bn.empty()) {
      refs.push_back(
          {m.bn[i].gamma.data(), gb.gamma.data(), m.bn[i].gamma.size()});
      refs.push_back(
          {m.bn[i].beta.data(), gb.beta.data(), m.bn[i].beta.size()});
    }
  }
  refs.push_back({m.head_w.data(), g.head_w.data(), m.head_w.size()});
  refs.push_back({m.head_b.data(), g.head_b.data(), m.head_b.size()});
  return refs;
}

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int idx = 0;
  for (BlockKind kind : {BlockKind::Residual, BlockKind::Shrinkage}) {
    for (bool bn : {false, true}) {
      NetworkConfig cfg;
      cfg.depth = 2;
      cfg.width = 3;
      cfg.input_dim = 3;
      cfg.n_classes = 3;
      cfg.h = 0.6;
      cfg.block_kind = kind;
      cfg.use_batchnorm = bn;
      cfg.activation = Activation::Tanh;
      cfg.seed = 1000 + idx;

      Model m = init_model(cfg);
      std::mt19937_64 rng(2000 + idx);
      for (auto& b : m.blocks) {
        b.b1 = random_vector(3, rng, 0.3);
        b.b2 = random_vector(3, rng, 0.3);
      }
      for (auto& q : m.bn) {
        q.gamma = Vector::Ones(3) + random_vector(3, rng, 0.2);
        q.beta = random_vector(3, rng, 0.2);
      }
      const Matrix x = random_matrix(8, 3, rng);
      std::vector<int> labels(8);
      for (int i = 0; i < 8; ++i) labels[i] = int(rng() % 3);

      ForwardOptions opt;
      opt.bn_mode = BatchNormMode::Train;
      opt.update_running_stats = false;
      opt.keep_cache = true;
      const ForwardPass fp = run_network(x, m, cfg, opt);
      const LossGrad lg = softmax_cross_entropy(fp.logits, labels);
      const Gradients g = network_backward(m, cfg, fp, lg.grad_logits);

      const double step = 1e-5;
      for (auto& ref : param_refs(m, g)) {
        for (Eigen::Index k = 0; k < ref.count; ++k) {
          const double saved = ref.value[k];
          ref.value[k] = saved + step;
          const double up = training_loss(m, cfg, x, labels);
          ref.value[k] = saved - step;
          const double down = training_loss(m, cfg, x, labels);
          ref.value[k] = saved;
          const double fd = (up - down) / (2.0 * step);
          const double denom =
              std::max({std::abs(fd), std::abs(ref.grad[k]), 1e-6});
          worst = std::max(worst, std::abs(fd - ref.grad[k]) / denom);
        }
      }
      ++idx;
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst < 1e-4 && secs < 10.0,
         "gradients match centered differences in all four configurations",
         "worst rel err " + fmt(worst) + ", " + fmt(secs) + " s");
}

// ---- criterion 2: Prop. 2 certificate ----------------------------------------

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(3000);
  std::uniform_int_distribution<int> width_dist(2, 64);
  double worst_asym = 0.0, worst_eig = -1e300;
  int pass_count = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const int w = width_dist(rng);
    BlockParams p;
    p.kind = BlockKind::Shrinkage;
    p.k1 = random_matrix(w, w, rng, 1.0 / std::sqrt(double(w)));
    p.b1 = random_vector(w, rng);
    p.b2 = random_vector(w, rng);
    const Vector y = random_vector(w, rng);
    const Activation act = rep % 2 ? Activation::Tanh : Activation::ReLU;
    const Matrix j = block_jacobian(y, p, act);
    const double asym = (j - j.transpose()).cwiseAbs().maxCoeff();
    worst_asym = std::max(worst_asym, asym);
    const CertificateResult r = shrinkage_certificate(j, 1e-7);
    worst_eig = std::max(worst_eig, r.max_eigenvalue);
    if (asym <= 1e-10 && r.pass) ++pass_count;
  }
  const double secs = seconds_since(t0);
  report(2, pass_count == 500 && secs < 30.0,
         "500 random shrinkage Jacobians are symmetric with spectra <= 0",
         std::to_string(pass_count) + "/500, worst asym " + fmt(worst_asym) +
             ", worst eig " + fmt(worst_eig) + ", " + fmt(secs) + " s");
}

// ---- criterion 3: eigen-solver oracle -----------------------------------------

double lu_determinant(Matrix a) {
  const Eigen::Index n = a.rows();
  double det = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index pivot = k;
    for (Eigen::Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
    if (a(pivot, k) == 0.0) return 0.0;
    if (pivot != k) {
      a.row(pivot).swap(a.row(k));
      det = -det;
    }
    det *= a(k, k);
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4000);
  std::uniform_int_distribution<int> dim_dist(2, 32);
  double worst_trace = 0.0, worst_det = 0.0, worst_agree = 0.0;
  int ok = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = dim_dist(rng);
    Matrix a = random_matrix(n, n, rng);
    const bool symmetric = rep % 2 == 0;
    if (symmetric) a = Matrix(0.5 * (a + a.transpose()));

    const auto eigs = general_eigenvalues(a);
    Complex sum(0, 0), prod(1, 0);
    for (const auto& e : eigs) {
      sum += e;
      prod *= e;
    }
    const double trace_err =
        std::abs(sum - Complex(a.trace(), 0)) / std::max(1.0, std::abs(a.trace()));
    const double det = lu_determinant(a);
    const double det_err = std::abs(prod - Complex(det, 0)) /
                           std::max(1.0, std::abs(det));
    worst_trace = std::max(worst_trace, trace_err);
    worst_det = std::max(worst_det, det_err);

    double agree = 0.0;
    if (symmetric) {
      const auto sym = symmetric_eigenvalues(a);
      std::vector<bool> used(eigs.size(), false);
      for (double v : sym) {
        double best = 1e300;
        size_t bj = 0;
        for (size_t j = 0; j < eigs.size(); ++j) {
          if (used[j]) continue;
          const double dd = std::abs(eigs[j] - Complex(v, 0));
          if (dd < best) {
            best = dd;
            bj = j;
          }
        }
        used[bj] = true;
        agree = std::max(agree, best);
      }
      worst_agree = std::max(worst_agree, agree);
    }
    if (trace_err <= 1e-7 && det_err <= 1e-7 && agree <= 1e-7) ++ok;
  }
  const double secs = seconds_since(t0);
  report(3, ok == 200,
         "200 random spectra satisfy trace/determinant identities",
         std::to_string(ok) + "/200, worst trace " + fmt(worst_trace) +
             ", det " + fmt(worst_det) + ", sym agree " + fmt(worst_agree) +
             ", " + fmt(secs) + " s");
}

// ---- moons protocols ------------------------------------------------------------

constexpr std::uint64_t kMasterSeed = 1;

TrainSpec residual_protocol() {
  TrainSpec spec;
  spec.epochs = 30;
  spec.batch_size = 32;
  spec.learning_rate = 0.05;
  spec.momentum = 0.0;
  return spec;
}

TrainSpec batchnorm_protocol() {
  TrainSpec spec = residual_protocol();
  spec.momentum = 0.9;
  return spec;
}

TrainSpec shrinkage_protocol() {
  TrainSpec spec;
  spec.epochs = 18;
  spec.batch_size = 32;
  spec.learning_rate = 0.05;
  spec.momentum = 0.9;
  return spec;
}

NetworkConfig moons_network(int depth, double h, BlockKind kind,
                            Activation act, bool bn) {
  NetworkConfig cfg;
  cfg.depth = depth;
  cfg.width = 2;
  cfg.input_dim = 2;
  cfg.n_classes = 2;
  cfg.h = h;
  cfg.block_kind = kind;
  cfg.use_batchnorm = bn;
  cfg.activation = act;
  return cfg;
}

struct MoonsData {
  Dataset train;
  Dataset test;
};

const MoonsData& moons_data() {
  static const MoonsData data = {generate_moons(1000, 0.1, kMasterSeed),
                                 generate_moons(1000, 0.1, kMasterSeed + 1)};
  return data;
}

// criteria 4 and 9 share the depth-100 residual cells
struct ResidualCells {
  SweepCell h01;
  SweepCell h10;
};

const ResidualCells& residual_depth100_cells() {
  static const ResidualCells cells = [] {
    const auto& d = moons_data();
    const NetworkConfig cfg =
        moons_network(100, 1.0, BlockKind::Residual, Activation::Tanh, false);
    const SweepReport r = sweep(cfg, residual_protocol(), {0.1, 1.0}, 10,
                                d.train, d.test, kMasterSeed,
                                {Variant::Residual});
    return ResidualCells{r.cells[0], r.cells[1]};
  }();
  return cells;
}

void criterion_4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& cell = residual_depth100_cells().h10;

  // trajectory behaviour of the first trial's model
  const auto& d = moons_data();
  NetworkConfig cfg =
      moons_network(100, 1.0, BlockKind::Residual, Activation::Tanh, false);
  cfg.seed = kMasterSeed;  // trial 0 seed
  const TrainResult tr = train(cfg, residual_protocol(), d.train, d.test);
  bool norms_grow_or_diverged = tr.history.diverged;
  if (!tr.history.diverged) {
    const TrajectoryRecord rec =
        capture_trajectory(tr.model, cfg, d.test, {0, 100});
    norms_grow_or_diverged =
        rec.truncated ||
        rec.snapshots.back().rowwise().norm().mean() >
            rec.snapshots.front().rowwise().norm().mean();
  }
  const double secs = seconds_since(t0);
  const bool pass = cell.mean >= 0.6 && cell.mean <= 0.9 &&
                    norms_grow_or_diverged && secs < 300.0;
  report(4, pass, "plain residual h=1 depth 100 lands in the degraded band",
         "mean " + fmt(cell.mean) + " in [0.6,0.9], norms grow/diverge " +
             (norms_grow_or_diverged ? "yes" : "no") + ", " + fmt(secs) +
             " s");
}

void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& d = moons_data();
  const NetworkConfig cfg =
      moons_network(500, 0.1, BlockKind::Residual, Activation::Tanh, false);
  const SweepReport r = sweep(cfg, residual_protocol(), {0.1}, 10, d.train,
                              d.test, kMasterSeed, {Variant::Residual});
  const double secs = seconds_since(t0);
  const double mean = r.cells[0].mean;
  report(5, mean >= 0.97 && secs < 900.0,
         "residual h=0.1 depth 500 reaches near-perfect accuracy",
         "mean " + fmt(mean) + " >= 0.97, " + fmt(secs) + " s");
}

struct ShrinkageCells {
  SweepCell h01;
  SweepCell h10;
  Model trial0_h10_model;
  NetworkConfig trial0_h10_cfg;
};

const ShrinkageCells& shrinkage_cells() {
  static const ShrinkageCells cells = [] {
    const auto& d = moons_data();
    const NetworkConfig cfg = moons_network(100, 1.0, BlockKind::Shrinkage,
                                            Activation::ReLU, false);
    const SweepReport r = sweep(cfg, shrinkage_protocol(), {0.1, 1.0}, 10,
                                d.train, d.test, kMasterSeed,
                                {Variant::Shrinkage});
    NetworkConfig c0 = cfg;
    c0.h = 1.0;
    c0.seed = kMasterSeed;
    const TrainResult tr = train(c0, shrinkage_protocol(), d.train, d.test);
    return ShrinkageCells{r.cells[0], r.cells[1], tr.model, c0};
  }();
  return cells;
}

void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& cells = shrinkage_cells();
  const auto& d = moons_data();
  const TrajectoryRecord rec = capture_trajectory(
      cells.trial0_h10_model, cells.trial0_h10_cfg, d.test, {0, 100});
  const bool norms_shrink =
      !rec.truncated && rec.snapshots.back().rowwise().norm().mean() <
                            rec.snapshots.front().rowwise().norm().mean();
  const double secs = seconds_since(t0);
  report(6, cells.h10.mean < 0.75 && norms_shrink,
         "shrinkage h=1 depth 100 stays weak with contracting features",
         "mean " + fmt(cells.h10.mean) + " < 0.75, norms shrink " +
             (norms_shrink ? "yes" : "no") + ", " + fmt(secs) + " s");
}

void criterion_7() {
  const auto& cell = shrinkage_cells().h01;
  report(7, cell.mean >= 0.75 && cell.mean <= 0.92,
         "shrinkage h=0.1 recovers mid-band accuracy",
         "mean " + fmt(cell.mean) + " in [0.75,0.92]");
}

void criterion_8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& d = moons_data();
  const NetworkConfig cfg =
      moons_network(500, 0.1, BlockKind::Residual, Activation::Tanh, true);
  const SweepReport r =
      sweep(cfg, batchnorm_protocol(), {0.1}, 10, d.train, d.test, kMasterSeed,
            {Variant::ResidualBatchNorm});
  const double secs = seconds_since(t0);
  const double mean = r.cells[0].mean;
  report(8, mean >= 0.97,
         "batch norm with h=0.1 at depth 500 reaches near-perfect accuracy",
         "mean " + fmt(mean) + " >= 0.97, " + fmt(secs) + " s");
}

void criterion_9() {
  const auto& cells = residual_depth100_cells();
  const bool pass = cells.h01.mean > cells.h10.mean &&
                    cells.h01.stddev < cells.h10.stddev;
  report(9, pass, "h=0.1 beats h=1.0 in mean and variance at depth 100",
         "means " + fmt(cells.h01.mean) + " > " + fmt(cells.h10.mean) +
             ", stds " + fmt(cells.h01.stddev) + " < " +
             fmt(cells.h10.stddev));
}

// ---- criterion 10: wine-settings harness run -----------------------------------

// 13 features, 3 classes, 178 rows: shaped like the wine table the paper
// trains on, but synthetic so the run needs no external download.
void write_wine_like_csv(const std::string& path) {
  std::mt19937_64 rng(5000);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int sizes[3] = {59, 71, 48};
  Matrix centers(3, 13);
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < 13; ++j) centers(c, j) = 1.8 * gauss(rng);
  std::ostringstream out;
  for (int j = 0; j < 13; ++j) out << 'f' << j << ',';
  out << "class\n";
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < sizes[c]; ++i) {
      for (int j = 0; j < 13; ++j)
        out << fmt_full(centers(c, j) + gauss(rng)) << ',';
      out << c << '\n';
    }
  }
  write_text_atomic(path, out.str());
}

bool xml_well_formed(const std::string& text) {
  std::vector<std::string> stack;
  size_t i = 0;
  bool seen_root = false;
  while (i < text.size()) {
    if (text[i] != '<') {
      ++i;
      continue;
    }
    const size_t end = text.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = text.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    const bool self_closing = tag.back() == '/';
    if (self_closing) tag.pop_back();
    const size_t space = tag.find_first_of(" \t\n");
    const std::string name =
        space == std::string::npos ? tag : tag.substr(0, space);
    if (name.empty()) return false;
    if (stack.empty() && seen_root) return false;
    seen_root = true;
    if (!self_closing) stack.push_back(name);
  }
  return stack.empty() && seen_root;
}

void criterion_10() {
  const auto t0 = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "resode_acceptance_wine";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string csv_path = (dir / "wine_like.csv").string();
  write_wine_like_csv(csv_path);

  CsvSpec csv_spec;
  csv_spec.label_column = "class";
  const Dataset full = load_csv(csv_path, csv_spec);
  SplitSpec split_spec;
  split_spec.train_fraction = 0.8;
  split_spec.stratified = true;
  split_spec.seed = kMasterSeed;
  auto [train_raw, test_raw] = split(full, split_spec);
  const Dataset train_set = standardize(train_raw);
  const Dataset test_set =
      apply_standardization(test_raw, *train_set.standardization);

  NetworkConfig cfg;
  cfg.depth = 20;  // wine settings: 20 hidden blocks, width 13, batch 10
  cfg.width = 13;
  cfg.input_dim = 13;
  cfg.n_classes = 3;
  TrainSpec spec;
  spec.epochs = 50;
  spec.batch_size = 10;
  spec.learning_rate = 0.05;

  const SweepReport r = sweep(cfg, spec, default_h_grid(), 10, train_set,
                              test_set, kMasterSeed);
  const std::string trials_csv = sweep_csv(r);
  const std::string summary_csv = sweep_summary_csv(r);
  const std::string chart = accuracy_vs_h_svg(r);
  write_text_atomic((dir / "sweep.csv").string(), trials_csv);
  write_text_atomic((dir / "sweep_summary.csv").string(), summary_csv);
  write_text_atomic((dir / "accuracy_vs_h.svg").string(), chart);

  int rows = -1;  // exclude header
  for (char ch : trials_csv)
    if (ch == '\n') ++rows;
  const bool counts_ok = rows == 6 * 3 * 10;

  double std_h01 = -1.0, std_h10 = -1.0;
  for (const auto& cell : r.cells) {
    if (cell.variant != Variant::Residual) continue;
    if (cell.h == 0.1) std_h01 = cell.stddev;
    if (cell.h == 1.0) std_h10 = cell.stddev;
  }
  const bool std_ok = std_h01 >= 0.0 && std_h10 >= 0.0 && std_h01 <= std_h10;
  const double secs = seconds_since(t0);
  report(10, counts_ok && std_ok && xml_well_formed(chart),
         "wine-settings sweep completes with well-formed outputs",
         std::to_string(rows) + " trial rows, residual std " + fmt(std_h01) +
             " (h=0.1) <= " + fmt(std_h10) + " (h=1.0), " + fmt(secs) + " s");
}

// ---- criterion 11: perturbation probe ---------------------------------------------

void criterion_11() {
  const auto t0 = std::chrono::steady_clock::now();

  NetworkConfig id_cfg =
      moons_network(50, 1.0, BlockKind::Residual, Activation::Tanh, false);
  id_cfg.seed = kMasterSeed;
  Model id_model = init_model(id_cfg);
  for (auto& b : id_model.blocks) {
    b.k1.setZero();
    b.k2.setZero();
    b.b1.setZero();
    b.b2.setZero();
  }
  const PerturbationProbe idp = perturbation_amplification(
      id_model, id_cfg, Vector::Zero(2), 1e-3, 16, kMasterSeed);
  const bool identity_ok = std::abs(idp.amplification - 1.0) <= 1e-12;

  int larger = 0;
  for (int s = 0; s < 10; ++s) {
    NetworkConfig cfg =
        moons_network(100, 1.0, BlockKind::Residual, Activation::Tanh, false);
    cfg.seed = kMasterSeed ^ std::uint64_t(s);
    const Model m = init_model(cfg);  // paired: same weights, h differs
    Vector y0(2);
    y0 << 1.0, 0.25;  // a point on the class-0 arc
    NetworkConfig small = cfg;
    small.h = 0.1;
    const double amp_big =
        perturbation_amplification(m, cfg, y0, 1e-3, 16, 7000 + s)
            .amplification;
    const double amp_small =
        perturbation_amplification(m, small, y0, 1e-3, 16, 7000 + s)
            .amplification;
    if (amp_big > amp_small) ++larger;
  }
  const double secs = seconds_since(t0);
  report(11, identity_ok && larger >= 8,
         "identity nets amplify by one; h=1 amplifies more than h=0.1",
         "identity amp " + fmt(idp.amplification) + ", larger in " +
             std::to_string(larger) + "/10 paired seeds, " + fmt(secs) +
             " s");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  if (g_failures == 0) {
    std::printf("all 11 acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  }
  return g_failures == 0 ? 0 : 1;
}
