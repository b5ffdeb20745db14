#include "resode/train.hpp"

#include <cmath>

namespace resode {

namespace {

constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;

struct SgdState {
  double lr = 0.0;
  double momentum = 0.0;
  Gradients velocity;
  bool has_velocity = false;
};

void axpy(Matrix& p, Matrix& v, const Matrix& g, const SgdState& s) {
  if (s.momentum > 0.0) {
    v = s.momentum * v + g;
    p -= s.lr * v;
  } else {
    p -= s.lr * g;
  }
}

void axpy(Vector& p, Vector& v, const Vector& g, const SgdState& s) {
  if (s.momentum > 0.0) {
    v = s.momentum * v + g;
    p -= s.lr * v;
  } else {
    p -= s.lr * g;
  }
}

Gradients zero_like(const Model& m) {
  Gradients z;
  if (!m.identity_input) {
    z.input_w = Matrix::Zero(m.input_w.rows(), m.input_w.cols());
    z.input_b = Vector::Zero(m.input_b.size());
  }
  z.blocks.resize(m.blocks.size());
  for (size_t i = 0; i < m.blocks.size(); ++i) {
    const auto& b = m.blocks[i];
    auto& g = z.blocks[i];
    g.k1 = Matrix::Zero(b.k1.rows(), b.k1.cols());
    if (b.k2.size() > 0) g.k2 = Matrix::Zero(b.k2.rows(), b.k2.cols());
    g.b1 = Vector::Zero(b.b1.size());
    g.b2 = Vector::Zero(b.b2.size());
    if (!m.bn.empty()) {
      g.gamma = Vector::Zero(m.bn[i].gamma.size());
      g.beta = Vector::Zero(m.bn[i].beta.size());
    }
  }
  z.head_w = Matrix::Zero(m.head_w.rows(), m.head_w.cols());
  z.head_b = Vector::Zero(m.head_b.size());
  return z;
}

void sgd_step(Model& m, const Gradients& g, SgdState& s) {
  if (s.momentum > 0.0 && !s.has_velocity) {
    s.velocity = zero_like(m);
    s.has_velocity = true;
  }
  Gradients& v = s.momentum > 0.0 ? s.velocity : const_cast<Gradients&>(g);
  // with momentum off, axpy never writes its velocity argument
  if (!m.identity_input) {
    axpy(m.input_w, v.input_w, g.input_w, s);
    axpy(m.input_b, v.input_b, g.input_b, s);
  }
  for (size_t i = 0; i < m.blocks.size(); ++i) {
    auto& blk = m.blocks[i];
    auto& vb = v.blocks[i];
    axpy(blk.k1, vb.k1, g.blocks[i].k1, s);
    if (blk.k2.size() > 0) axpy(blk.k2, vb.k2, g.blocks[i].k2, s);
    axpy(blk.b1, vb.b1, g.blocks[i].b1, s);
    axpy(blk.b2, vb.b2, g.blocks[i].b2, s);
    if (!m.bn.empty()) {
      axpy(m.bn[i].gamma, vb.gamma, g.blocks[i].gamma, s);
      axpy(m.bn[i].beta, vb.beta, g.blocks[i].beta, s);
    }
  }
  axpy(m.head_w, v.head_w, g.head_w, s);
  axpy(m.head_b, v.head_b, g.head_b, s);
}

void check_compatible(const NetworkConfig& cfg, const Dataset& d,
                      const char* which) {
  if (d.dim() != cfg.input_dim)
    throw std::invalid_argument(std::string("train: ") + which + " set has " +
                                std::to_string(d.dim()) +
                                " features, config expects " +
                                std::to_string(cfg.input_dim));
  for (int lab : d.labels) {
    if (lab < 0 || lab >= cfg.n_classes)
      throw std::invalid_argument(std::string("train: ") + which +
                                  " label outside [0, n_classes)");
  }
}

}  // namespace

void validate(const TrainSpec& spec) {
  if (spec.epochs < 1)
    throw std::invalid_argument("train spec: epochs must be >= 1");
  if (spec.batch_size < 1)
    throw std::invalid_argument("train spec: batch_size must be >= 1");
  if (!(spec.learning_rate > 0.0) && spec.learning_rate != 0.0)
    throw std::invalid_argument("train spec: learning_rate must be >= 0");
  if (spec.momentum < 0.0 || spec.momentum >= 1.0)
    throw std::invalid_argument("train spec: momentum must lie in [0, 1)");
}

double evaluate(const Model& m, const NetworkConfig& cfg, const Dataset& d) {
  if (d.dim() != cfg.input_dim)
    throw std::invalid_argument("evaluate: dataset has " +
                                std::to_string(d.dim()) +
                                " features, config expects " +
                                std::to_string(cfg.input_dim));
  if (d.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const ForwardPass fp = run_network(d.features, m, cfg);
  int correct = 0;
  for (Eigen::Index i = 0; i < fp.logits.rows(); ++i) {
    Eigen::Index argmax;
    fp.logits.row(i).maxCoeff(&argmax);
    if (static_cast<int>(argmax) == d.labels[i]) ++correct;
  }
  return double(correct) / double(d.size());
}

TrainResult train(const NetworkConfig& cfg, const TrainSpec& spec,
                  const Dataset& train_set, const Dataset& test_set) {
  validate(cfg);
  validate(spec);
  check_compatible(cfg, train_set, "train");
  check_compatible(cfg, test_set, "test");

  TrainResult result;
  result.model = init_model(cfg);
  Model& m = result.model;
  History& hist = result.history;

  std::mt19937_64 shuffle_rng(cfg.seed ^ kShuffleStream);
  SgdState sgd{spec.learning_rate, spec.momentum, {}, false};
  const int n = static_cast<int>(train_set.size());

  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    auto batches = make_batches(n, spec.batch_size, shuffle_rng);
    // Batch norm needs at least two rows; fold a trailing singleton into the
    // previous batch so every row is still visited once.
    if (cfg.use_batchnorm && batches.size() > 1 &&
        batches.back().size() == 1) {
      batches[batches.size() - 2].push_back(batches.back()[0]);
      batches.pop_back();
    }

    double loss_sum = 0.0;
    for (const auto& batch : batches) {
      const Matrix x = take_rows(train_set.features, batch);
      const std::vector<int> y = take_labels(train_set.labels, batch);

      ForwardOptions opt;
      opt.bn_mode = BatchNormMode::Train;
      opt.update_running_stats = true;
      opt.keep_cache = true;
      opt.throw_on_divergence = false;
      const ForwardPass fp = run_network(x, m, cfg, opt);
      if (fp.diverged()) {
        hist.diverged = true;
        hist.diverged_epoch = epoch;
        hist.diverged_layer = fp.diverged_layer;
        return result;
      }
      const LossGrad lg = softmax_cross_entropy(fp.logits, y);
      const Gradients g = network_backward(m, cfg, fp, lg.grad_logits);
      sgd_step(m, g, sgd);
      loss_sum += lg.loss;
    }

    try {
      const double train_acc = evaluate(m, cfg, train_set);
      const double test_acc = evaluate(m, cfg, test_set);
      hist.train_loss.push_back(loss_sum / double(batches.size()));
      hist.train_acc.push_back(train_acc);
      hist.test_acc.push_back(test_acc);
    } catch (const DivergenceError& e) {
      // Parameters went non-finite on the last batch of this epoch.
      hist.diverged = true;
      hist.diverged_epoch = epoch;
      hist.diverged_layer = e.layer();
      return result;
    }
  }
  return result;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Residual: return "residual";
    case Variant::ResidualBatchNorm: return "residual_batchnorm";
    case Variant::Shrinkage: return "shrinkage";
  }
  return "unknown";
}

Variant variant_from_name(const std::string& name) {
  if (name == "residual") return Variant::Residual;
  if (name == "residual_batchnorm") return Variant::ResidualBatchNorm;
  if (name == "shrinkage") return Variant::Shrinkage;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

NetworkConfig apply_variant(NetworkConfig cfg, Variant v) {
  switch (v) {
    case Variant::Residual:
      cfg.block_kind = BlockKind::Residual;
      cfg.use_batchnorm = false;
      break;
    case Variant::ResidualBatchNorm:
      cfg.block_kind = BlockKind::Residual;
      cfg.use_batchnorm = true;
      break;
    case Variant::Shrinkage:
      cfg.block_kind = BlockKind::Shrinkage;
      cfg.use_batchnorm = false;
      break;
  }
  return cfg;
}

SweepReport sweep(const NetworkConfig& cfg_template, const TrainSpec& spec,
                  const std::vector<double>& h_values, int n_trials,
                  const Dataset& train_set, const Dataset& test_set,
                  std::uint64_t master_seed,
                  const std::vector<Variant>& variants) {
  if (n_trials < 1) throw std::invalid_argument("sweep: n_trials must be >= 1");
  if (h_values.empty())
    throw std::invalid_argument("sweep: h grid must be non-empty");

  SweepReport report;
  report.h_values = h_values;
  report.variants = variants;

  for (double h : h_values) {
    for (Variant variant : variants) {
      SweepCell cell;
      cell.h = h;
      cell.variant = variant;
      for (int t = 0; t < n_trials; ++t) {
        NetworkConfig cfg = apply_variant(cfg_template, variant);
        cfg.h = h;
        cfg.seed = master_seed ^ static_cast<std::uint64_t>(t);
        const TrainResult tr = train(cfg, spec, train_set, test_set);

        TrialResult trial;
        trial.seed = cfg.seed;
        trial.diverged = tr.history.diverged;
        if (!tr.history.test_acc.empty()) {
          trial.has_accuracy = true;
          trial.accuracy = tr.history.test_acc.back();
        }
        cell.trials.push_back(trial);
      }

      double sum = 0.0;
      int with_acc = 0;
      for (const auto& t : cell.trials) {
        if (t.diverged) ++cell.diverged_count;
        else ++cell.completed;
        if (t.has_accuracy) {
          sum += t.accuracy;
          ++with_acc;
        }
      }
      if (with_acc > 0) {
        cell.mean = sum / with_acc;
        double sq = 0.0;
        for (const auto& t : cell.trials) {
          if (t.has_accuracy) sq += (t.accuracy - cell.mean) * (t.accuracy - cell.mean);
        }
        cell.stddev = std::sqrt(sq / with_acc);
      } else {
        cell.mean = std::numeric_limits<double>::quiet_NaN();
        cell.stddev = std::numeric_limits<double>::quiet_NaN();
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace resode
