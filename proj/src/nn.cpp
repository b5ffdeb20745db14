#include "resode/nn.hpp"

#include <cmath>
#include <random>

namespace resode {

namespace {

void check_block_dims(const Vector& y, const BlockParams& p) {
  const auto w = y.size();
  if (p.k1.rows() != w || p.k1.cols() != w || p.b1.size() != w ||
      p.b2.size() != w) {
    throw std::invalid_argument("block parameters do not match feature width " +
                                std::to_string(w));
  }
  if (p.kind == BlockKind::Residual &&
      (p.k2.rows() != w || p.k2.cols() != w)) {
    throw std::invalid_argument("residual block requires a width x width K2");
  }
}

Matrix normal_matrix(int rows, int cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Matrix batchnorm_train_step(const Matrix& x, BatchNormParams& p,
                            BatchNormCache* cache, bool update_running) {
  const auto n = x.rows();
  if (n < 2)
    throw std::invalid_argument(
        "batchnorm_forward: train mode needs a batch of at least 2 rows");
  const Vector mean = x.colwise().mean().transpose();
  Matrix centered = x.rowwise() - mean.transpose();
  const Vector var = centered.array().square().colwise().mean().transpose();
  const Vector inv_std = (var.array() + p.epsilon).sqrt().inverse().matrix();
  Matrix xhat =
      (centered.array().rowwise() * inv_std.transpose().array()).matrix();
  Matrix out = (xhat.array().rowwise() * p.gamma.transpose().array()).matrix();
  out.rowwise() += p.beta.transpose();
  if (update_running) {
    p.running_mean = (1.0 - p.momentum) * p.running_mean + p.momentum * mean;
    p.running_var = (1.0 - p.momentum) * p.running_var + p.momentum * var;
  }
  if (cache) {
    cache->mean = mean;
    cache->inv_std = inv_std;
    cache->xhat = xhat;
  }
  return out;
}

Matrix batchnorm_infer_step(const Matrix& x, const BatchNormParams& p) {
  const Vector scale =
      (p.running_var.array() + p.epsilon).sqrt().inverse().matrix()
          .cwiseProduct(p.gamma);
  Matrix out = ((x.rowwise() - p.running_mean.transpose()).array().rowwise() *
                scale.transpose().array())
                   .matrix();
  out.rowwise() += p.beta.transpose();
  return out;
}

// dL/dZ given dL/d(batchnorm output), train-mode statistics.
Matrix batchnorm_backward(const Matrix& dout, const BatchNormCache& c,
                          const BatchNormParams& p, Vector* dgamma,
                          Vector* dbeta) {
  const double n = static_cast<double>(dout.rows());
  *dgamma = dout.cwiseProduct(c.xhat).colwise().sum().transpose();
  *dbeta = dout.colwise().sum().transpose();
  Matrix dxhat = (dout.array().rowwise() * p.gamma.transpose().array()).matrix();
  const Vector sum_dxhat = dxhat.colwise().sum().transpose();
  const Vector sum_dxhat_xhat =
      dxhat.cwiseProduct(c.xhat).colwise().sum().transpose();
  Matrix dx = n * dxhat;
  dx.rowwise() -= sum_dxhat.transpose();
  dx -= (c.xhat.array().rowwise() * sum_dxhat_xhat.transpose().array()).matrix();
  dx = (dx.array().rowwise() * (c.inv_std / n).transpose().array()).matrix();
  return dx;
}

}  // namespace

std::string to_string(BlockKind kind) {
  return kind == BlockKind::Residual ? "residual" : "shrinkage";
}

std::string to_string(Activation act) {
  return act == Activation::Tanh ? "tanh" : "relu";
}

BlockKind block_kind_from_string(const std::string& name) {
  if (name == "residual") return BlockKind::Residual;
  if (name == "shrinkage") return BlockKind::Shrinkage;
  throw std::invalid_argument("unknown block kind '" + name + "'");
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::ReLU;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

void validate(const NetworkConfig& cfg) {
  if (cfg.depth < 1) throw std::invalid_argument("config: depth must be >= 1");
  if (cfg.width < 1) throw std::invalid_argument("config: width must be >= 1");
  if (!(cfg.h > 0.0) || cfg.h > 1.0)
    throw std::invalid_argument("config: h must lie in (0, 1]");
  if (cfg.input_dim < 1)
    throw std::invalid_argument("config: input_dim must be >= 1");
  if (cfg.width < cfg.input_dim)
    throw std::invalid_argument("config: width must be >= input_dim");
  if (cfg.n_classes < 2)
    throw std::invalid_argument("config: n_classes must be >= 2");
}

Model init_model(const NetworkConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  Model m;
  m.identity_input = cfg.input_dim == cfg.width;
  if (!m.identity_input) {
    m.input_w = normal_matrix(cfg.width, cfg.input_dim,
                              1.0 / std::sqrt(double(cfg.input_dim)), rng);
    m.input_b = Vector::Zero(cfg.width);
  }
  const double block_std = 1.0 / std::sqrt(double(cfg.width));
  m.blocks.reserve(cfg.depth);
  for (int i = 0; i < cfg.depth; ++i) {
    BlockParams p;
    p.kind = cfg.block_kind;
    p.k1 = normal_matrix(cfg.width, cfg.width, block_std, rng);
    if (cfg.block_kind == BlockKind::Residual)
      p.k2 = normal_matrix(cfg.width, cfg.width, block_std, rng);
    p.b1 = Vector::Zero(cfg.width);
    p.b2 = Vector::Zero(cfg.width);
    m.blocks.push_back(std::move(p));
  }
  if (cfg.use_batchnorm) {
    m.bn.resize(cfg.depth);
    for (auto& bn : m.bn) {
      bn.gamma = Vector::Ones(cfg.width);
      bn.beta = Vector::Zero(cfg.width);
      bn.running_mean = Vector::Zero(cfg.width);
      bn.running_var = Vector::Ones(cfg.width);
    }
  }
  m.head_w = normal_matrix(cfg.n_classes, cfg.width, block_std, rng);
  m.head_b = Vector::Zero(cfg.n_classes);
  return m;
}

Vector activation_apply(const Vector& x, Activation kind) {
  if (kind == Activation::ReLU) return x.cwiseMax(0.0);
  return x.array().tanh().matrix();
}

Vector activation_derivative(const Vector& x, Activation kind) {
  if (kind == Activation::ReLU)
    return (x.array() > 0.0).cast<double>().matrix();  // 0 at the kink
  const Eigen::ArrayXd t = x.array().tanh();
  return (1.0 - t.square()).matrix();
}

Matrix activation_apply(const Matrix& x, Activation kind) {
  if (kind == Activation::ReLU) return x.cwiseMax(0.0);
  return x.array().tanh().matrix();
}

Matrix activation_derivative(const Matrix& x, Activation kind) {
  if (kind == Activation::ReLU)
    return (x.array() > 0.0).cast<double>().matrix();
  const Eigen::ArrayXXd t = x.array().tanh();
  return (1.0 - t.square()).matrix();
}

Vector residual_block_forward(const Vector& y, const BlockParams& p, double h,
                              Activation act) {
  check_block_dims(y, p);
  const Vector a = activation_apply(Vector(p.k1 * y + p.b1), act);
  return y + h * (p.k2 * a + p.b2);
}

Vector shrinkage_block_forward(const Vector& y, const BlockParams& p, double h,
                               Activation act) {
  check_block_dims(y, p);
  const Vector a = activation_apply(Vector(p.k1 * y + p.b1), act);
  return y - h * (p.k1.transpose() * a + p.b2);
}

Matrix block_jacobian(const Vector& y, const BlockParams& p, Activation act,
                      const BatchNormParams* bn) {
  check_block_dims(y, p);
  Vector z = p.k1 * y + p.b1;
  Vector scale = Vector::Ones(y.size());
  if (bn) {
    const Vector inv_std =
        (bn->running_var.array() + bn->epsilon).sqrt().inverse().matrix();
    scale = bn->gamma.cwiseProduct(inv_std);
    z = (z - bn->running_mean).cwiseProduct(scale) + bn->beta;
  }
  const Vector d = activation_derivative(z, act).cwiseProduct(scale);
  if (p.kind == BlockKind::Shrinkage)
    return -(p.k1.transpose() * d.asDiagonal() * p.k1);
  return p.k2 * d.asDiagonal() * p.k1;
}

Matrix batchnorm_forward(const Matrix& x, BatchNormParams& p,
                         BatchNormMode mode) {
  if (x.cols() != p.gamma.size())
    throw std::invalid_argument("batchnorm_forward: feature count mismatch");
  if (mode == BatchNormMode::Train)
    return batchnorm_train_step(x, p, nullptr, true);
  return batchnorm_infer_step(x, p);
}

ForwardPass run_network(const Matrix& x, Model& m, const NetworkConfig& cfg,
                        const ForwardOptions& opt) {
  if (x.cols() != cfg.input_dim)
    throw std::invalid_argument("run_network: input has " +
                                std::to_string(x.cols()) +
                                " features, config expects " +
                                std::to_string(cfg.input_dim));
  if (static_cast<int>(m.blocks.size()) != cfg.depth &&
      !(cfg.depth == 0 && m.blocks.empty()))
    throw std::invalid_argument("run_network: model depth differs from config");
  const bool use_bn = !m.bn.empty();

  ForwardPass fp;
  fp.cached = opt.keep_cache;
  if (opt.keep_cache) fp.input = x;

  auto record = [&](int layer, const Matrix& state) {
    if (!opt.record_layers) return;
    for (int want : *opt.record_layers) {
      if (want == layer) {
        fp.recorded_layers.push_back(layer);
        fp.snapshots.push_back(state);
        return;
      }
    }
  };

  Matrix y;
  if (m.identity_input) {
    y = x;
  } else {
    y = x * m.input_w.transpose();
    y.rowwise() += m.input_b.transpose();
  }
  if (!all_finite(y)) {
    if (opt.throw_on_divergence) throw DivergenceError(0);
    fp.diverged_layer = 0;
    return fp;
  }
  record(0, y);
  if (opt.keep_cache) fp.layer_states.push_back(y);

  const int depth = static_cast<int>(m.blocks.size());
  for (int i = 0; i < depth; ++i) {
    BlockParams& p = m.blocks[i];
    Matrix z = y * p.k1.transpose();
    z.rowwise() += p.b1.transpose();

    Matrix zn;
    BatchNormCache bc;
    if (use_bn) {
      if (opt.bn_mode == BatchNormMode::Train) {
        zn = batchnorm_train_step(z, m.bn[i], opt.keep_cache ? &bc : nullptr,
                                  opt.update_running_stats);
      } else {
        zn = batchnorm_infer_step(z, m.bn[i]);
      }
    } else {
      zn = z;
    }
    Matrix a = activation_apply(zn, cfg.activation);

    Matrix next;
    if (p.kind == BlockKind::Residual) {
      next = y + cfg.h * (a * p.k2.transpose());
      next.rowwise() += (cfg.h * p.b2).transpose();
    } else {
      next = y - cfg.h * (a * p.k1);
      next.rowwise() -= (cfg.h * p.b2).transpose();
    }

    if (opt.keep_cache) {
      fp.preact.push_back(std::move(z));
      fp.normed.push_back(std::move(zn));
      fp.activated.push_back(std::move(a));
      if (use_bn) fp.bn_cache.push_back(std::move(bc));
    }

    if (!all_finite(next)) {
      if (opt.throw_on_divergence) throw DivergenceError(i + 1);
      fp.diverged_layer = i + 1;
      return fp;
    }
    y = std::move(next);
    record(i + 1, y);
    if (opt.keep_cache) fp.layer_states.push_back(y);
  }

  fp.logits = y * m.head_w.transpose();
  fp.logits.rowwise() += m.head_b.transpose();
  if (!all_finite(fp.logits)) {
    if (opt.throw_on_divergence) throw DivergenceError(depth + 1);
    fp.diverged_layer = depth + 1;
    fp.logits.resize(0, 0);
  }
  return fp;
}

ForwardPass run_network(const Matrix& x, const Model& m,
                        const NetworkConfig& cfg, ForwardOptions opt) {
  opt.bn_mode = BatchNormMode::Infer;
  opt.update_running_stats = false;
  // Infer mode never writes through the model reference.
  return run_network(x, const_cast<Model&>(m), cfg, opt);
}

NetworkOutput network_forward(const Matrix& x, const Model& m,
                              const NetworkConfig& cfg, bool record) {
  ForwardOptions opt;
  std::vector<int> all_layers;
  if (record) {
    const int depth = static_cast<int>(m.blocks.size());
    all_layers.resize(depth + 1);
    for (int i = 0; i <= depth; ++i) all_layers[i] = i;
    opt.record_layers = &all_layers;
  }
  ForwardPass fp = run_network(x, m, cfg, opt);
  return {std::move(fp.logits), std::move(fp.recorded_layers),
          std::move(fp.snapshots)};
}

LossGrad softmax_cross_entropy(const Matrix& logits,
                               const std::vector<int>& labels) {
  const auto n = logits.rows();
  const auto c = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  for (int lab : labels) {
    if (lab < 0 || lab >= c)
      throw std::invalid_argument("softmax_cross_entropy: label " +
                                  std::to_string(lab) + " outside [0, " +
                                  std::to_string(c) + ")");
  }
  LossGrad out;
  out.grad_logits.resize(n, c);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::ArrayXd shifted = logits.row(i).transpose().array() - mx;
    const double lse = mx + std::log(shifted.exp().sum());
    loss += lse - logits(i, labels[i]);
    out.grad_logits.row(i) =
        ((logits.row(i).array() - lse).exp() / double(n)).matrix();
    out.grad_logits(i, labels[i]) -= 1.0 / double(n);
  }
  out.loss = loss / double(n);
  return out;
}

Gradients network_backward(const Model& m, const NetworkConfig& cfg,
                           const ForwardPass& cache,
                           const Matrix& grad_logits) {
  if (!cache.cached)
    throw std::invalid_argument(
        "network_backward: forward pass was run without keep_cache");
  const int depth = static_cast<int>(m.blocks.size());
  if (static_cast<int>(cache.layer_states.size()) != depth + 1)
    throw std::invalid_argument("network_backward: incomplete forward cache");
  const bool use_bn = !m.bn.empty();

  Gradients g;
  g.blocks.resize(depth);

  const Matrix& y_final = cache.layer_states.back();
  g.head_w = grad_logits.transpose() * y_final;
  g.head_b = grad_logits.colwise().sum().transpose();
  Matrix dy = grad_logits * m.head_w;

  for (int i = depth - 1; i >= 0; --i) {
    const BlockParams& p = m.blocks[i];
    const Matrix& y = cache.layer_states[i];
    const Matrix& a = cache.activated[i];
    BlockGradients& bg = g.blocks[i];

    Matrix da;
    Matrix k1_from_update;  // shrinkage only: gradient through the K1^T reuse
    if (p.kind == BlockKind::Residual) {
      bg.k2 = cfg.h * (dy.transpose() * a);
      bg.b2 = cfg.h * dy.colwise().sum().transpose();
      da = cfg.h * (dy * p.k2);
    } else {
      k1_from_update = -cfg.h * (a.transpose() * dy);
      bg.b2 = -cfg.h * dy.colwise().sum().transpose();
      da = -cfg.h * (dy * p.k1.transpose());
    }

    Matrix dzn = da.cwiseProduct(
        activation_derivative(cache.normed[i], cfg.activation));
    Matrix dz;
    if (use_bn) {
      dz = batchnorm_backward(dzn, cache.bn_cache[i], m.bn[i], &bg.gamma,
                              &bg.beta);
    } else {
      dz = std::move(dzn);
    }

    bg.k1 = dz.transpose() * y;
    if (p.kind == BlockKind::Shrinkage) bg.k1 += k1_from_update;
    bg.b1 = dz.colwise().sum().transpose();

    dy += dz * p.k1;  // identity path plus the preactivation path
  }

  if (!m.identity_input) {
    g.input_w = dy.transpose() * cache.input;
    g.input_b = dy.colwise().sum().transpose();
  }
  return g;
}

}  // namespace resode
