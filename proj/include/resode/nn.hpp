#pragma once

#include "resode/linalg.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace resode {

enum class BlockKind { Residual, Shrinkage };
enum class Activation { Tanh, ReLU };
enum class BatchNormMode { Train, Infer };

std::string to_string(BlockKind kind);
std::string to_string(Activation act);
BlockKind block_kind_from_string(const std::string& name);
Activation activation_from_string(const std::string& name);

/// Thrown when a forward pass produces non-finite activations. Layer 0 is the
/// input projection output; layer i >= 1 is the output of block i.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(int layer)
      : std::runtime_error("non-finite activations at layer " +
                           std::to_string(layer)),
        layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

struct BlockParams {
  Matrix k1;  // width x width
  Matrix k2;  // width x width; empty for shrinkage blocks (update reuses k1^T)
  Vector b1;
  Vector b2;
  BlockKind kind = BlockKind::Residual;
};

struct BatchNormParams {
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;
  double epsilon = 1e-5;
  double momentum = 0.1;  // weight of the current batch in the running stats
};

struct NetworkConfig {
  int depth = 1;
  int width = 2;
  double h = 1.0;  // Euler step size, in (0, 1]
  BlockKind block_kind = BlockKind::Residual;
  bool use_batchnorm = false;
  Activation activation = Activation::Tanh;
  int input_dim = 2;
  int n_classes = 2;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument describing the first offending field.
void validate(const NetworkConfig& cfg);

struct Model {
  bool identity_input = true;  // input_dim == width: projection is a no-op
  Matrix input_w;              // width x input_dim when not identity
  Vector input_b;
  std::vector<BlockParams> blocks;
  std::vector<BatchNormParams> bn;  // one per block when batch norm is on
  Matrix head_w;                    // n_classes x width
  Vector head_b;
};

/// Deterministic per seed: weights i.i.d. normal with std 1/sqrt(fan_in),
/// biases zero, batch-norm scale 1 / shift 0.
Model init_model(const NetworkConfig& cfg);

// ----- activations ----------------------------------------------------------

Vector activation_apply(const Vector& x, Activation kind);
Vector activation_derivative(const Vector& x, Activation kind);
Matrix activation_apply(const Matrix& x, Activation kind);
Matrix activation_derivative(const Matrix& x, Activation kind);

// ----- single-sample block updates ------------------------------------------

/// y + h * (K2 sigma(K1 y + b1) + b2)
Vector residual_block_forward(const Vector& y, const BlockParams& p, double h,
                              Activation act);

/// y - h * (K1^T sigma(K1 y + b1) + b2)
Vector shrinkage_block_forward(const Vector& y, const BlockParams& p, double h,
                               Activation act);

/// Jacobian of the block map f with respect to y (identity and h excluded):
/// residual  J =  K2 diag(sigma'(K1 y + b1)) K1
/// shrinkage J = -K1^T diag(sigma'(K1 y + b1)) K1
/// When bn is given, its inference-mode affine scaling is folded in.
Matrix block_jacobian(const Vector& y, const BlockParams& p, Activation act,
                      const BatchNormParams* bn = nullptr);

// ----- batch norm ------------------------------------------------------------

struct BatchNormCache {
  Vector mean;
  Vector inv_std;  // 1 / sqrt(var + epsilon), from batch statistics
  Matrix xhat;
};

/// Train mode normalizes with batch statistics (rows >= 2 required) and
/// updates the running stats; Infer mode uses the stored running stats.
Matrix batchnorm_forward(const Matrix& x, BatchNormParams& p,
                         BatchNormMode mode);

// ----- whole-network passes ---------------------------------------------------

struct ForwardPass {
  Matrix logits;
  int diverged_layer = -1;  // -1: all activations finite
  bool diverged() const { return diverged_layer >= 0; }

  // per-layer tensors, retained when keep_cache was requested
  bool cached = false;
  Matrix input;                      // raw x
  std::vector<Matrix> layer_states;  // y_0 .. y_depth
  std::vector<Matrix> preact;        // K1 y + b1 per block
  std::vector<Matrix> normed;        // preactivation after batch norm
  std::vector<Matrix> activated;     // sigma(normed)
  std::vector<BatchNormCache> bn_cache;

  // trajectory snapshots, retained when a record schedule was given
  std::vector<int> recorded_layers;
  std::vector<Matrix> snapshots;
};

struct ForwardOptions {
  BatchNormMode bn_mode = BatchNormMode::Infer;
  bool update_running_stats = false;  // only honored in Train mode
  bool keep_cache = false;
  const std::vector<int>* record_layers = nullptr;  // nullptr: record nothing
  bool throw_on_divergence = true;
};

/// Core engine. Halts at the first non-finite layer; depending on options
/// this throws DivergenceError or returns with diverged_layer set and all
/// tensors up to the last finite layer retained.
ForwardPass run_network(const Matrix& x, Model& m, const NetworkConfig& cfg,
                        const ForwardOptions& opt);

/// Inference-mode pass over an immutable model.
ForwardPass run_network(const Matrix& x, const Model& m,
                        const NetworkConfig& cfg, ForwardOptions opt = {});

struct NetworkOutput {
  Matrix logits;
  std::vector<int> recorded_layers;  // empty unless record was set
  std::vector<Matrix> snapshots;
};

/// Batch-norm in inference mode; record=true snapshots every layer 0..depth.
/// Throws DivergenceError naming the first non-finite layer.
NetworkOutput network_forward(const Matrix& x, const Model& m,
                              const NetworkConfig& cfg, bool record = false);

// ----- loss and gradients -----------------------------------------------------

struct LossGrad {
  double loss;
  Matrix grad_logits;
};

/// Mean cross-entropy with log-sum-exp stabilization;
/// grad = (softmax - onehot) / batch.
LossGrad softmax_cross_entropy(const Matrix& logits,
                               const std::vector<int>& labels);

struct BlockGradients {
  Matrix k1;
  Matrix k2;
  Vector b1;
  Vector b2;
  Vector gamma;  // empty when the block has no batch norm
  Vector beta;
};

struct Gradients {
  Matrix input_w;  // empty for identity projection
  Vector input_b;
  std::vector<BlockGradients> blocks;
  Matrix head_w;
  Vector head_b;
};

/// Reverse pass over a cached forward. The shrinkage K1 gradient accumulates
/// both its direct and transposed appearances.
Gradients network_backward(const Model& m, const NetworkConfig& cfg,
                           const ForwardPass& cache, const Matrix& grad_logits);

}  // namespace resode
