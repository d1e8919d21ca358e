#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace tabshift {

enum class Activation { identity, leaky_relu, tanh_act, softmax };

// Output-block activation; softmax blocks appear only on the final layer.
struct HeadSegment {
  Activation act = Activation::identity;
  int offset = 0;
  int width = 0;
  double tau = 1.0;  // softmax temperature
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation act = Activation::identity;
  double leak = 0.2;
  double tau = 1.0;
  bool batch_norm = false;
  Eigen::VectorXd bn_gamma, bn_beta;
  Eigen::VectorXd bn_running_mean, bn_running_var;
  double bn_eps = 1e-5;
  double bn_momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

// Dense multi-layer perceptron over row-major batches (one instance per
// row). When `head` is non-empty it replaces the final layer's activation
// with per-block activations covering the output width.
struct Mlp {
  std::vector<DenseLayer> layers;
  std::vector<HeadSegment> head;

  int input_dim() const { return layers.front().in_dim(); }
  int output_dim() const { return layers.back().out_dim(); }
  void validate() const;  // dimension compatibility, head coverage, finite parameters
};

struct MlpOptions {
  Activation hidden_act = Activation::leaky_relu;
  double leak = 0.2;
  bool hidden_batch_norm = false;
  Activation output_act = Activation::identity;
  double output_tau = 1.0;
  std::vector<HeadSegment> head;
};

// Uniform +-sqrt(6 / (fan_in + fan_out)) weight init, zero biases.
Mlp make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim, const MlpOptions& options,
             std::mt19937_64& rng);

struct LayerTape {
  Eigen::MatrixXd input;  // pre-dense
  Eigen::MatrixXd lin;    // post-dense, pre-batch-norm
  Eigen::MatrixXd norm;   // pre-activation (equals lin without batch norm)
  Eigen::MatrixXd out;    // post-activation
  Eigen::VectorXd bn_mean, bn_var;
  Eigen::MatrixXd bn_xhat;
};

struct Tape {
  std::vector<LayerTape> layers;
  bool train_mode = false;
  bool consumed = false;
};

// Eval-mode forward: batch norm uses running statistics; the network is not
// mutated. Throws on dimension mismatch or non-finite input.
Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& batch, Tape* tape = nullptr);

// Train-mode forward: batch norm uses batch statistics and updates the
// running estimates in place.
Eigen::MatrixXd forward_train(Mlp& net, const Eigen::MatrixXd& batch, Tape* tape = nullptr);

struct Gradients {
  struct Layer {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
    Eigen::VectorXd bn_gamma, bn_beta;
  };
  std::vector<Layer> layers;

  static Gradients zeros_like(const Mlp& net);
  Gradients& operator+=(const Gradients& other);
};

struct BackwardResult {
  Gradients grads;
  Eigen::MatrixXd input_grad;  // same shape as the forward batch
};

// Exact reverse-mode gradients of sum(output .* out_grad) with respect to
// every parameter and to the input batch. Consumes the tape; reuse throws.
BackwardResult backward(const Mlp& net, Tape& tape, const Eigen::MatrixXd& out_grad);

struct PenaltyResult {
  double penalty = 0.0;
  Gradients grads;
};

// WGAN gradient penalty at given interpolation points:
//   lambda * mean_i (||d critic / d x at x_i||_2 - 1)^2
// with parameter gradients computed by exact second-order backpropagation
// through the input-gradient pass. The critic must be a scalar-output MLP
// with piecewise-linear activations (leaky_relu / identity) and no batch
// norm; anything else throws.
PenaltyResult gradient_penalty_at(const Mlp& critic, const Eigen::MatrixXd& points, double lambda);

// Draws per-row uniform interpolation coefficients between real and fake
// batches, then evaluates gradient_penalty_at.
PenaltyResult gradient_penalty(const Mlp& critic, const Eigen::MatrixXd& real_batch,
                               const Eigen::MatrixXd& fake_batch, double lambda, std::mt19937_64& rng);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Eigen::VectorXd m, v;
  long step = 0;
  long skipped = 0;  // steps dropped because of non-finite gradients

  explicit AdamState(long n_params = 0, AdamConfig cfg = {});
};

// One Adam update with bias correction. Returns false (and counts the skip)
// when the gradient has non-finite entries; parameters are left untouched.
bool adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state);

// Flat parameter views in a fixed order (per layer: weight column-major,
// bias, then batch-norm gamma and beta). Running statistics are not
// optimizer parameters and are excluded.
long parameter_count(const Mlp& net);
Eigen::VectorXd flatten_parameters(const Mlp& net);
void set_parameters(Mlp& net, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten_gradients(const Mlp& net, const Gradients& grads);

}  // namespace tabshift
