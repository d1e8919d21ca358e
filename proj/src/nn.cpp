#include "tabshift/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tabshift {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

bool is_output_layer(const Mlp& net, std::size_t l) { return l + 1 == net.layers.size(); }

void apply_softmax(Eigen::MatrixXd& block, double tau) {
  for (long r = 0; r < block.rows(); ++r) {
    Eigen::ArrayXd z = block.row(r).transpose().array() / tau;
    z -= z.maxCoeff();
    Eigen::ArrayXd e = z.exp();
    block.row(r) = (e / e.sum()).matrix().transpose();
  }
}

Eigen::MatrixXd activation_forward(const Eigen::MatrixXd& norm, Activation act, double leak, double tau) {
  switch (act) {
    case Activation::identity:
      return norm;
    case Activation::leaky_relu:
      return (norm.array() > 0.0).select(norm, leak * norm);
    case Activation::tanh_act:
      return norm.array().tanh().matrix();
    case Activation::softmax: {
      Eigen::MatrixXd out = norm;
      apply_softmax(out, tau);
      return out;
    }
  }
  fail("nn: unknown activation");
}

// dL/dnorm from dL/dout for one activation block.
Eigen::MatrixXd activation_backward(const Eigen::MatrixXd& g, const Eigen::MatrixXd& norm,
                                    const Eigen::MatrixXd& out, Activation act, double leak, double tau) {
  switch (act) {
    case Activation::identity:
      return g;
    case Activation::leaky_relu:
      return (norm.array() > 0.0).select(g, leak * g);
    case Activation::tanh_act:
      return (g.array() * (1.0 - out.array().square())).matrix();
    case Activation::softmax: {
      Eigen::MatrixXd dnorm(g.rows(), g.cols());
      for (long r = 0; r < g.rows(); ++r) {
        const double dot = g.row(r).dot(out.row(r));
        dnorm.row(r) = ((out.row(r).array() * (g.row(r).array() - dot)) / tau).matrix();
      }
      return dnorm;
    }
  }
  fail("nn: unknown activation");
}

struct SegmentView {
  Activation act;
  int offset;
  int width;
  double leak;
  double tau;
};

std::vector<SegmentView> output_segments(const Mlp& net, const DenseLayer& layer) {
  std::vector<SegmentView> segs;
  if (net.head.empty()) {
    segs.push_back({layer.act, 0, layer.out_dim(), layer.leak, layer.tau});
  } else {
    for (const HeadSegment& h : net.head) {
      segs.push_back({h.act, h.offset, h.width, layer.leak, h.tau});
    }
  }
  return segs;
}

Eigen::MatrixXd forward_impl(const Mlp& net, Mlp* mutable_net, const Eigen::MatrixXd& batch, bool train,
                             Tape* tape) {
  net.validate();
  if (batch.cols() != net.input_dim()) fail("forward: batch width does not match input dim");
  if (!batch.allFinite()) fail("forward: non-finite input");
  if (tape) {
    tape->layers.assign(net.layers.size(), {});
    tape->train_mode = train;
    tape->consumed = false;
  }
  Eigen::MatrixXd x = batch;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    Eigen::MatrixXd lin = (x * layer.weight.transpose()).rowwise() + layer.bias.transpose();
    Eigen::MatrixXd norm;
    Eigen::VectorXd mean, var;
    Eigen::MatrixXd xhat;
    if (layer.batch_norm) {
      if (train) {
        mean = lin.colwise().mean().transpose();
        Eigen::MatrixXd centered = lin.rowwise() - mean.transpose();
        var = centered.array().square().colwise().mean().matrix().transpose();
        Eigen::VectorXd inv_std = (var.array() + layer.bn_eps).rsqrt().matrix();
        xhat = centered * inv_std.asDiagonal();
        if (mutable_net) {
          DenseLayer& ml = mutable_net->layers[l];
          ml.bn_running_mean = layer.bn_momentum * ml.bn_running_mean + (1.0 - layer.bn_momentum) * mean;
          ml.bn_running_var = layer.bn_momentum * ml.bn_running_var + (1.0 - layer.bn_momentum) * var;
        }
      } else {
        mean = layer.bn_running_mean;
        var = layer.bn_running_var;
        Eigen::VectorXd inv_std = (var.array() + layer.bn_eps).rsqrt().matrix();
        xhat = (lin.rowwise() - mean.transpose()) * inv_std.asDiagonal();
      }
      norm = (xhat * layer.bn_gamma.asDiagonal()).rowwise() + layer.bn_beta.transpose();
    } else {
      norm = lin;
    }
    Eigen::MatrixXd out(norm.rows(), norm.cols());
    if (is_output_layer(net, l)) {
      for (const SegmentView& s : output_segments(net, layer)) {
        out.middleCols(s.offset, s.width) =
            activation_forward(norm.middleCols(s.offset, s.width), s.act, s.leak, s.tau);
      }
    } else {
      out = activation_forward(norm, layer.act, layer.leak, layer.tau);
    }
    if (tape) {
      LayerTape& t = tape->layers[l];
      t.input = x;
      t.lin = std::move(lin);
      t.norm = norm;
      t.out = out;
      if (layer.batch_norm) {
        t.bn_mean = std::move(mean);
        t.bn_var = std::move(var);
        t.bn_xhat = std::move(xhat);
      }
    }
    x = std::move(out);
  }
  return x;
}

}  // namespace

void Mlp::validate() const {
  if (layers.empty()) fail("mlp: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    if (layer.weight.rows() != layer.bias.size()) fail("mlp: bias size does not match weight rows");
    if (l > 0 && layers[l - 1].out_dim() != layer.in_dim()) {
      fail("mlp: layer " + std::to_string(l) + " input dim does not match previous output");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) fail("mlp: non-finite parameter");
    if (layer.batch_norm) {
      const long d = layer.out_dim();
      if (layer.bn_gamma.size() != d || layer.bn_beta.size() != d || layer.bn_running_mean.size() != d ||
          layer.bn_running_var.size() != d) {
        fail("mlp: batch-norm parameter shapes do not match layer width");
      }
      if (!layer.bn_gamma.allFinite() || !layer.bn_beta.allFinite()) fail("mlp: non-finite parameter");
    }
    if (layer.act == Activation::softmax && l + 1 != layers.size()) {
      fail("mlp: softmax allowed only at the output layer");
    }
  }
  if (!head.empty()) {
    int expected = 0;
    for (const HeadSegment& h : head) {
      if (h.offset != expected || h.width < 1) fail("mlp: head segments must tile the output");
      expected += h.width;
    }
    if (expected != output_dim()) fail("mlp: head segments do not cover the output width");
  }
}

Mlp make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim, const MlpOptions& options,
             std::mt19937_64& rng) {
  if (input_dim < 1 || output_dim < 1) fail("make_mlp: dimensions must be positive");
  Mlp net;
  net.head = options.head;
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int h : hidden) {
    if (h < 1) fail("make_mlp: hidden widths must be positive");
    dims.push_back(h);
  }
  dims.push_back(output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    DenseLayer layer;
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-a, a);
    layer.weight.resize(out, in);
    for (long i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = u(rng);
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.leak = options.leak;
    const bool last = (l + 2 == dims.size());
    if (last) {
      layer.act = options.output_act;
      layer.tau = options.output_tau;
    } else {
      layer.act = options.hidden_act;
      if (options.hidden_batch_norm) {
        layer.batch_norm = true;
        layer.bn_gamma = Eigen::VectorXd::Ones(out);
        layer.bn_beta = Eigen::VectorXd::Zero(out);
        layer.bn_running_mean = Eigen::VectorXd::Zero(out);
        layer.bn_running_var = Eigen::VectorXd::Ones(out);
      }
    }
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& batch, Tape* tape) {
  return forward_impl(net, nullptr, batch, false, tape);
}

Eigen::MatrixXd forward_train(Mlp& net, const Eigen::MatrixXd& batch, Tape* tape) {
  return forward_impl(net, &net, batch, true, tape);
}

Gradients Gradients::zeros_like(const Mlp& net) {
  Gradients g;
  g.layers.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    g.layers[l].weight = Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols());
    g.layers[l].bias = Eigen::VectorXd::Zero(layer.bias.size());
    if (layer.batch_norm) {
      g.layers[l].bn_gamma = Eigen::VectorXd::Zero(layer.bn_gamma.size());
      g.layers[l].bn_beta = Eigen::VectorXd::Zero(layer.bn_beta.size());
    }
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (layers.size() != other.layers.size()) fail("gradients: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += other.layers[l].weight;
    layers[l].bias += other.layers[l].bias;
    if (layers[l].bn_gamma.size() > 0) {
      layers[l].bn_gamma += other.layers[l].bn_gamma;
      layers[l].bn_beta += other.layers[l].bn_beta;
    }
  }
  return *this;
}

BackwardResult backward(const Mlp& net, Tape& tape, const Eigen::MatrixXd& out_grad) {
  if (tape.consumed) fail("backward: tape already consumed");
  if (tape.layers.size() != net.layers.size()) fail("backward: tape does not match network");
  if (out_grad.rows() != tape.layers.back().out.rows() || out_grad.cols() != net.output_dim()) {
    fail("backward: out_grad shape mismatch");
  }
  tape.consumed = true;
  BackwardResult res;
  res.grads = Gradients::zeros_like(net);
  Eigen::MatrixXd g = out_grad;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const DenseLayer& layer = net.layers[li];
    const LayerTape& t = tape.layers[li];
    Eigen::MatrixXd dnorm(g.rows(), g.cols());
    if (is_output_layer(net, li)) {
      for (const SegmentView& s : output_segments(net, layer)) {
        dnorm.middleCols(s.offset, s.width) = activation_backward(
            g.middleCols(s.offset, s.width), t.norm.middleCols(s.offset, s.width),
            t.out.middleCols(s.offset, s.width), s.act, s.leak, s.tau);
      }
    } else {
      dnorm = activation_backward(g, t.norm, t.out, layer.act, layer.leak, layer.tau);
    }
    Eigen::MatrixXd dlin;
    if (layer.batch_norm) {
      res.grads.layers[li].bn_gamma = dnorm.cwiseProduct(t.bn_xhat).colwise().sum().transpose();
      res.grads.layers[li].bn_beta = dnorm.colwise().sum().transpose();
      Eigen::VectorXd inv_std = (t.bn_var.array() + layer.bn_eps).rsqrt().matrix();
      if (tape.train_mode) {
        const double n = static_cast<double>(dnorm.rows());
        Eigen::MatrixXd dxhat = dnorm * layer.bn_gamma.asDiagonal();
        Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
        Eigen::RowVectorXd sum_dxhat_xhat = dxhat.cwiseProduct(t.bn_xhat).colwise().sum();
        Eigen::MatrixXd tmp = (n * dxhat).rowwise() - sum_dxhat;
        tmp -= t.bn_xhat * sum_dxhat_xhat.transpose().asDiagonal();
        dlin = (1.0 / n) * (tmp * inv_std.asDiagonal());
      } else {
        dlin = dnorm * layer.bn_gamma.cwiseProduct(inv_std).asDiagonal();
      }
    } else {
      dlin = std::move(dnorm);
    }
    res.grads.layers[li].weight = dlin.transpose() * t.input;
    res.grads.layers[li].bias = dlin.colwise().sum().transpose();
    g = dlin * layer.weight;
  }
  res.input_grad = std::move(g);
  return res;
}

namespace {

void check_penalty_critic(const Mlp& critic) {
  critic.validate();
  if (critic.output_dim() != 1) fail("gradient_penalty: critic must have scalar output");
  if (!critic.head.empty()) fail("gradient_penalty: critic must not use a segmented head");
  for (const DenseLayer& layer : critic.layers) {
    if (layer.batch_norm) fail("gradient_penalty: critic must not contain batch norm");
    if (layer.act != Activation::leaky_relu && layer.act != Activation::identity) {
      fail("gradient_penalty: critic activations must be leaky_relu or identity");
    }
  }
}

Eigen::MatrixXd leaky_slope(const Eigen::MatrixXd& norm, double leak) {
  return (norm.array() > 0.0)
      .select(Eigen::MatrixXd::Ones(norm.rows(), norm.cols()),
              Eigen::MatrixXd::Constant(norm.rows(), norm.cols(), leak));
}

}  // namespace

PenaltyResult gradient_penalty_at(const Mlp& critic, const Eigen::MatrixXd& points, double lambda) {
  check_penalty_critic(critic);
  const long n = points.rows();
  if (n == 0) fail("gradient_penalty: empty batch");

  Tape tape;
  forward(critic, points, &tape);

  // Input-gradient pass, keeping each layer's pre-activation gradient.
  const std::size_t nl = critic.layers.size();
  std::vector<Eigen::MatrixXd> pre_grad(nl);
  Eigen::MatrixXd g = Eigen::MatrixXd::Ones(n, 1);
  for (std::size_t li = nl; li-- > 0;) {
    const DenseLayer& layer = critic.layers[li];
    if (layer.act == Activation::leaky_relu) {
      pre_grad[li] = g.cwiseProduct(leaky_slope(tape.layers[li].norm, layer.leak));
    } else {
      pre_grad[li] = g;
    }
    g = pre_grad[li] * layer.weight;
  }
  const Eigen::MatrixXd input_grad = std::move(g);  // n x in

  Eigen::VectorXd norms = input_grad.rowwise().norm();
  PenaltyResult res;
  res.penalty = lambda * (norms.array() - 1.0).square().sum() / static_cast<double>(n);

  // Adjoint of the input gradient: d penalty / d(input_grad), row by row.
  Eigen::MatrixXd q(n, input_grad.cols());
  for (long i = 0; i < n; ++i) {
    const double s = norms[i];
    if (s <= 1e-12) {
      q.row(i).setZero();
    } else {
      q.row(i) = (2.0 * lambda / static_cast<double>(n)) * ((s - 1.0) / s) * input_grad.row(i);
    }
  }

  // Push the adjoint forward through the linearized network. Activation
  // slopes are piecewise constant, so each layer's parameter gradient is a
  // single outer product and biases receive none.
  res.grads = Gradients::zeros_like(critic);
  for (std::size_t li = 0; li < nl; ++li) {
    const DenseLayer& layer = critic.layers[li];
    res.grads.layers[li].weight = pre_grad[li].transpose() * q;
    Eigen::MatrixXd p = q * layer.weight.transpose();
    if (layer.act == Activation::leaky_relu) {
      q = p.cwiseProduct(leaky_slope(tape.layers[li].norm, layer.leak));
    } else {
      q = std::move(p);
    }
  }
  return res;
}

PenaltyResult gradient_penalty(const Mlp& critic, const Eigen::MatrixXd& real_batch,
                               const Eigen::MatrixXd& fake_batch, double lambda, std::mt19937_64& rng) {
  if (real_batch.rows() != fake_batch.rows() || real_batch.cols() != fake_batch.cols()) {
    fail("gradient_penalty: real and fake batches must have the same shape");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd points(real_batch.rows(), real_batch.cols());
  for (long i = 0; i < real_batch.rows(); ++i) {
    const double eps = unit(rng);
    points.row(i) = eps * real_batch.row(i) + (1.0 - eps) * fake_batch.row(i);
  }
  return gradient_penalty_at(critic, points, lambda);
}

AdamState::AdamState(long n_params, AdamConfig cfg)
    : config(cfg), m(Eigen::VectorXd::Zero(n_params)), v(Eigen::VectorXd::Zero(n_params)) {}

bool adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    fail("adam_step: shape mismatch");
  }
  if (!grads.allFinite()) {
    ++state.skipped;
    return false;
  }
  ++state.step;
  const AdamConfig& c = state.config;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grads;
  state.v = (c.beta2 * state.v.array() + (1.0 - c.beta2) * grads.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  params.array() -= c.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + c.eps);
  return true;
}

long parameter_count(const Mlp& net) {
  long n = 0;
  for (const DenseLayer& layer : net.layers) {
    n += layer.weight.size() + layer.bias.size();
    if (layer.batch_norm) n += layer.bn_gamma.size() + layer.bn_beta.size();
  }
  return n;
}

Eigen::VectorXd flatten_parameters(const Mlp& net) {
  Eigen::VectorXd flat(parameter_count(net));
  long at = 0;
  for (const DenseLayer& layer : net.layers) {
    flat.segment(at, layer.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(layer.weight.data(), layer.weight.size());
    at += layer.weight.size();
    flat.segment(at, layer.bias.size()) = layer.bias;
    at += layer.bias.size();
    if (layer.batch_norm) {
      flat.segment(at, layer.bn_gamma.size()) = layer.bn_gamma;
      at += layer.bn_gamma.size();
      flat.segment(at, layer.bn_beta.size()) = layer.bn_beta;
      at += layer.bn_beta.size();
    }
  }
  return flat;
}

void set_parameters(Mlp& net, const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count(net)) fail("set_parameters: size mismatch");
  long at = 0;
  for (DenseLayer& layer : net.layers) {
    Eigen::Map<Eigen::VectorXd>(layer.weight.data(), layer.weight.size()) =
        flat.segment(at, layer.weight.size());
    at += layer.weight.size();
    layer.bias = flat.segment(at, layer.bias.size());
    at += layer.bias.size();
    if (layer.batch_norm) {
      layer.bn_gamma = flat.segment(at, layer.bn_gamma.size());
      at += layer.bn_gamma.size();
      layer.bn_beta = flat.segment(at, layer.bn_beta.size());
      at += layer.bn_beta.size();
    }
  }
}

Eigen::VectorXd flatten_gradients(const Mlp& net, const Gradients& grads) {
  if (grads.layers.size() != net.layers.size()) fail("flatten_gradients: layer count mismatch");
  Eigen::VectorXd flat(parameter_count(net));
  long at = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    const Gradients::Layer& g = grads.layers[l];
    flat.segment(at, layer.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(g.weight.data(), g.weight.size());
    at += layer.weight.size();
    flat.segment(at, layer.bias.size()) = g.bias;
    at += layer.bias.size();
    if (layer.batch_norm) {
      flat.segment(at, layer.bn_gamma.size()) = g.bn_gamma;
      at += layer.bn_gamma.size();
      flat.segment(at, layer.bn_beta.size()) = g.bn_beta;
      at += layer.bn_beta.size();
    }
  }
  return flat;
}

}  // namespace tabshift
