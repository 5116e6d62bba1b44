#include "fewgen/net.hpp"

#include <cmath>
#include <string>

#include "fewgen/errors.hpp"

namespace fewgen {

void MlpNet::add_layer(Layer layer) {
  if (layer.weight.rows() == 0 || layer.weight.cols() == 0) {
    throw ShapeError("add_layer: empty weight matrix");
  }
  require_shape(layer.bias, 1, layer.weight.rows(), "add_layer bias");
  if (layer.act.kind == Act::LeakyRelu &&
      (layer.act.slope <= 0.0 || layer.act.slope >= 1.0)) {
    throw ConfigError("leaky-relu slope must lie in (0, 1), got " +
                      std::to_string(layer.act.slope));
  }
  if (!layers_.empty() && layer.weight.cols() != out_dim()) {
    throw ShapeError("add_layer: input dim " + std::to_string(layer.weight.cols()) +
                     " does not chain onto previous output dim " + std::to_string(out_dim()));
  }
  layers_.push_back(std::move(layer));
}

std::size_t MlpNet::in_dim() const {
  if (layers_.empty()) throw ContractError("in_dim of an empty network");
  return layers_.front().weight.cols();
}

std::size_t MlpNet::out_dim() const {
  if (layers_.empty()) throw ContractError("out_dim of an empty network");
  return layers_.back().weight.rows();
}

static void apply_activation(Matrix& m, Activation act) {
  switch (act.kind) {
    case Act::Identity:
      break;
    case Act::LeakyRelu:
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.data()[i] <= 0.0) m.data()[i] *= act.slope;
      }
      break;
    case Act::Sigmoid:
      for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = 1.0 / (1.0 + std::exp(-m.data()[i]));
      }
      break;
  }
}

Matrix MlpNet::forward(const Matrix& input) const {
  if (layers_.empty()) throw ContractError("forward on an empty network");
  if (input.cols() != in_dim()) {
    throw ShapeError("forward: input has " + std::to_string(input.cols()) +
                     " columns, network expects " + std::to_string(in_dim()));
  }
  Matrix h = input;
  for (const Layer& layer : layers_) {
    Matrix pre = matmul_nt(h, layer.weight);
    for (std::size_t r = 0; r < pre.rows(); ++r) {
      for (std::size_t c = 0; c < pre.cols(); ++c) pre(r, c) += layer.bias(0, c);
    }
    apply_activation(pre, layer.act);
    h = std::move(pre);
  }
  return h;
}

std::vector<Matrix*> MlpNet::params() {
  std::vector<Matrix*> out;
  out.reserve(layers_.size() * 2);
  for (Layer& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<const Matrix*> MlpNet::params() const {
  std::vector<const Matrix*> out;
  out.reserve(layers_.size() * 2);
  for (const Layer& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

MlpNet make_mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation output,
                Rng& rng) {
  if (dims.size() < 2) throw ConfigError("make_mlp: need at least input and output dims");
  MlpNet net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
    if (fan_in == 0 || fan_out == 0) throw ConfigError("make_mlp: zero layer width");
    Layer layer;
    layer.weight = Matrix(fan_out, fan_in);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t r = 0; r < fan_out; ++r) {
      for (std::size_t c = 0; c < fan_in; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    }
    layer.bias = Matrix(1, fan_out);
    layer.act = (l + 2 == dims.size()) ? output : hidden;
    net.add_layer(std::move(layer));
  }
  return net;
}

TapedNet lift(Tape& tape, const MlpNet& net, bool tracked) {
  if (net.depth() == 0) throw ContractError("lift of an empty network");
  TapedNet taped;
  taped.layers.reserve(net.depth());
  for (const Layer& layer : net.layers()) {
    TapedLayer tl;
    tl.weight = tracked ? tape.param(layer.weight) : tape.constant(layer.weight);
    tl.bias = tracked ? tape.param(layer.bias) : tape.constant(layer.bias);
    tl.act = layer.act;
    taped.layers.push_back(tl);
  }
  return taped;
}

static Expr apply_activation(Expr pre, Activation act) {
  switch (act.kind) {
    case Act::Identity:
      return pre;
    case Act::LeakyRelu:
      return leaky_relu(pre, act.slope);
    case Act::Sigmoid:
      return sigmoid(pre);
  }
  throw ContractError("unknown activation");
}

Expr net_forward(const TapedNet& net, Expr input) {
  if (net.layers.empty()) throw ContractError("net_forward on an empty network");
  Expr h = input;
  for (const TapedLayer& layer : net.layers) {
    Expr pre = add_row(matmul_nt(h, layer.weight), layer.bias);
    h = apply_activation(pre, layer.act);
  }
  return h;
}

// Derivative of a piecewise-linear activation, evaluated numerically and
// frozen as a constant mask (its own derivative is zero almost everywhere).
static Matrix pl_derivative(const Matrix& pre, Activation act) {
  Matrix d(pre.rows(), pre.cols(), 1.0);
  if (act.kind == Act::LeakyRelu) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (pre.data()[i] <= 0.0) d.data()[i] = act.slope;
    }
  }
  return d;
}

Expr net_input_gradient(const TapedNet& net, Expr input) {
  if (net.layers.empty()) throw ContractError("net_input_gradient on an empty network");
  for (const TapedLayer& layer : net.layers) {
    if (layer.act.kind == Act::Sigmoid) {
      throw ContractError(
          "net_input_gradient requires piecewise-linear activations (Identity or LeakyRelu)");
    }
  }
  if (net.layers.back().weight.value().rows() != 1) {
    throw ContractError("net_input_gradient requires a scalar-output network, got output dim " +
                        std::to_string(net.layers.back().weight.value().rows()));
  }
  Tape& tape = *input.tape;

  // Forward pass, remembering the derivative mask of each activation.
  std::vector<Expr> masks(net.layers.size());
  Expr h = input;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const TapedLayer& layer = net.layers[l];
    Expr pre = add_row(matmul_nt(h, layer.weight), layer.bias);
    if (layer.act.kind == Act::LeakyRelu) {
      masks[l] = tape.constant(pl_derivative(pre.value(), layer.act));
    }
    h = apply_activation(pre, layer.act);
  }

  // Reverse sweep expressed as graph nodes: g starts as d out / d pre_last.
  Expr g;  // gradient w.r.t. the current layer's pre-activation, batch x width
  {
    const std::size_t batch = input.rows();
    const TapedLayer& last = net.layers.back();
    if (last.act.kind == Act::LeakyRelu) {
      g = masks.back();
    } else {
      g = tape.constant(Matrix(batch, 1, 1.0));
    }
  }
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const TapedLayer& layer = net.layers[l];
    Expr gh = matmul(g, layer.weight);  // gradient w.r.t. the layer input
    if (l == 0) return gh;
    g = (net.layers[l - 1].act.kind == Act::LeakyRelu) ? mul(gh, masks[l - 1]) : gh;
  }
  throw ContractError("unreachable");
}

std::vector<Matrix> collect_grads(Tape& tape, const TapedNet& net) {
  std::vector<Matrix> out;
  out.reserve(net.layers.size() * 2);
  for (const TapedLayer& layer : net.layers) {
    out.push_back(tape.grad(layer.weight));
    out.push_back(tape.grad(layer.bias));
  }
  return out;
}

AdamState::AdamState(const std::vector<Matrix*>& params, AdamConfig cfg) : cfg_(cfg) {
  if (cfg.lr <= 0.0) throw ConfigError("adam: lr must be positive");
  if (cfg.weight_decay < 0.0) throw ConfigError("adam: weight decay must be non-negative");
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Matrix* p : params) {
    m_.emplace_back(p->rows(), p->cols());
    v_.emplace_back(p->rows(), p->cols());
  }
}

void AdamState::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("adam step: parameter/gradient count mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& theta = *params[p];
    const Matrix& g = grads[p];
    if (!theta.same_shape(m_[p]) || !g.same_shape(m_[p])) {
      throw ShapeError("adam step: shape mismatch on parameter " + std::to_string(p));
    }
    Matrix& m = m_[p];
    Matrix& v = v_[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g.data()[i];
      m.data()[i] = cfg_.beta1 * m.data()[i] + (1.0 - cfg_.beta1) * gi;
      v.data()[i] = cfg_.beta2 * v.data()[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m.data()[i] / bc1;
      const double vhat = v.data()[i] / bc2;
      double& w = theta.data()[i];
      w -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      if (cfg_.weight_decay > 0.0) w -= cfg_.lr * cfg_.weight_decay * w;
    }
    if (!theta.all_finite()) {
      throw ContractError("adam step produced a non-finite parameter value");
    }
  }
}

}  // namespace fewgen
