#pragma once

#include <cstddef>
#include <vector>

#include "fewgen/matrix.hpp"
#include "fewgen/rng.hpp"
#include "fewgen/tape.hpp"

namespace fewgen {

enum class Act { Identity, LeakyRelu, Sigmoid };

struct Activation {
  Act kind = Act::Identity;
  double slope = 0.01;  // LeakyRelu only; must lie in (0, 1)
};

struct Layer {
  Matrix weight;  // out x in
  Matrix bias;    // 1 x out
  Activation act;
};

/// Fully-connected feed-forward network with a named activation per layer.
class MlpNet {
 public:
  MlpNet() = default;

  /// Appends a layer; validates dimension chaining and activation parameters.
  void add_layer(Layer layer);

  std::size_t depth() const { return layers_.size(); }
  std::size_t in_dim() const;
  std::size_t out_dim() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  /// Plain inference pass (no gradient tracking); input is batch x in_dim.
  Matrix forward(const Matrix& input) const;

  /// Pointers to every weight and bias, layer by layer (weight then bias).
  std::vector<Matrix*> params();
  std::vector<const Matrix*> params() const;

 private:
  std::vector<Layer> layers_;
};

/// Builds dims[0] -> dims[1] -> ... -> dims.back() with `hidden` on all but the
/// last layer and `output` on the last.  Weights are scaled-uniform initialized
/// (limit sqrt(6 / (fan_in + fan_out))), biases start at zero.
MlpNet make_mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation output,
                Rng& rng);

// --- gradient-tracked execution ---------------------------------------------

struct TapedLayer {
  Expr weight, bias;
  Activation act;
};

/// A network's parameters registered on a tape.  With tracked=true the
/// parameters receive gradients; with tracked=false they participate as
/// constants (gradients still flow through them to tracked inputs).
struct TapedNet {
  std::vector<TapedLayer> layers;
};

TapedNet lift(Tape& tape, const MlpNet& net, bool tracked);

/// Forward pass building graph nodes; input is batch x in_dim.
Expr net_forward(const TapedNet& net, Expr input);

/**
 * Per-row gradient of a scalar-output network w.r.t. its input, built as graph
 * nodes so the result can itself be differentiated (e.g. a gradient-norm
 * penalty differentiated w.r.t. the network weights).
 *
 * Piecewise-linear activations only (Identity / LeakyRelu): their derivative
 * masks are locally constant, so treating the masks as constants yields the
 * exact derivative almost everywhere.  Throws ContractError for Sigmoid
 * layers or when the network output is not one-dimensional.
 */
Expr net_input_gradient(const TapedNet& net, Expr input);

/// Gradients of the last backward() pass in params() order.
std::vector<Matrix> collect_grads(Tape& tape, const TapedNet& net);

// --- optimizer ---------------------------------------------------------------

struct AdamConfig {
  double lr = 0.001;
  double weight_decay = 0.0;  // decoupled: applied directly to the parameter
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with decoupled weight decay.  Moments are kept per parameter tensor.
class AdamState {
 public:
  AdamState(const std::vector<Matrix*>& params, AdamConfig cfg);

  /// One update step; `grads` must align with `params` in count and shape.
  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads);

  long step_count() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace fewgen
