#pragma once

#include <cstddef>
#include <vector>

#include "fewgen/matrix.hpp"

namespace fewgen {

class Tape;

/// Handle to an immutable node on a Tape.  Cheap to copy; valid while the
/// owning tape is alive.
struct Expr {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool tracked() const;
};

/**
 * Reverse-mode automatic differentiation over matrix expressions.
 *
 * Nodes are evaluated eagerly at construction and stored in creation order,
 * which is by construction a topological order, so the backward pass is a
 * single reverse sweep.  A tape is intended to live for one optimization step:
 * register parameters, build the loss, call backward, read the gradients.
 *
 * Gradients flow only into nodes created via `param`; `constant` leaves and
 * anything behind `stop_gradient` receive none.  Parameters that do not
 * participate in the loss get a zero gradient.
 */
class Tape {
 public:
  Expr constant(Matrix v);
  Expr param(Matrix v);  // tracked leaf

  /// Backpropagate from a scalar (1x1) node.  Throws ContractError otherwise.
  void backward(Expr loss);

  /// Gradient of the last backward() target w.r.t. the given node
  /// (zero matrix when the node did not influence the loss).
  const Matrix& grad(Expr e);

  const Matrix& value(int id) const;
  bool tracked(int id) const;
  std::size_t node_count() const { return nodes_.size(); }

  // --- graph construction (free-function style entry points) ---
  friend Expr add(Expr a, Expr b);
  friend Expr sub(Expr a, Expr b);
  friend Expr mul(Expr a, Expr b);
  friend Expr div_elem(Expr a, Expr b);
  friend Expr matmul(Expr a, Expr b);
  friend Expr matmul_nt(Expr a, Expr b);
  friend Expr add_row(Expr a, Expr bias_row);
  friend Expr leaky_relu(Expr a, double slope);
  friend Expr sigmoid(Expr a);
  friend Expr exp_elem(Expr a);
  friend Expr log_elem(Expr a);
  friend Expr sqrt_elem(Expr a);
  friend Expr square(Expr a);
  friend Expr scale(Expr a, double c);
  friend Expr add_scalar(Expr a, double c);
  friend Expr row_sum(Expr a);
  friend Expr sum_all(Expr a);
  friend Expr mean_all(Expr a);
  friend Expr concat_cols(Expr a, Expr b);
  friend Expr slice_cols(Expr a, std::size_t begin, std::size_t end);
  friend Expr broadcast_col(Expr a, std::size_t n);
  friend Expr max_scalar(Expr a, double c);
  friend Expr gather_rows(Expr a, const std::vector<int>& idx);
  friend Expr select_cols(Expr a, const std::vector<int>& col_per_row);
  friend Expr stop_gradient(Expr a);
  friend Expr row_max_const(Expr a);

 private:
  enum class Op {
    Leaf, Add, Sub, Mul, Div, MatMul, MatMulNT, AddRow, LeakyRelu, Sigmoid,
    Exp, Log, Sqrt, Square, Scale, AddScalar, RowSum, SumAll, MeanAll,
    ConcatCols, SliceCols, BroadcastCol, MaxScalar, GatherRows, SelectCols,
    StopGrad,
  };
  struct Node {
    Op op = Op::Leaf;
    int a = -1, b = -1;
    Matrix value;
    double scalar = 0.0;
    std::size_t i0 = 0, i1 = 0;
    std::vector<int> idx;
    bool tracked = false;
  };

  Expr push(Node n);
  void accumulate(int id, const Matrix& delta);
  Matrix& adjoint(int id);

  std::vector<Node> nodes_;
  std::vector<Matrix> adjoints_;
  Matrix zero_;
};

// Namespace-scope declarations of the graph builders (the in-class friend
// declarations alone are not found by unqualified lookup).
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div_elem(Expr a, Expr b);
Expr matmul(Expr a, Expr b);
Expr matmul_nt(Expr a, Expr b);
Expr add_row(Expr a, Expr bias_row);
Expr leaky_relu(Expr a, double slope);
Expr sigmoid(Expr a);
Expr exp_elem(Expr a);
Expr log_elem(Expr a);
Expr sqrt_elem(Expr a);
Expr square(Expr a);
Expr scale(Expr a, double c);
Expr add_scalar(Expr a, double c);
Expr row_sum(Expr a);
Expr sum_all(Expr a);
Expr mean_all(Expr a);
Expr concat_cols(Expr a, Expr b);
Expr slice_cols(Expr a, std::size_t begin, std::size_t end);
Expr broadcast_col(Expr a, std::size_t n);
Expr max_scalar(Expr a, double c);
Expr gather_rows(Expr a, const std::vector<int>& idx);
Expr select_cols(Expr a, const std::vector<int>& col_per_row);
Expr stop_gradient(Expr a);
Expr row_max_const(Expr a);

// Operator sugar for readability at call sites.
Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);  // elementwise
Expr operator*(double c, Expr a);
Expr operator-(Expr a);

/// Row-wise cosine similarity of two batch matrices, with norms floored at
/// `norm_floor` so that zero rows are well defined.  Returns a batch x 1 node.
Expr cosine_rows(Expr a, Expr b, double norm_floor = 1e-12);

}  // namespace fewgen
