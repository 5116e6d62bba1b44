#include "fewgen/tape.hpp"

#include <cmath>
#include <string>

#include "fewgen/errors.hpp"

namespace fewgen {

const Matrix& Expr::value() const { return tape->value(id); }
bool Expr::tracked() const { return tape->tracked(id); }

const Matrix& Tape::value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
bool Tape::tracked(int id) const { return nodes_[static_cast<std::size_t>(id)].tracked; }

Expr Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Expr{this, static_cast<int>(nodes_.size()) - 1};
}

Expr Tape::constant(Matrix v) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(v);
  n.tracked = false;
  return push(std::move(n));
}

Expr Tape::param(Matrix v) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(v);
  n.tracked = true;
  return push(std::move(n));
}

namespace {

Tape* common_tape(Expr a, Expr b, const char* what) {
  if (!a.valid() || !b.valid() || a.tape != b.tape) {
    throw ContractError(std::string(what) + ": operands must live on one tape");
  }
  return a.tape;
}

void require_valid(Expr a, const char* what) {
  if (!a.valid()) throw ContractError(std::string(what) + ": invalid expression");
}

}  // namespace

#define FEWGEN_BINARY_COMMON(name)                       \
  Tape* t = common_tape(a, b, name);                     \
  const Matrix& av = a.value();                          \
  const Matrix& bv = b.value();

Expr add(Expr a, Expr b) {
  FEWGEN_BINARY_COMMON("add")
  require_same_shape(av, bv, "add");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += bv.data()[i];
  Tape::Node n;
  n.op = Tape::Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.value = std::move(out);
  n.tracked = a.tracked() || b.tracked();
  return t->push(std::move(n));
}

Expr sub(Expr a, Expr b) {
  FEWGEN_BINARY_COMMON("sub")
  require_same_shape(av, bv, "sub");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= bv.data()[i];
  Tape::Node n;
  n.op = Tape::Op::Sub;
  n.a = a.id;
  n.b = b.id;
  n.value = std::move(out);
  n.tracked = a.tracked() || b.tracked();
  return t->push(std::move(n));
}

Expr mul(Expr a, Expr b) {
  FEWGEN_BINARY_COMMON("mul")
  require_same_shape(av, bv, "mul");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= bv.data()[i];
  Tape::Node n;
  n.op = Tape::Op::Mul;
  n.a = a.id;
  n.b = b.id;
  n.value = std::move(out);
  n.tracked = a.tracked() || b.tracked();
  return t->push(std::move(n));
}

Expr div_elem(Expr a, Expr b) {
  FEWGEN_BINARY_COMMON("div_elem")
  require_same_shape(av, bv, "div_elem");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] /= bv.data()[i];
  Tape::Node n;
  n.op = Tape::Op::Div;
  n.a = a.id;
  n.b = b.id;
  n.value = std::move(out);
  n.tracked = a.tracked() || b.tracked();
  return t->push(std::move(n));
}

Expr matmul(Expr a, Expr b) {
  FEWGEN_BINARY_COMMON("matmul")
  Matrix out = matmul(av, bv);
  Tape::Node n;
  n.op = Tape::Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.value = std::move(out);
  n.tracked = a.tracked() || b.tracked();
  return t->push(std::move(n));
}

Expr matmul_nt(Expr a, Expr b) {
  FEWGEN_BINARY_COMMON("matmul_nt")
  Matrix out = matmul_nt(av, bv);
  Tape::Node n;
  n.op = Tape::Op::MatMulNT;
  n.a = a.id;
  n.b = b.id;
  n.value = std::move(out);
  n.tracked = a.tracked() || b.tracked();
  return t->push(std::move(n));
}

Expr add_row(Expr a, Expr bias_row) {
  Expr b = bias_row;
  FEWGEN_BINARY_COMMON("add_row")
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_row: bias must be 1x" + std::to_string(av.cols()));
  }
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
  }
  Tape::Node n;
  n.op = Tape::Op::AddRow;
  n.a = a.id;
  n.b = b.id;
  n.value = std::move(out);
  n.tracked = a.tracked() || b.tracked();
  return t->push(std::move(n));
}

#undef FEWGEN_BINARY_COMMON

Expr leaky_relu(Expr a, double slope) {
  require_valid(a, "leaky_relu");
  const Matrix& av = a.value();
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.data()[i] <= 0.0) out.data()[i] *= slope;
  }
  Tape::Node n;
  n.op = Tape::Op::LeakyRelu;
  n.a = a.id;
  n.value = std::move(out);
  n.scalar = slope;
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr sigmoid(Expr a) {
  require_valid(a, "sigmoid");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = 1.0 / (1.0 + std::exp(-out.data()[i]));
  }
  Tape::Node n;
  n.op = Tape::Op::Sigmoid;
  n.a = a.id;
  n.value = std::move(out);
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr exp_elem(Expr a) {
  require_valid(a, "exp_elem");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::exp(out.data()[i]);
  Tape::Node n;
  n.op = Tape::Op::Exp;
  n.a = a.id;
  n.value = std::move(out);
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr log_elem(Expr a) {
  require_valid(a, "log_elem");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::log(out.data()[i]);
  Tape::Node n;
  n.op = Tape::Op::Log;
  n.a = a.id;
  n.value = std::move(out);
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr sqrt_elem(Expr a) {
  require_valid(a, "sqrt_elem");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::sqrt(out.data()[i]);
  Tape::Node n;
  n.op = Tape::Op::Sqrt;
  n.a = a.id;
  n.value = std::move(out);
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr square(Expr a) {
  require_valid(a, "square");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= out.data()[i];
  Tape::Node n;
  n.op = Tape::Op::Square;
  n.a = a.id;
  n.value = std::move(out);
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr scale(Expr a, double c) {
  require_valid(a, "scale");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
  Tape::Node n;
  n.op = Tape::Op::Scale;
  n.a = a.id;
  n.value = std::move(out);
  n.scalar = c;
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr add_scalar(Expr a, double c) {
  require_valid(a, "add_scalar");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += c;
  Tape::Node n;
  n.op = Tape::Op::AddScalar;
  n.a = a.id;
  n.value = std::move(out);
  n.scalar = c;
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr row_sum(Expr a) {
  require_valid(a, "row_sum");
  const Matrix& av = a.value();
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) acc += av(r, c);
    out(r, 0) = acc;
  }
  Tape::Node n;
  n.op = Tape::Op::RowSum;
  n.a = a.id;
  n.value = std::move(out);
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr sum_all(Expr a) {
  require_valid(a, "sum_all");
  const Matrix& av = a.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av.data()[i];
  Tape::Node n;
  n.op = Tape::Op::SumAll;
  n.a = a.id;
  n.value = Matrix(1, 1, acc);
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr mean_all(Expr a) {
  require_valid(a, "mean_all");
  const Matrix& av = a.value();
  if (av.size() == 0) throw ContractError("mean_all of an empty matrix");
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av.data()[i];
  Tape::Node n;
  n.op = Tape::Op::MeanAll;
  n.a = a.id;
  n.value = Matrix(1, 1, acc / static_cast<double>(av.size()));
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr concat_cols(Expr a, Expr b) {
  Tape* t = common_tape(a, b, "concat_cols");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat_cols: row counts differ (" + std::to_string(av.rows()) +
                     " vs " + std::to_string(bv.rows()) + ")");
  }
  Matrix out(av.rows(), av.cols() + bv.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = av(r, c);
    for (std::size_t c = 0; c < bv.cols(); ++c) out(r, av.cols() + c) = bv(r, c);
  }
  Tape::Node n;
  n.op = Tape::Op::ConcatCols;
  n.a = a.id;
  n.b = b.id;
  n.value = std::move(out);
  n.i0 = av.cols();
  n.tracked = a.tracked() || b.tracked();
  return t->push(std::move(n));
}

Expr slice_cols(Expr a, std::size_t begin, std::size_t end) {
  require_valid(a, "slice_cols");
  const Matrix& av = a.value();
  if (begin >= end || end > av.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for " + std::to_string(av.cols()) + " columns");
  }
  Matrix out(av.rows(), end - begin);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = av(r, c);
  }
  Tape::Node n;
  n.op = Tape::Op::SliceCols;
  n.a = a.id;
  n.value = std::move(out);
  n.i0 = begin;
  n.i1 = end;
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr broadcast_col(Expr a, std::size_t n_cols) {
  require_valid(a, "broadcast_col");
  const Matrix& av = a.value();
  if (av.cols() != 1) throw ShapeError("broadcast_col: input must be batch x 1");
  Matrix out(av.rows(), n_cols);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < n_cols; ++c) out(r, c) = av(r, 0);
  }
  Tape::Node n;
  n.op = Tape::Op::BroadcastCol;
  n.a = a.id;
  n.value = std::move(out);
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr max_scalar(Expr a, double c) {
  require_valid(a, "max_scalar");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.data()[i] < c) out.data()[i] = c;
  }
  Tape::Node n;
  n.op = Tape::Op::MaxScalar;
  n.a = a.id;
  n.value = std::move(out);
  n.scalar = c;
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr gather_rows(Expr a, const std::vector<int>& idx) {
  require_valid(a, "gather_rows");
  const Matrix& av = a.value();
  Matrix out(idx.size(), av.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const int src = idx[r];
    if (src < 0 || static_cast<std::size_t>(src) >= av.rows()) {
      throw ContractError("gather_rows: row index out of range");
    }
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = av(static_cast<std::size_t>(src), c);
  }
  Tape::Node n;
  n.op = Tape::Op::GatherRows;
  n.a = a.id;
  n.value = std::move(out);
  n.idx = idx;
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr select_cols(Expr a, const std::vector<int>& col_per_row) {
  require_valid(a, "select_cols");
  const Matrix& av = a.value();
  if (col_per_row.size() != av.rows()) {
    throw ShapeError("select_cols: need one column index per row");
  }
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    const int c = col_per_row[r];
    if (c < 0 || static_cast<std::size_t>(c) >= av.cols()) {
      throw ContractError("select_cols: column index out of range");
    }
    out(r, 0) = av(r, static_cast<std::size_t>(c));
  }
  Tape::Node n;
  n.op = Tape::Op::SelectCols;
  n.a = a.id;
  n.value = std::move(out);
  n.idx = col_per_row;
  n.tracked = a.tracked();
  return a.tape->push(std::move(n));
}

Expr stop_gradient(Expr a) {
  require_valid(a, "stop_gradient");
  Tape::Node n;
  n.op = Tape::Op::StopGrad;
  n.a = a.id;
  n.value = a.value();
  n.tracked = false;
  return a.tape->push(std::move(n));
}

Expr row_max_const(Expr a) {
  require_valid(a, "row_max_const");
  const Matrix& av = a.value();
  if (av.cols() == 0) throw ContractError("row_max_const of an empty matrix");
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double m = av(r, 0);
    for (std::size_t c = 1; c < av.cols(); ++c) m = std::max(m, av(r, c));
    out(r, 0) = m;
  }
  return a.tape->constant(std::move(out));
}

Matrix& Tape::adjoint(int id) {
  Matrix& adj = adjoints_[static_cast<std::size_t>(id)];
  if (adj.empty()) {
    const Matrix& v = nodes_[static_cast<std::size_t>(id)].value;
    adj = Matrix(v.rows(), v.cols());
  }
  return adj;
}

void Tape::accumulate(int id, const Matrix& delta) {
  if (id < 0) return;
  if (!nodes_[static_cast<std::size_t>(id)].tracked) return;
  Matrix& adj = adjoint(id);
  for (std::size_t i = 0; i < adj.size(); ++i) adj.data()[i] += delta.data()[i];
}

void Tape::backward(Expr loss) {
  if (!loss.valid() || loss.tape != this) {
    throw ContractError("backward: loss does not live on this tape");
  }
  const Node& top = nodes_[static_cast<std::size_t>(loss.id)];
  if (top.value.rows() != 1 || top.value.cols() != 1) {
    throw ContractError("backward: loss must be a 1x1 scalar, got " +
                        std::to_string(top.value.rows()) + "x" +
                        std::to_string(top.value.cols()));
  }
  if (!top.tracked) {
    throw ContractError("backward: loss does not depend on any parameter");
  }

  adjoints_.assign(nodes_.size(), Matrix());
  adjoint(loss.id)(0, 0) = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.tracked) continue;
    const Matrix& g = adjoints_[static_cast<std::size_t>(id)];
    if (g.empty()) continue;

    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::Sub: {
        accumulate(n.a, g);
        if (n.b >= 0 && nodes_[static_cast<std::size_t>(n.b)].tracked) {
          Matrix neg = g;
          for (std::size_t i = 0; i < neg.size(); ++i) neg.data()[i] = -neg.data()[i];
          accumulate(n.b, neg);
        }
        break;
      }
      case Op::Mul: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        const Matrix& bv = nodes_[static_cast<std::size_t>(n.b)].value;
        if (nodes_[static_cast<std::size_t>(n.a)].tracked) {
          Matrix d = g;
          for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] *= bv.data()[i];
          accumulate(n.a, d);
        }
        if (nodes_[static_cast<std::size_t>(n.b)].tracked) {
          Matrix d = g;
          for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] *= av.data()[i];
          accumulate(n.b, d);
        }
        break;
      }
      case Op::Div: {
        const Matrix& bv = nodes_[static_cast<std::size_t>(n.b)].value;
        if (nodes_[static_cast<std::size_t>(n.a)].tracked) {
          Matrix d = g;
          for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] /= bv.data()[i];
          accumulate(n.a, d);
        }
        if (nodes_[static_cast<std::size_t>(n.b)].tracked) {
          Matrix d = g;  // -g * value / b  (value = a / b)
          for (std::size_t i = 0; i < d.size(); ++i) {
            d.data()[i] *= -n.value.data()[i] / bv.data()[i];
          }
          accumulate(n.b, d);
        }
        break;
      }
      case Op::MatMul: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        const Matrix& bv = nodes_[static_cast<std::size_t>(n.b)].value;
        if (nodes_[static_cast<std::size_t>(n.a)].tracked) accumulate(n.a, matmul_nt(g, bv));
        if (nodes_[static_cast<std::size_t>(n.b)].tracked) accumulate(n.b, matmul_tn(av, g));
        break;
      }
      case Op::MatMulNT: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        const Matrix& bv = nodes_[static_cast<std::size_t>(n.b)].value;
        if (nodes_[static_cast<std::size_t>(n.a)].tracked) accumulate(n.a, matmul(g, bv));
        if (nodes_[static_cast<std::size_t>(n.b)].tracked) accumulate(n.b, matmul_tn(g, av));
        break;
      }
      case Op::AddRow: {
        accumulate(n.a, g);
        if (nodes_[static_cast<std::size_t>(n.b)].tracked) {
          Matrix d(1, g.cols());
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < g.cols(); ++c) d(0, c) += g(r, c);
          }
          accumulate(n.b, d);
        }
        break;
      }
      case Op::LeakyRelu: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i) {
          // Derivative at exactly zero is defined as the slope.
          if (av.data()[i] <= 0.0) d.data()[i] *= n.scalar;
        }
        accumulate(n.a, d);
        break;
      }
      case Op::Sigmoid: {
        Matrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i) {
          const double s = n.value.data()[i];
          d.data()[i] *= s * (1.0 - s);
        }
        accumulate(n.a, d);
        break;
      }
      case Op::Exp: {
        Matrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] *= n.value.data()[i];
        accumulate(n.a, d);
        break;
      }
      case Op::Log: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] /= av.data()[i];
        accumulate(n.a, d);
        break;
      }
      case Op::Sqrt: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i) {
          // Subgradient 0 at the origin keeps norm expressions finite.
          d.data()[i] = av.data()[i] > 0.0 ? d.data()[i] * 0.5 / n.value.data()[i] : 0.0;
        }
        accumulate(n.a, d);
        break;
      }
      case Op::Square: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] *= 2.0 * av.data()[i];
        accumulate(n.a, d);
        break;
      }
      case Op::Scale: {
        Matrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] *= n.scalar;
        accumulate(n.a, d);
        break;
      }
      case Op::AddScalar:
        accumulate(n.a, g);
        break;
      case Op::RowSum: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix d(av.rows(), av.cols());
        for (std::size_t r = 0; r < av.rows(); ++r) {
          for (std::size_t c = 0; c < av.cols(); ++c) d(r, c) = g(r, 0);
        }
        accumulate(n.a, d);
        break;
      }
      case Op::SumAll: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, Matrix(av.rows(), av.cols(), g(0, 0)));
        break;
      }
      case Op::MeanAll: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, Matrix(av.rows(), av.cols(), g(0, 0) / static_cast<double>(av.size())));
        break;
      }
      case Op::ConcatCols: {
        const std::size_t ca = n.i0;
        if (nodes_[static_cast<std::size_t>(n.a)].tracked) {
          Matrix d(g.rows(), ca);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < ca; ++c) d(r, c) = g(r, c);
          }
          accumulate(n.a, d);
        }
        if (n.b >= 0 && nodes_[static_cast<std::size_t>(n.b)].tracked) {
          Matrix d(g.rows(), g.cols() - ca);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = ca; c < g.cols(); ++c) d(r, c - ca) = g(r, c);
          }
          accumulate(n.b, d);
        }
        break;
      }
      case Op::SliceCols: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix d(av.rows(), av.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < g.cols(); ++c) d(r, n.i0 + c) = g(r, c);
        }
        accumulate(n.a, d);
        break;
      }
      case Op::BroadcastCol: {
        Matrix d(g.rows(), 1);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < g.cols(); ++c) acc += g(r, c);
          d(r, 0) = acc;
        }
        accumulate(n.a, d);
        break;
      }
      case Op::MaxScalar: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (av.data()[i] <= n.scalar) d.data()[i] = 0.0;
        }
        accumulate(n.a, d);
        break;
      }
      case Op::GatherRows: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix d(av.rows(), av.cols());
        for (std::size_t r = 0; r < n.idx.size(); ++r) {
          const std::size_t src = static_cast<std::size_t>(n.idx[r]);
          for (std::size_t c = 0; c < av.cols(); ++c) d(src, c) += g(r, c);
        }
        accumulate(n.a, d);
        break;
      }
      case Op::SelectCols: {
        const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix d(av.rows(), av.cols());
        for (std::size_t r = 0; r < av.rows(); ++r) {
          d(r, static_cast<std::size_t>(n.idx[r])) = g(r, 0);
        }
        accumulate(n.a, d);
        break;
      }
      case Op::StopGrad:
        break;
    }
  }
}

const Matrix& Tape::grad(Expr e) {
  if (!e.valid() || e.tape != this) {
    throw ContractError("grad: expression does not live on this tape");
  }
  if (adjoints_.size() != nodes_.size()) {
    throw ContractError("grad: call backward first");
  }
  Matrix& adj = adjoints_[static_cast<std::size_t>(e.id)];
  if (adj.empty()) {
    const Matrix& v = nodes_[static_cast<std::size_t>(e.id)].value;
    adj = Matrix(v.rows(), v.cols());
  }
  return adj;
}

Expr operator+(Expr a, Expr b) { return add(a, b); }
Expr operator-(Expr a, Expr b) { return sub(a, b); }
Expr operator*(Expr a, Expr b) { return mul(a, b); }
Expr operator*(double c, Expr a) { return scale(a, c); }
Expr operator-(Expr a) { return scale(a, -1.0); }

Expr cosine_rows(Expr a, Expr b, double norm_floor) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape(av, bv, "cosine_rows");
  Expr dot = row_sum(mul(a, b));
  Expr na = max_scalar(sqrt_elem(row_sum(square(a))), norm_floor);
  Expr nb = max_scalar(sqrt_elem(row_sum(square(b))), norm_floor);
  return div_elem(dot, mul(na, nb));
}

}  // namespace fewgen
