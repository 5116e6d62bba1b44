#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "fewgen/errors.hpp"
#include "fewgen/matrix.hpp"
#include "fewgen/net.hpp"
#include "fewgen/rng.hpp"
#include "fewgen/tape.hpp"
#include "oracles.hpp"

using namespace fewgen;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

/// Checks analytic gradients of `build` (graph over tape.param leaves of
/// `params`) against central finite differences.
void fd_check(std::vector<Matrix>& params,
              const std::function<Expr(Tape&, std::vector<Expr>&)>& build, double rel = 1e-4,
              double eps = 1e-5) {
  Tape tape;
  std::vector<Expr> leaves;
  for (Matrix& p : params) leaves.push_back(tape.param(p));
  Expr loss = build(tape, leaves);
  REQUIRE(loss.rows() == 1);
  REQUIRE(loss.cols() == 1);
  tape.backward(loss);

  auto eval = [&] {
    Tape t2;
    std::vector<Expr> l2;
    for (Matrix& p : params) l2.push_back(t2.param(p));
    return build(t2, l2).value()(0, 0);
  };

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const Matrix& analytic = tape.grad(leaves[pi]);
    for (std::size_t i = 0; i < params[pi].size(); ++i) {
      const double saved = params[pi].data()[i];
      params[pi].data()[i] = saved + eps;
      const double up = eval();
      params[pi].data()[i] = saved - eps;
      const double down = eval();
      params[pi].data()[i] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double got = analytic.data()[i];
      INFO("param ", pi, " entry ", i, ": analytic ", got, " vs fd ", fd);
      CHECK(oracle::close_rel(got, fd, rel, 1e-7));
    }
  }
}

}  // namespace

TEST_CASE("matrix shape and finiteness guards") {
  Matrix a(2, 3, 1.0);
  Matrix b(3, 2, 2.0);
  const Matrix c = matmul(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 2);
  CHECK(c(0, 0) == doctest::Approx(6.0));
  CHECK_THROWS_AS((void)matmul(b, b), ShapeError);
  CHECK(a.all_finite());
  a(0, 0) = std::nan("");
  CHECK_FALSE(a.all_finite());
}

TEST_CASE("identity layer forward returns its input") {
  MlpNet net;
  Matrix w(3, 3, 0.0);
  for (int i = 0; i < 3; ++i) w(i, i) = 1.0;
  net.add_layer({w, Matrix(1, 3, 0.0), {Act::Identity, 0.01}});
  Matrix v(1, 3);
  v(0, 0) = 0.5;
  v(0, 1) = -2.0;
  v(0, 2) = 3.25;
  const Matrix out = net.forward(v);
  for (int i = 0; i < 3; ++i) CHECK(out(0, i) == v(0, i));
}

TEST_CASE("leaky relu with unit weight maps -1 to -0.01") {
  MlpNet net;
  net.add_layer({Matrix(1, 1, 1.0), Matrix(1, 1, 0.0), {Act::LeakyRelu, 0.01}});
  Matrix v(1, 1, -1.0);
  CHECK(net.forward(v)(0, 0) == doctest::Approx(-0.01).epsilon(1e-12));
}

TEST_CASE("random two-layer forward matches the scalar oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    MlpNet net = make_mlp({5, 4, 3}, {Act::LeakyRelu, 0.01}, {Act::Sigmoid, 0.01}, rng);
    oracle::Vec x(5);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    Matrix xm(1, 5);
    for (int i = 0; i < 5; ++i) xm(0, i) = x[i];
    const Matrix got = net.forward(xm);
    const oracle::Vec want = oracle::forward_one(net, x);
    for (int i = 0; i < 3; ++i) {
      CHECK(oracle::close_rel(got(0, i), want[i], 1e-12, 1e-14));
    }
  }
}

TEST_CASE("zero input with zero biases: odd activations give 0, sigmoid gives 0.5") {
  Rng rng(3);
  MlpNet net = make_mlp({4, 4, 2}, {Act::LeakyRelu, 0.01}, {Act::Identity, 0.01}, rng);
  for (auto& layer : net.layers()) layer.bias = Matrix(1, layer.weight.rows(), 0.0);
  const Matrix out = net.forward(Matrix(1, 4, 0.0));
  CHECK(out(0, 0) == 0.0);
  CHECK(out(0, 1) == 0.0);

  MlpNet sig = make_mlp({4, 2}, {Act::LeakyRelu, 0.01}, {Act::Sigmoid, 0.01}, rng);
  sig.layers()[0].bias = Matrix(1, 2, 0.0);
  sig.layers()[0].weight = Matrix(2, 4, 0.0);
  const Matrix sout = sig.forward(Matrix(1, 4, 0.0));
  CHECK(sout(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("forward evaluation is bit-deterministic") {
  Rng rng(7);
  MlpNet net = make_mlp({6, 5, 1}, {Act::LeakyRelu, 0.01}, {Act::Identity, 0.01}, rng);
  const Matrix x = random_matrix(3, 6, rng);
  const Matrix a = net.forward(x);
  const Matrix b = net.forward(x);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("backward of x squared at 3 is 6") {
  Tape tape;
  Expr x = tape.param(Matrix(1, 1, 3.0));
  Expr loss = square(x);
  tape.backward(loss);
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("gradient of cos(v, v) is zero") {
  Tape tape;
  Matrix v(1, 4);
  v(0, 0) = 0.3;
  v(0, 1) = -1.2;
  v(0, 2) = 2.0;
  v(0, 3) = 0.7;
  Expr ve = tape.param(v);
  Expr loss = cosine_rows(ve, ve);
  CHECK(loss.value()(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  tape.backward(loss);
  for (int i = 0; i < 4; ++i) CHECK(std::fabs(tape.grad(ve)(0, i)) < 1e-10);
}

TEST_CASE("backward of a non-scalar node is rejected") {
  Tape tape;
  Expr x = tape.param(Matrix(2, 2, 1.0));
  CHECK_THROWS_AS(tape.backward(x), ContractError);
  Expr c = tape.constant(Matrix(1, 1, 1.0));
  CHECK_THROWS_AS(tape.backward(c), ContractError);  // untracked scalar
}

TEST_CASE("every primitive op passes finite differences") {
  Rng rng(1234);
  auto rnd = [&](std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    return random_matrix(r, c, rng, lo, hi);
  };

  SUBCASE("add/sub/mul/div chain") {
    std::vector<Matrix> p{rnd(3, 4), rnd(3, 4), rnd(3, 4, 0.5, 2.0)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) {
      return mean_all(div_elem(mul(add(e[0], e[1]), sub(e[0], e[1])), e[2]));
    });
  }
  SUBCASE("matmul and matmul_nt") {
    std::vector<Matrix> p{rnd(2, 3), rnd(3, 4), rnd(5, 4)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) {
      return mean_all(matmul_nt(matmul(e[0], e[1]), e[2]));
    });
  }
  SUBCASE("add_row bias broadcast") {
    std::vector<Matrix> p{rnd(4, 3), rnd(1, 3)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) { return sum_all(add_row(e[0], e[1])); });
  }
  SUBCASE("activations away from kinks") {
    std::vector<Matrix> p{rnd(3, 3, 0.2, 1.5)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) {
      return mean_all(add(leaky_relu(e[0], 0.01), sigmoid(e[0])));
    });
    std::vector<Matrix> q{rnd(3, 3, -1.5, -0.2)};
    fd_check(q, [](Tape&, std::vector<Expr>& e) { return sum_all(leaky_relu(e[0], 0.05)); });
  }
  SUBCASE("exp log sqrt square on positive inputs") {
    std::vector<Matrix> p{rnd(2, 3, 0.3, 2.0)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) {
      return mean_all(add(log_elem(e[0]), add(sqrt_elem(e[0]), add(exp_elem(e[0]), square(e[0])))));
    });
  }
  SUBCASE("scale add_scalar row_sum mean_all") {
    std::vector<Matrix> p{rnd(3, 5)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) {
      return mean_all(row_sum(add_scalar(scale(e[0], -2.5), 0.75)));
    });
  }
  SUBCASE("concat and slice") {
    std::vector<Matrix> p{rnd(3, 2), rnd(3, 4)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) {
      Expr cat = concat_cols(e[0], e[1]);
      return sum_all(square(slice_cols(cat, 1, 5)));
    });
  }
  SUBCASE("broadcast_col") {
    std::vector<Matrix> p{rnd(4, 1), rnd(4, 6)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) {
      return mean_all(mul(broadcast_col(e[0], 6), e[1]));
    });
  }
  SUBCASE("max_scalar away from threshold") {
    std::vector<Matrix> p{rnd(3, 3, 0.3, 1.0)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) { return sum_all(max_scalar(e[0], 0.0)); });
    std::vector<Matrix> q{rnd(3, 3, -1.0, -0.3)};
    fd_check(q, [](Tape&, std::vector<Expr>& e) { return sum_all(max_scalar(e[0], 0.0)); });
  }
  SUBCASE("gather_rows and select_cols") {
    std::vector<Matrix> p{rnd(4, 3)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) {
      Expr g = gather_rows(e[0], {2, 0, 2, 3});
      return mean_all(select_cols(g, {0, 2, 1, 1}));
    });
  }
  SUBCASE("stop_gradient blocks flow") {
    Tape tape;
    Expr x = tape.param(Matrix(1, 1, 2.0));
    Expr loss = mul(x, stop_gradient(x));  // d/dx (x * const(x)) = const(x)
    tape.backward(loss);
    CHECK(tape.grad(x)(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("cosine_rows composite") {
    std::vector<Matrix> p{rnd(3, 4, 0.2, 1.0), rnd(3, 4, 0.2, 1.0)};
    fd_check(p, [](Tape&, std::vector<Expr>& e) { return mean_all(cosine_rows(e[0], e[1])); });
  }
  SUBCASE("row_max_const is constant in the graph") {
    Tape tape;
    Expr x = tape.param(random_matrix(3, 4, rng));
    Expr shifted = sub(x, broadcast_col(row_max_const(x), 4));
    Expr loss = sum_all(shifted);
    tape.backward(loss);
    // d/dx sum(x - const) = 1 everywhere.
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(tape.grad(x).data()[i] == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("two-layer net loss matches finite differences") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    MlpNet net = make_mlp({4, 3, 2}, {Act::LeakyRelu, 0.01}, {Act::Sigmoid, 0.01}, rng);
    const Matrix x = random_matrix(3, 4, rng);
    const Matrix target = random_matrix(3, 2, rng);

    Tape tape;
    TapedNet tn = lift(tape, net, true);
    Expr loss = mean_all(square(sub(net_forward(tn, tape.constant(x)), tape.constant(target))));
    tape.backward(loss);
    const std::vector<Matrix> analytic = collect_grads(tape, tn);

    const std::vector<Matrix> fd = oracle::fd_param_grads(net, [&] {
      double acc = 0.0;
      const Matrix out = net.forward(x);
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = out.data()[i] - target.data()[i];
        acc += d * d;
      }
      return acc / static_cast<double>(out.size());
    });

    REQUIRE(analytic.size() == fd.size());
    for (std::size_t pi = 0; pi < fd.size(); ++pi) {
      for (std::size_t i = 0; i < fd[pi].size(); ++i) {
        CHECK(oracle::close_rel(analytic[pi].data()[i], fd[pi].data()[i], 1e-4, 1e-7));
      }
    }
  }
}

TEST_CASE("input gradient of a linear net is its weight row") {
  Rng rng(5);
  MlpNet net;
  Matrix w = random_matrix(1, 6, rng);
  net.add_layer({w, Matrix(1, 1, 0.0), {Act::Identity, 0.01}});

  Tape tape;
  TapedNet tn = lift(tape, net, false);
  const Matrix x = random_matrix(4, 6, rng);
  Expr g = net_input_gradient(tn, tape.constant(x));
  REQUIRE(g.rows() == 4);
  REQUIRE(g.cols() == 6);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      CHECK(g.value()(r, c) == doctest::Approx(w(0, c)).epsilon(1e-14));
    }
  }
}

TEST_CASE("input gradient matches the hand-coded chain-rule oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    MlpNet net = make_mlp({5, 4, 1}, {Act::LeakyRelu, 0.1}, {Act::Identity, 0.01}, rng);
    const Matrix x = random_matrix(3, 5, rng);

    Tape tape;
    TapedNet tn = lift(tape, net, false);
    Expr g = net_input_gradient(tn, tape.constant(x));

    for (std::size_t r = 0; r < 3; ++r) {
      oracle::Vec row(5);
      for (int c = 0; c < 5; ++c) row[c] = x(r, c);
      const oracle::Vec want = oracle::input_gradient_one(net, row);
      for (int c = 0; c < 5; ++c) {
        CHECK(oracle::close_rel(g.value()(r, c), want[c], 1e-10, 1e-12));
      }
    }
  }
}

TEST_CASE("input gradient rejects sigmoid layers and wide outputs") {
  Rng rng(8);
  MlpNet sig = make_mlp({3, 2, 1}, {Act::Sigmoid, 0.01}, {Act::Identity, 0.01}, rng);
  MlpNet wide = make_mlp({3, 2, 2}, {Act::LeakyRelu, 0.01}, {Act::Identity, 0.01}, rng);
  Tape tape;
  TapedNet ts = lift(tape, sig, false);
  TapedNet tw = lift(tape, wide, false);
  const Matrix x(2, 3, 0.5);
  CHECK_THROWS_AS((void)net_input_gradient(ts, tape.constant(x)), ContractError);
  CHECK_THROWS_AS((void)net_input_gradient(tw, tape.constant(x)), ContractError);
}

TEST_CASE("norm of a hand-built gradient graph differentiates w.r.t. weights") {
  // f(x) = (w . x)^2 has input gradient 2 (w . x) w; the squared norm of that
  // gradient, differentiated w.r.t. w, must match finite differences.
  Rng rng(31);
  Matrix w = random_matrix(1, 4, rng, 0.3, 1.2);
  const Matrix x = random_matrix(1, 4, rng, 0.2, 1.0);

  auto build = [&x](Tape& tape, std::vector<Expr>& leaves) {
    Expr we = leaves[0];
    Expr xe = tape.constant(x);
    Expr s = row_sum(mul(we, xe));                              // 1x1 scalar w.x
    Expr grad = scale(mul(broadcast_col(s, 4), we), 2.0);       // 2 (w.x) w
    return sum_all(square(grad));                               // ||grad||^2
  };
  std::vector<Matrix> params{w};
  fd_check(params, build, 1e-3, 1e-5);

  // Analytic check of the forward value: ||2 s w||^2 = 4 s^2 ||w||^2.
  Tape tape;
  std::vector<Expr> leaves{tape.param(params[0])};
  const double got = build(tape, leaves).value()(0, 0);
  double s = 0.0, nw = 0.0;
  for (int i = 0; i < 4; ++i) {
    s += params[0](0, i) * x(0, i);
    nw += params[0](0, i) * params[0](0, i);
  }
  CHECK(got == doctest::Approx(4.0 * s * s * nw).epsilon(1e-12));
}

TEST_CASE("gradient penalty differentiates w.r.t. critic weights (finite differences)") {
  Rng rng(77);
  int done = 0;
  int attempts = 0;
  while (done < 10 && attempts < 60) {
    ++attempts;
    MlpNet net = make_mlp({4, 3, 1}, {Act::LeakyRelu, 0.1}, {Act::Identity, 0.01}, rng);
    const Matrix x = random_matrix(2, 4, rng);

    // Skip trials with a pre-activation near a LeakyRelu kink.
    bool near_kink = false;
    for (std::size_t r = 0; r < x.rows() && !near_kink; ++r) {
      oracle::Vec row(4);
      for (int c = 0; c < 4; ++c) row[c] = x(r, c);
      oracle::Vec h = row;
      const auto& l0 = net.layers()[0];
      for (std::size_t o = 0; o < l0.weight.rows(); ++o) {
        double acc = l0.bias(0, o);
        for (std::size_t i = 0; i < l0.weight.cols(); ++i) acc += l0.weight(o, i) * row[i];
        if (std::fabs(acc) < 1e-4) near_kink = true;
      }
      (void)h;
    }
    if (near_kink) continue;
    ++done;

    Tape tape;
    TapedNet tn = lift(tape, net, true);
    Expr g = net_input_gradient(tn, tape.constant(x));
    Expr norm = sqrt_elem(row_sum(square(g)));
    Expr loss = mean_all(square(add_scalar(norm, -1.0)));
    tape.backward(loss);
    const std::vector<Matrix> analytic = collect_grads(tape, tn);

    const std::vector<Matrix> fd = oracle::fd_param_grads(
        net,
        [&] {
          double acc = 0.0;
          for (std::size_t r = 0; r < x.rows(); ++r) {
            oracle::Vec row(4);
            for (int c = 0; c < 4; ++c) row[c] = x(r, c);
            const oracle::Vec grad = oracle::input_gradient_one(net, row);
            double nsq = 0.0;
            for (double v : grad) nsq += v * v;
            const double d = std::sqrt(nsq) - 1.0;
            acc += d * d;
          }
          return acc / static_cast<double>(x.rows());
        },
        1e-5);

    for (std::size_t pi = 0; pi < fd.size(); ++pi) {
      for (std::size_t i = 0; i < fd[pi].size(); ++i) {
        CHECK(oracle::close_rel(analytic[pi].data()[i], fd[pi].data()[i], 1e-3, 1e-6));
      }
    }
  }
  CHECK(done == 10);
}

TEST_CASE("adam: zero gradient and zero decay leave parameters unchanged") {
  Matrix p(2, 2, 1.5);
  std::vector<Matrix*> params{&p};
  AdamState adam(params, {0.1, 0.0, 0.9, 0.999, 1e-8});
  adam.step(params, {Matrix(2, 2, 0.0)});
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.data()[i] == 1.5);
  CHECK(adam.step_count() == 1);
}

TEST_CASE("adam first step moves by about -lr * sign(gradient)") {
  Matrix p(1, 3, 0.0);
  Matrix g(1, 3);
  g(0, 0) = 0.02;
  g(0, 1) = -3.0;
  g(0, 2) = 0.5;
  std::vector<Matrix*> params{&p};
  AdamState adam(params, {0.01, 0.0, 0.9, 0.999, 1e-8});
  adam.step(params, {g});
  for (int i = 0; i < 3; ++i) {
    const double expected = -0.01 * (g(0, i) > 0 ? 1.0 : -1.0);
    CHECK(p(0, i) == doctest::Approx(expected).epsilon(1e-3));
  }
}

TEST_CASE("adam converges on a quadratic bowl") {
  Rng rng(17);
  Matrix theta = random_matrix(2, 3, rng, -2.0, 2.0);
  const Matrix c = random_matrix(2, 3, rng, -1.0, 1.0);
  std::vector<Matrix*> params{&theta};
  AdamState adam(params, {0.05, 0.0, 0.9, 0.999, 1e-8});
  for (int it = 0; it < 600; ++it) {
    Matrix g(2, 3);
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = 2.0 * (theta.data()[i] - c.data()[i]);
    adam.step(params, {g});
  }
  double dist = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    dist += (theta.data()[i] - c.data()[i]) * (theta.data()[i] - c.data()[i]);
  }
  CHECK(std::sqrt(dist) < 1e-3);
}

TEST_CASE("adam rejects mismatched shapes and applies decoupled decay") {
  Matrix p(2, 2, 1.0);
  std::vector<Matrix*> params{&p};
  AdamState adam(params, {0.1, 0.5, 0.9, 0.999, 1e-8});
  CHECK_THROWS_AS(adam.step(params, {Matrix(1, 2, 0.0)}), ShapeError);
  adam.step(params, {Matrix(2, 2, 0.0)});
  // Zero gradient, decay 0.5, lr 0.1: parameter shrinks by lr * wd * theta.
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p.data()[i] == doctest::Approx(1.0 - 0.1 * 0.5).epsilon(1e-12));
  }
}

TEST_CASE("make_mlp validates dimensions and slope") {
  Rng rng(1);
  CHECK_THROWS_AS((void)make_mlp({4}, {Act::LeakyRelu, 0.01}, {Act::Identity, 0.01}, rng),
                  ConfigError);
  CHECK_THROWS_AS((void)make_mlp({4, 0, 2}, {Act::LeakyRelu, 0.01}, {Act::Identity, 0.01}, rng),
                  ConfigError);
  CHECK_THROWS_AS((void)make_mlp({4, 3}, {Act::LeakyRelu, 1.5}, {Act::LeakyRelu, 1.5}, rng),
                  ConfigError);
  MlpNet chained;
  chained.add_layer({Matrix(3, 4, 0.1), Matrix(1, 3, 0.0), {Act::LeakyRelu, 0.01}});
  CHECK_THROWS_AS(chained.add_layer({Matrix(2, 5, 0.1), Matrix(1, 2, 0.0), {Act::Identity, 0.01}}),
                  ShapeError);
}
