#include <cmath>
#include <random>

#include "doctest.h"
#include "hdcn/autodiff.hpp"
#include "hdcn/gradcheck.hpp"
#include "hdcn/lstm.hpp"
#include "hdcn/params.hpp"
#include "hdcn/validation.hpp"

using namespace hdcn::ad;
using doctest::Approx;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill(Parameter& p, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& x : p.value) x = u(rng);
}

}  // namespace

TEST_CASE("shapes") {
  CHECK(Shape(3).size() == 3);
  CHECK(Shape(2, 5).size() == 10);
  CHECK(Shape(2, 5).str() == "[2x5]");
  CHECK_FALSE(Shape(3) == Shape(3, 1));
  Graph g;
  CHECK_THROWS_AS(g.constant(Shape(2, 2), {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(matmul(g.constant(Shape(2, 3), std::vector<double>(6)), g.constant(Shape(2), {1, 2})),
                  ShapeError);
  CHECK_THROWS_AS(add(g.constant(Shape(2), {1, 2}), g.constant(Shape(3), {1, 2, 3})), ShapeError);
}

TEST_CASE("forward values") {
  Graph g(false);
  Var m = g.constant(Shape(2, 3), {1, 2, 3, 4, 5, 6});
  Var v = g.constant(Shape(3), {1, 0, -1});
  auto mv = matmul(m, v).value();
  CHECK(mv[0] == -2);
  CHECK(mv[1] == -2);
  auto vm = matmul(g.constant(Shape(2), {1, 1}), m).value();
  CHECK(std::vector<double>(vm.begin(), vm.end()) == std::vector<double>{5, 7, 9});
  Var mm = matmul(m, g.constant(Shape(3, 1), {1, 1, 1}));
  CHECK(mm.shape() == Shape(2, 1));
  CHECK(mm.at(1) == 15);

  auto sm = softmax(g.constant(Shape(3), {1, 2, 3})).value();
  const double z = std::exp(1) + std::exp(2) + std::exp(3);
  CHECK(sm[0] == Approx(std::exp(1) / z));
  CHECK(sm[2] == Approx(std::exp(3) / z));
  // Large logits do not overflow.
  auto big = softmax(g.constant(Shape(2), {1000, 1000})).value();
  CHECK(big[0] == Approx(0.5));

  auto ms = masked_softmax(g.constant(Shape(3), {5, 1, 1}), {false, true, true}).value();
  CHECK(ms[0] == 0.0);
  CHECK(ms[1] == Approx(0.5));
  CHECK_THROWS(masked_softmax(g.constant(Shape(2), {1, 2}), {false, false}));

  auto pooled = max_pool_rows(g.constant(Shape(3, 2), {1, 9, 4, 2, 7, 3}), {true, true, false}).value();
  CHECK(pooled[0] == 4);
  CHECK(pooled[1] == 9);

  auto sc = scatter_add(g.constant(Shape(3), {0.5, 0.25, 0.25}), std::vector<int>{2, 0, 2}, 4).value();
  CHECK(std::vector<double>(sc.begin(), sc.end()) == std::vector<double>{0.25, 0, 0.75, 0});

  CHECK(sigmoid(g.constant(Shape(2), {-800, 800})).at(0) >= 0.0);
  CHECK(sigmoid(g.constant(Shape(1), {0.3})).scalar() == Approx(sigm(0.3)));
  CHECK(dot(v, v).scalar() == 2);
  CHECK(concat({v, g.scalar(7)}).size() == 4);
  CHECK(slice(v, 1, 2).at(1) == -1);
  CHECK(stack_rows(std::vector<Var>{v, v}).shape() == Shape(2, 3));
  CHECK(affine(v, 2.0, 1.0).at(2) == -1);
  CHECK(mean(v).scalar() == 0);
}

TEST_CASE("reverse mode on a hand-derived expression") {
  // f(x, y) = sum(sigmoid(x) * y) + log(x0)
  ParamStore ps;
  Parameter& x = ps.add("x", Shape(2));
  Parameter& y = ps.add("y", Shape(2));
  x.value = {0.5, -1.5};
  y.value = {2.0, 3.0};
  Graph g;
  Var vx = g.param(x), vy = g.param(y);
  Var f = add(sum(mul(sigmoid(vx), vy)), log(pick(vx, 0)));
  g.backward(f);
  const double s0 = sigm(0.5), s1 = sigm(-1.5);
  CHECK(x.grad[0] == Approx(2.0 * s0 * (1 - s0) + 1.0 / 0.5));
  CHECK(x.grad[1] == Approx(3.0 * s1 * (1 - s1)));
  CHECK(y.grad[0] == Approx(s0));
  CHECK(y.grad[1] == Approx(s1));
  CHECK_THROWS_AS(g.backward(f), std::logic_error);
}

TEST_CASE("backward preconditions") {
  ParamStore ps;
  Parameter& x = ps.add("x", Shape(2));
  Graph untracked(false);
  CHECK_THROWS_AS(untracked.backward(sum(untracked.param(x))), std::logic_error);
  Graph g;
  CHECK_THROWS_AS(g.backward(g.param(x)), ShapeError);
}

TEST_CASE("gradients accumulate across graphs") {
  ParamStore ps;
  Parameter& x = ps.add("x", Shape(1));
  x.value = {3.0};
  for (int i = 0; i < 2; ++i) {
    Graph g;
    Var v = g.param(x);
    g.backward(mul(v, v), 0.5);
  }
  CHECK(x.grad[0] == Approx(6.0));
  ps.zero_grad();
  CHECK(x.grad[0] == 0.0);
}

TEST_CASE("lstm cell matches a scalar reference") {
  std::mt19937_64 rng(4);
  ParamStore ps;
  LstmLayer layer = add_lstm_layer(ps, "l", 2, 3);
  fill(*layer.weight, rng, -0.5, 0.5);
  fill(*layer.bias, rng, -0.5, 0.5);
  const std::vector<double> x = {0.3, -0.7}, h = {0.1, 0.2, -0.3}, c = {0.5, -0.1, 0.05};
  Graph g(false);
  LstmState out = lstm_cell(g.constant(Shape(2), x), {g.constant(Shape(3), h), g.constant(Shape(3), c)}, layer);

  const auto& W = layer.weight->value;
  const auto& b = layer.bias->value;
  std::vector<double> in = {x[0], x[1], h[0], h[1], h[2]};
  auto z = [&](std::size_t row) {
    double s = b[row];
    for (std::size_t k = 0; k < 5; ++k) s += W[row * 5 + k] * in[k];
    return s;
  };
  for (std::size_t u = 0; u < 3; ++u) {
    const double i = sigm(z(u)), f = sigm(z(3 + u)), gg = std::tanh(z(6 + u)), o = sigm(z(9 + u));
    const double c2 = f * c[u] + i * gg;
    CHECK(out.c.at(u) == Approx(c2).epsilon(1e-12));
    CHECK(out.h.at(u) == Approx(o * std::tanh(c2)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(lstm_cell(g.constant(Shape(3), {1, 2, 3}), {out.h, out.c}, layer), ShapeError);
}

TEST_CASE("every op passes a finite-difference check") {
  for (const auto& oc : hdcn::check_ops(17)) {
    CAPTURE(oc.op);
    CHECK(oc.result.entries_checked > 0);
    CHECK(oc.result.max_rel_error < 1e-4);
  }
}

TEST_CASE("grad_check detects a wrong gradient") {
  ParamStore ps;
  Parameter& x = ps.add("x", Shape(2));
  x.value = {0.4, -0.2};
  // Backward doubles the true gradient.
  auto broken = [&](Graph& g) {
    Var v = g.param(x);
    const int iv = v.id(), io = static_cast<int>(g.size());
    const double s = v.at(0) * v.at(0) + v.at(1) * v.at(1);
    return g.make(Shape(1), {s}, {v}, [=](Graph& gr) {
      const double d = gr.grad(io)[0];
      double* gx = gr.grad_ptr(iv);
      const double* xv = gr.value_ptr(iv);
      for (int i = 0; i < 2; ++i) gx[i] += d * 4.0 * xv[i];
    });
  };
  const GradCheckResult r = grad_check(broken, ps);
  CHECK(r.max_rel_error > 0.1);
  CHECK(r.worst_param == "x");
  CHECK_THROWS(grad_check(broken, ps, 1e-7));
}

TEST_CASE("dropout") {
  Graph g;
  std::mt19937_64 rng(1);
  Var a = g.constant(Shape(1000), std::vector<double>(1000, 1.0));
  Var eval = dropout(a, 0.5, false, rng);
  CHECK(eval.id() == a.id());
  Var tr = dropout(a, 0.5, true, rng);
  std::size_t zeros = 0;
  double total = 0;
  for (double v : tr.value()) {
    zeros += v == 0.0;
    CHECK((v == 0.0 || v == 2.0));
    total += v;
  }
  CHECK(zeros > 400);
  CHECK(zeros < 600);
  CHECK(total / 1000 == Approx(1.0).epsilon(0.15));
}

TEST_CASE("adam step follows the bias-corrected update") {
  ParamStore ps;
  Parameter& p = ps.add("p", Shape(2));
  p.value = {1.0, -2.0};
  AdamConfig cfg;
  cfg.lr = 0.1;
  double m = 0, v = 0, x = 1.0;
  for (int t = 1; t <= 3; ++t) {
    const double grad = 2.0 * x;  // d/dx x^2
    p.grad = {grad, 0.0};
    adam_step(ps, cfg);
    m = cfg.beta1 * m + (1 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1 - cfg.beta2) * grad * grad;
    const double mh = m / (1 - std::pow(cfg.beta1, t)), vh = v / (1 - std::pow(cfg.beta2, t));
    x -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
    CHECK(p.value[0] == Approx(x).epsilon(1e-12));
    CHECK(p.value[1] == -2.0);
    CHECK(p.grad[0] == 0.0);
  }
  CHECK(ps.step() == 3);
}

TEST_CASE("global-norm clipping") {
  ParamStore ps;
  Parameter& a = ps.add("a", Shape(2));
  Parameter& b = ps.add("b", Shape(1));
  a.grad = {3.0, 0.0};
  b.grad = {4.0};
  CHECK(ps.grad_norm() == Approx(5.0));
  CHECK(ps.clip_grad_norm(10.0) == Approx(5.0));
  CHECK(a.grad[0] == 3.0);
  ps.clip_grad_norm(1.0);
  CHECK(ps.grad_norm() == Approx(1.0));
  CHECK(a.grad[0] == Approx(0.6));
}

TEST_CASE("param store") {
  ParamStore ps;
  Parameter& a = ps.add("a", Shape(2, 3));
  CHECK(a.value.size() == 6);
  CHECK(ps.contains("a"));
  CHECK_THROWS(ps.add("a", Shape(1)));
  CHECK_THROWS(ps.get("missing"));
  ParamStore copy = ps;
  copy.get("a").value[0] = 5.0;
  CHECK(ps.get("a").value[0] == 0.0);
  CHECK(ps.num_values() == 6);
}
