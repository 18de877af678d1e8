#include <doctest.h>

#include <cmath>
#include <random>

#include "solar/autodiff.hpp"
#include "solar/errors.hpp"
#include "solar/gradcheck.hpp"
#include "solar/mlp.hpp"

using namespace solar;

namespace {

Tensor random_tensor(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Tensor t(r, c);
  for (double& v : t.values) v = u(rng);
  return t;
}

double scratch_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("affine with zero weights gives zero output") {
  std::mt19937_64 rng(1);
  Graph g;
  const auto y = g.affine(g.constant(random_tensor(rng, 4, 3)), g.constant(Tensor(3, 2)), g.constant(Tensor(1, 2)));
  for (double v : g.value(y).values) CHECK(v == 0.0);
}

TEST_CASE("identity affine returns its input") {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(rng, 5, 3);
  Tensor eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  Graph g;
  const auto y = g.affine(g.constant(x), g.constant(eye), g.constant(Tensor(1, 3)));
  CHECK(g.value(y).values == x.values);
}

TEST_CASE("two-layer sigmoid network matches a hand evaluation") {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor(rng, 4, 3);
  const Tensor w1 = random_tensor(rng, 3, 5), b1 = random_tensor(rng, 1, 5);
  const Tensor w2 = random_tensor(rng, 5, 2), b2 = random_tensor(rng, 1, 2);
  Graph g;
  const auto h = g.sigmoid(g.affine(g.constant(x), g.constant(w1), g.constant(b1)));
  const auto y = g.sigmoid(g.affine(h, g.constant(w2), g.constant(b2)));
  for (std::size_t n = 0; n < 4; ++n) {
    double hid[5];
    for (int j = 0; j < 5; ++j) {
      double a = b1[j];
      for (int i = 0; i < 3; ++i) a += x(n, i) * w1(i, j);
      hid[j] = scratch_sigmoid(a);
    }
    for (int k = 0; k < 2; ++k) {
      double a = b2[k];
      for (int j = 0; j < 5; ++j) a += hid[j] * w2(j, k);
      CHECK(g.value(y)(n, k) == doctest::Approx(scratch_sigmoid(a)).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradient of sum is all ones") {
  Param p("p", Tensor(3, 4, 0.7));
  Graph g;
  g.backward(g.sum(g.param(p)));
  for (double v : p.grad.values) CHECK(v == 1.0);
}

TEST_CASE("least squares gradient matches the closed form") {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor(rng, 1, 3);
  const Tensor y = random_tensor(rng, 1, 2);
  Param w("w", random_tensor(rng, 3, 2));
  Graph g;
  const auto r = g.sub(g.matmul(g.constant(x), g.param(w)), g.constant(y));
  g.backward(g.scale(g.sum(g.mul(r, r)), 0.5));
  const Tensor& res = g.value(r);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) CHECK(w.grad(i, j) == doctest::Approx(res[j] * x[i]).epsilon(1e-12));
}

TEST_CASE("every elementwise op passes a finite-difference check") {
  std::mt19937_64 rng(5);
  Param a("a", random_tensor(rng, 3, 4)), b("b", random_tensor(rng, 3, 4));
  Param col("col", random_tensor(rng, 3, 1)), w("w", random_tensor(rng, 4, 2)), bias("bias", random_tensor(rng, 1, 2));
  auto build = [&](Graph& g, bool bind) {
    auto node = [&](Param& p) { return bind ? g.param(p) : g.constant(p.value); };
    const auto na = node(a), nb = node(b), nc = node(col);
    auto t = g.add(g.tanh(na), g.mul(g.sigmoid(nb), nc));
    t = g.add(t, g.scale(g.softplus(g.sub(na, nb)), 0.3));
    t = g.add(t, g.exp(g.scale(nb, 0.2)));
    t = g.concat_cols(g.normalize_rows(t), g.slice_cols(t, 1, 3));
    t = g.reshape(g.repeat_rows(t, 2), 12, 3);
    const auto z = g.affine(g.slice_cols(g.reshape(t, 6, 6), 0, 4), node(w), node(bias));
    return g.add(g.mean(g.mul(z, z)), g.sum(g.add_const(z, 0.5)));
  };
  {
    Graph g;
    g.backward(build(g, true));
  }
  auto loss = [&] {
    Graph g;
    return g.value(build(g, false))[0];
  };
  GradCheckStats st;
  for (Param* p : {&a, &b, &col, &w, &bias})
    for (std::size_t i = 0; i < p->value.size(); ++i)
      compare_gradient(st, p->grad[i], central_difference(loss, p->value[i]), p->name);
  CHECK_MESSAGE(st.ok(), st.worst);
}

TEST_CASE("straight-through gate and sign follow their conventions") {
  Tensor s(2, 1);
  s[0] = std::log(0.9 / 0.1);     // sigmoid = 0.9
  s[1] = std::log(0.005 / 0.995);  // sigmoid = 0.005
  Param ps("s", s);
  Graph g;
  const auto gate = g.ste_gate(g.param(ps), 0.01);
  CHECK(g.value(gate)[0] == 1.0);
  CHECK(g.value(gate)[1] == 0.0);
  g.backward(g.sum(gate));
  CHECK(ps.grad[0] == doctest::Approx(0.09).epsilon(1e-12));
  CHECK(ps.grad[1] == doctest::Approx(0.005 * 0.995).epsilon(1e-12));

  Param pl("l", Tensor(1, 3, std::vector<double>{-0.3, 0.0, 2.5}));
  Graph g2;
  const auto sg = g2.ste_sign(g2.param(pl), 1.0);
  CHECK(g2.value(sg).values == std::vector<double>{-1.0, 1.0, 1.0});
  g2.backward(g2.sum(sg));
  CHECK(pl.grad.values == std::vector<double>{1.0, 1.0, 0.0});
}

TEST_CASE("adam takes a bias-corrected first step and ignores zero gradients") {
  Param p("p", Tensor::scalar(0.0));
  p.grad[0] = 1.0;
  Param* ps[] = {&p};
  adam_step(ps, AdamOptions{0.1});
  CHECK(p.value[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(p.grad[0] == 0.0);

  Param q("q", Tensor::scalar(2.0));
  Param* qs[] = {&q};
  adam_step(qs, AdamOptions{0.1});
  CHECK(q.value[0] == 2.0);
  CHECK(q.step_count == 1);
}

TEST_CASE("adam minimises a quadratic and matches a scalar recursion") {
  const double lr = 0.3;
  Param p("x", Tensor::scalar(0.0));
  Param* ps[] = {&p};
  double x = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    p.grad[0] = 2.0 * (p.value[0] - 3.0);
    adam_step(ps, AdamOptions{lr});
    const double g = 2.0 * (x - 3.0);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= lr * (m / (1.0 - std::pow(0.9, t))) / (std::sqrt(v / (1.0 - std::pow(0.999, t))) + 1e-8);
  }
  CHECK(p.value[0] == doctest::Approx(x).epsilon(1e-12));
  CHECK(std::abs(p.value[0] - 3.0) < 1e-2);
}

TEST_CASE("adam rejects non-finite gradients without touching values") {
  Param p("p", Tensor(1, 2, 1.0));
  p.grad[1] = std::nan("");
  Param* ps[] = {&p};
  CHECK_THROWS_AS(adam_step(ps, AdamOptions{}), NonFiniteError);
  CHECK(p.value.values == std::vector<double>{1.0, 1.0});
}

TEST_CASE("shape mismatches are reported") {
  Graph g;
  CHECK_THROWS_AS(g.add(g.constant(Tensor(2, 3)), g.constant(Tensor(3, 2))), ShapeError);
  CHECK_THROWS_AS(g.matmul(g.constant(Tensor(2, 3)), g.constant(Tensor(2, 3))), ShapeError);
  CHECK_THROWS(g.backward(g.constant(Tensor(2, 2))));
}

TEST_CASE("forward evaluation is bit-identical across repeated runs") {
  std::mt19937_64 r1(9), r2(9);
  Mlp a({7, 16, 16, 5}, r1, "a"), b({7, 16, 16, 5}, r2, "b");
  std::mt19937_64 rng(10);
  const Tensor x = random_tensor(rng, 20, 7);
  CHECK(a.evaluate(x).values == b.evaluate(x).values);
  Graph g;
  const auto y = a.forward(g, g.constant(x), false);
  CHECK(g.value(y).values == a.evaluate(x).values);
}

TEST_CASE("round_to_float matches float32 casts") {
  std::vector<double> v{0.1, -1.0 / 3.0, 1e-30, 12345.678};
  round_to_float(v);
  CHECK(v[0] == static_cast<double>(0.1f));
  CHECK(v[1] == static_cast<double>(static_cast<float>(-1.0 / 3.0)));
  CHECK(v[3] == static_cast<double>(12345.678f));
}
