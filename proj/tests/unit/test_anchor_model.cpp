#include <doctest.h>

#include <cmath>
#include <random>

#include "scratch.hpp"
#include "solar/anchor_model.hpp"
#include "solar/errors.hpp"
#include "solar/gradcheck.hpp"
#include "solar/objective.hpp"

using namespace solar;

namespace {

AnchorSet random_anchors(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  return AnchorSet{scratch::random_tensor(rng, n, 3, -0.5, 0.5), scratch::random_tensor(rng, n, d, -1, 1),
                   scratch::random_tensor(rng, n, 3, 0.1, 0.4)};
}

void zero(Mlp& m) {
  for (Param* p : m.params()) p->value.fill(0.0);
}

}  // namespace

TEST_CASE("zero attribute network decodes to the anchor centre") {
  std::mt19937_64 rng(1);
  GaussianAttributeNet ng(AttributeNetConfig{6, 8, 3, 0.05}, rng);
  zero(ng.mlp());
  const AnchorSet a = random_anchors(rng, 4, 6);
  const auto gs = decode_anchors(a, ng, Eigen::Vector3d::UnitX());
  REQUIRE(gs.size() == 12);
  for (std::size_t i = 0; i < gs.size(); ++i) {
    for (int k = 0; k < 3; ++k) CHECK(gs[i].mu[k] == a.x(i / 3, k));
    CHECK(gs[i].alpha == 0.5);
    CHECK(gs[i].c == Eigen::Vector3d::Constant(0.5));
  }
}

TEST_CASE("offsets scale elementwise with the anchor scaling") {
  std::mt19937_64 rng(2);
  GaussianAttributeNet ng(AttributeNetConfig{4, 8, 1, 0.05}, rng);
  zero(ng.mlp());
  ng.mlp().layers().back().bias.value[0] = 1.0;  // raw offset (1, 0, 0)
  AnchorSet a{Tensor(1, 3, {0.1, 0.2, 0.3}), Tensor(1, 4), Tensor(1, 3, {2.0, 1.0, 1.0})};
  const auto gs = decode_anchors(a, ng, Eigen::Vector3d::UnitZ());
  CHECK(gs[0].mu[0] == doctest::Approx(2.1));
  CHECK(gs[0].mu[1] == 0.2);
  CHECK(gs[0].mu[2] == 0.3);
}

TEST_CASE("decoded attributes match a scratch evaluation of the network and heads") {
  std::mt19937_64 rng(3);
  const AttributeNetConfig cfg{5, 7, 2, 0.05};
  GaussianAttributeNet ng(cfg, rng);
  for (Param* p : ng.mlp().params())
    for (double& v : p->value.values) v += std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
  const AnchorSet a = random_anchors(rng, 3, 5);
  const Eigen::Vector3d d = Eigen::Vector3d(0.3, -0.4, 0.5).normalized();
  const auto gs = decode_anchors(a, ng, d);
  for (std::size_t n = 0; n < 3; ++n) {
    std::vector<double> in;
    for (int j = 0; j < 5; ++j) in.push_back(a.f(n, j));
    for (int j = 0; j < 3; ++j) in.push_back(d[j]);
    const auto raw = scratch::mlp(ng.mlp(), in);
    for (std::size_t k = 0; k < 2; ++k) {
      const double* r = raw.data() + k * kAttributeCols;
      const auto& g = gs[n * 2 + k];
      for (int j = 0; j < 3; ++j) {
        CHECK(g.mu[j] == doctest::Approx(a.x(n, j) + r[j] * a.l(n, j)).epsilon(1e-12));
        CHECK(g.c[j] == doctest::Approx(scratch::sigmoid(r[3 + j])).epsilon(1e-12));
        CHECK(g.s[j] == doctest::Approx(0.05 * scratch::softplus(r[10 + j])).epsilon(1e-12));
      }
      const double qn = std::sqrt(r[6] * r[6] + r[7] * r[7] + r[8] * r[8] + r[9] * r[9]);
      for (int j = 0; j < 4; ++j) CHECK(g.r[j] == doctest::Approx(r[6 + j] / qn).epsilon(1e-12));
      CHECK(g.alpha == doctest::Approx(scratch::sigmoid(r[13])).epsilon(1e-12));
    }
  }
}

TEST_CASE("decoded Gaussian count is k per anchor") {
  std::mt19937_64 rng(4);
  GaussianAttributeNet ng(AttributeNetConfig{4, 8, 5, 0.05}, rng);
  CHECK(decode_anchors(random_anchors(rng, 7, 4), ng, Eigen::Vector3d::UnitY()).size() == 35);
  CHECK_THROWS_AS(decode_anchors(random_anchors(rng, 2, 4), ng, Eigen::Vector3d(1, 1, 0)), ConfigError);
}

TEST_CASE("mask scores") {
  std::mt19937_64 rng(5);
  MaskNet nm(MaskNetConfig{4, 6}, rng);
  const AnchorSet a = random_anchors(rng, 5, 4);
  const auto m = mask_scores(a, nm);
  for (std::size_t n = 0; n < 5; ++n) {
    std::vector<double> in;
    for (int j = 0; j < 4; ++j) in.push_back(a.f(n, j));
    for (int j = 0; j < 3; ++j) in.push_back(a.x(n, j));
    CHECK(m[n] == doctest::Approx(scratch::mlp(nm.mlp(), in)[0]).epsilon(1e-12));
  }
  AnchorSet dup = a;
  for (int j = 0; j < 3; ++j) dup.x(1, j) = dup.x(0, j);
  for (int j = 0; j < 4; ++j) dup.f(1, j) = dup.f(0, j);
  const auto md = mask_scores(dup, nm);
  CHECK(md[0] == md[1]);
  zero(nm.mlp());
  for (double v : mask_scores(a, nm)) CHECK(v == 0.0);
}

TEST_CASE("gating zeroes scale and opacity of vanished anchors only") {
  std::mt19937_64 rng(6);
  GaussianAttributeNet ng(AttributeNetConfig{4, 8, 2, 0.05}, rng);
  const AnchorSet a = random_anchors(rng, 3, 4);
  const auto gs = decode_anchors(a, ng, Eigen::Vector3d::UnitX());
  const std::vector<double> scores{std::log(0.9 / 0.1), std::log(0.005 / 0.995), 0.0};
  const auto gated = gate_attributes(gs, scores, 0.01);
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const bool on = i / 2 != 1;
    CHECK(gated[i].mu == gs[i].mu);
    CHECK(gated[i].c == gs[i].c);
    CHECK(gated[i].r == gs[i].r);
    CHECK(gated[i].alpha == (on ? gs[i].alpha : 0.0));
    CHECK(gated[i].s == (on ? gs[i].s : Eigen::Vector3d::Zero()));
  }
  const auto twice = gate_attributes(gated, scores, 0.01);
  for (std::size_t i = 0; i < gs.size(); ++i) CHECK(twice[i].alpha == gated[i].alpha);
}

TEST_CASE("partition agrees with a brute-force filter and the gate") {
  std::mt19937_64 rng(7);
  std::vector<double> scores(40);
  for (double& v : scores) v = std::uniform_real_distribution<double>(-8, 3)(rng);
  const auto p = partition(scores, 0.01);
  std::vector<std::size_t> on, off;
  for (std::size_t i = 0; i < scores.size(); ++i) (1.0 / (1.0 + std::exp(-scores[i])) > 0.01 ? on : off).push_back(i);
  CHECK(p.active == on);
  CHECK(p.vanished == off);
  CHECK(p.active.size() + p.vanished.size() == scores.size());
  Graph g;
  Tensor t(scores.size(), 1, scores);
  const auto m = g.ste_gate(g.constant(t), 0.01);
  for (auto i : p.active) CHECK(g.value(m)[i] == 1.0);
  for (auto i : p.vanished) CHECK(g.value(m)[i] == 0.0);

  const auto all = partition(std::vector<double>(6, 0.0), 0.01);
  CHECK(all.active.size() == 6);
  CHECK(partition(std::vector<double>(6, 0.0), 1.0).vanished.size() == 6);
}

TEST_CASE("warm start copies weights and resets the optimiser") {
  std::mt19937_64 rng(8);
  MaskNet nm(MaskNetConfig{4, 6}, rng);
  for (Param* p : nm.mlp().params()) {
    p->adam_m.fill(1.0);
    p->step_count = 7;
  }
  const MaskNet copy = warm_start_mask(nm);
  CHECK(copy.mlp().flatten() == nm.mlp().flatten());
  for (const Param* p : copy.mlp().params()) {
    CHECK(p->step_count == 0);
    for (double v : p->adam_m.values) CHECK(v == 0.0);
  }
  const AnchorSet a = random_anchors(rng, 6, 4);
  CHECK(mask_scores(a, copy) == mask_scores(a, nm));
}

TEST_CASE("a vanished anchor contributes nothing and renders again once reactivated") {
  std::mt19937_64 rng(9);
  GaussianAttributeNet ng(AttributeNetConfig{4, 8, 2, 0.05}, rng);
  MaskNet nm(MaskNetConfig{4, 6}, rng);
  zero(nm.mlp());
  AnchorSet a = random_anchors(rng, 2, 4);
  const Camera cam = Camera::look_at({3, 0.2, 0.8}, {0, 0, 0}, {0, 0, 1}, 30, 24, 24);
  auto render_with_bias = [&](double b) {
    nm.mlp().layers().back().bias.value[0] = b;
    return render_state(a, ng, nm, true, 0.01, cam, Eigen::Vector3d::Zero());
  };
  const Image off = render_with_bias(-10.0);
  for (double v : off.pixels) CHECK(v == 0.0);
  const Image on = render_with_bias(2.0);
  double energy = 0.0;
  for (double v : on.pixels) energy += v;
  CHECK(energy > 0.0);
}

TEST_CASE("straight-through gradient reaches the mask through opacity and scale") {
  std::mt19937_64 rng(10);
  const AttributeNetConfig cfg{4, 6, 2, 0.12};
  GaussianAttributeNet ng(cfg, rng);
  MaskNet nm(MaskNetConfig{4, 5}, rng);
  const AnchorSet a = random_anchors(rng, 3, 4);
  const Camera cam = Camera::look_at({3.2, 0.7, 0.9}, {0, 0, 0}, {0, 0, 1}, 14, 12, 12);
  Image gt(12, 12);
  for (double& v : gt.pixels) v = std::uniform_real_distribution<double>(0, 1)(rng);
  ObjectiveOptions opt;
  opt.use_sparsity = false;
  opt.render.w_min = 0.0;
  opt.render.radius_sigmas = 12.0;

  // Bias the scores so every anchor is active, then compare d L / d bias with
  // the chain sigma'(m) * d L / d(multiplier on alpha and s) evaluated by FD.
  nm.mlp().layers().back().bias.value[0] = 1.5;
  {
    Graph g;
    frame_objective(g, g.constant(a.x), g.constant(a.f), g.constant(a.l), ng, false, nm, true, cam, gt, opt);
  }
  const double analytic = nm.mlp().layers().back().bias.grad[0];
  const auto scores = mask_scores(a, nm);
  double chain = 0.0;
  for (std::size_t n = 0; n < 3; ++n) {
    auto loss = [&](double mult) {
      auto gs = decode_anchors(a, ng, view_direction(cam, Eigen::Vector3d::Zero()));
      for (std::size_t j = 0; j < 2; ++j) {
        gs[n * 2 + j].alpha *= mult;
        gs[n * 2 + j].s *= mult;
      }
      return rendering_loss(render(gs, cam, opt.render), gt, opt.weights);
    };
    const double h = 1e-5;
    const double dm = (loss(1 + h) - loss(1 - h)) / (2 * h);
    const double s = scratch::sigmoid(scores[n]);
    chain += dm * s * (1 - s);
  }
  CHECK(analytic == doctest::Approx(chain).epsilon(1e-4));
}

TEST_CASE("attribute and mask network gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto a = check_attribute_net_gradients(seed);
    CHECK_MESSAGE(a.ok(), a.worst);
    const auto m = check_mask_net_gradients(seed);
    CHECK_MESSAGE(m.ok(), m.worst);
  }
}

TEST_CASE("anchor validation") {
  AnchorSet a{Tensor(2, 3), Tensor(2, 4), Tensor(2, 3, 0.1)};
  CHECK_NOTHROW(a.validate());
  a.l[3] = 0.0;
  CHECK_THROWS(a.validate());
  AnchorSet b{Tensor(2, 3), Tensor(3, 4), Tensor(2, 3, 0.1)};
  CHECK_THROWS_AS(b.validate(), ShapeError);
}
