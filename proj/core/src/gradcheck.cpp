#include "solar/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "solar/anchor_model.hpp"
#include "solar/btc.hpp"
#include "solar/losses.hpp"
#include "solar/objective.hpp"
#include "solar/render.hpp"

namespace solar {

void GradCheckStats::merge(const GradCheckStats& o) {
  checked += o.checked;
  failed += o.failed;
  max_grad = std::max(max_grad, o.max_grad);
  if (o.worst_rel > worst_rel) {
    worst_rel = o.worst_rel;
    worst = o.worst;
  }
}

void compare_gradient(GradCheckStats& stats, double analytic, double numeric, const std::string& where,
                      double rel_tol, double abs_tol) {
  ++stats.checked;
  stats.max_grad = std::max(stats.max_grad, std::abs(analytic));
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  const double rel = scale > 0.0 ? diff / scale : 0.0;
  const bool pass = diff < abs_tol || rel < rel_tol;
  if (!pass) ++stats.failed;
  const double reported = rel;
  if (reported > stats.worst_rel || (!pass && stats.failed == 1)) {
    stats.worst_rel = std::max(stats.worst_rel, reported);
    stats.worst = where + " analytic=" + std::to_string(analytic) + " numeric=" + std::to_string(numeric);
  }
}

double central_difference(const std::function<double()>& f, double& x, double h) {
  const double x0 = x;
  x = x0 + h;
  const double fp = f();
  x = x0 - h;
  const double fm = f();
  x = x0;
  return (fp - fm) / (2.0 * h);
}

namespace {

RenderOptions smooth_options() {
  RenderOptions o;
  o.w_min = 0.0;
  o.radius_sigmas = 12.0;
  return o;
}

Camera test_camera(int w, int h, double focal) {
  return Camera::look_at({3.2, 0.7, 0.9}, {0, 0, 0}, {0, 0, 1}, focal, w, h);
}

double unif(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Image random_image(std::mt19937_64& rng, int w, int h) {
  Image img(w, h);
  for (double& v : img.pixels) v = unif(rng, 0.0, 1.0);
  return img;
}

ObjectiveOptions smooth_objective() {
  ObjectiveOptions o;
  o.gate = false;
  o.use_sparsity = false;
  o.render = smooth_options();
  return o;
}

AnchorSet random_anchors(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  AnchorSet a{Tensor(n, 3), Tensor(n, d), Tensor(n, 3)};
  for (double& v : a.x.values) v = unif(rng, -0.4, 0.4);
  for (double& v : a.f.values) v = unif(rng, -0.8, 0.8);
  for (double& v : a.l.values) v = unif(rng, 0.1, 0.3);
  return a;
}

}  // namespace

GradCheckStats check_render_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int w = 16, h = 16;
  const Camera cam = test_camera(w, h, 18.0);
  const RenderOptions opt = smooth_options();
  const int n = 1 + static_cast<int>(rng() % 10);
  std::vector<GaussianPrimitive> gs(static_cast<std::size_t>(n));
  for (auto& g : gs) {
    for (int k = 0; k < 3; ++k) g.mu[k] = unif(rng, -0.6, 0.6);
    for (int k = 0; k < 3; ++k) g.s[k] = unif(rng, 0.1, 0.35);
    for (int k = 0; k < 4; ++k) g.r[k] = unif(rng, -1.0, 1.0);
    g.r /= g.r.norm();
    for (int k = 0; k < 3; ++k) g.c[k] = unif(rng, 0.0, 1.0);
    g.alpha = unif(rng, 0.2, 0.9);
  }
  const Image weights = random_image(rng, w, h);
  auto loss = [&] {
    const Image img = render(gs, cam, opt);
    double s = 0.0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) s += (weights.pixels[i] - 0.5) * img.pixels[i];
    return s;
  };
  Image dl(w, h);
  for (std::size_t i = 0; i < dl.pixels.size(); ++i) dl.pixels[i] = weights.pixels[i] - 0.5;
  RenderCache cache;
  render(gs, cam, opt, &cache);
  const auto grads = render_backward(gs, cam, cache, dl, opt);

  GradCheckStats st;
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const std::string tag = "render g" + std::to_string(i);
    for (int k = 0; k < 3; ++k) compare_gradient(st, grads[i].mu[k], central_difference(loss, gs[i].mu[k]), tag + ".mu");
    for (int k = 0; k < 3; ++k) compare_gradient(st, grads[i].s[k], central_difference(loss, gs[i].s[k]), tag + ".s");
    for (int k = 0; k < 4; ++k) compare_gradient(st, grads[i].r[k], central_difference(loss, gs[i].r[k]), tag + ".r");
    for (int k = 0; k < 3; ++k) compare_gradient(st, grads[i].c[k], central_difference(loss, gs[i].c[k]), tag + ".c");
    compare_gradient(st, grads[i].alpha, central_difference(loss, gs[i].alpha), tag + ".alpha");
  }
  return st;
}

GradCheckStats check_attribute_net_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int w = 12, h = 12;
  const Camera cam = test_camera(w, h, 14.0);
  const AttributeNetConfig cfg{4, 6, 2, 0.12};
  GaussianAttributeNet ng(cfg, rng);
  MaskNet nm(MaskNetConfig{4, 4}, rng);
  const AnchorSet a = random_anchors(rng, 3, cfg.feature_dim);
  const Image gt = random_image(rng, w, h);
  const ObjectiveOptions opt = smooth_objective();

  Param px("x", a.x), pf("f", a.f), pl("l", a.l);
  {
    Graph g;
    frame_objective(g, g.param(px), g.param(pf), g.param(pl), ng, true, nm, false, cam, gt, opt);
  }
  auto loss = [&] {
    Graph g;
    return frame_objective(g, g.constant(px.value), g.constant(pf.value), g.constant(pl.value), ng, false, nm, false,
                           cam, gt, opt)
        .rendering;
  };
  GradCheckStats st;
  for (Param* p : {&px, &pf, &pl})
    for (std::size_t i = 0; i < p->value.size(); ++i)
      compare_gradient(st, p->grad[i], central_difference(loss, p->value[i]), "anchor " + p->name);
  for (Param* p : ng.mlp().params())
    for (std::size_t i = 0; i < p->value.size(); ++i)
      compare_gradient(st, p->grad[i], central_difference(loss, p->value[i]), p->name);
  return st;
}

GradCheckStats check_mask_net_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MaskNet nm(MaskNetConfig{4, 6}, rng);
  const AnchorSet a = random_anchors(rng, 5, 4);
  Tensor wts(5, 1);
  for (double& v : wts.values) v = unif(rng, -1.0, 1.0);

  Param px("x", a.x), pf("f", a.f);
  {
    Graph g;
    const auto m = mask_scores(g, g.param(px), g.param(pf), nm, true);
    g.backward(g.sum(g.mul(m, g.constant(wts))));
  }
  auto loss = [&] {
    AnchorSet cur{px.value, pf.value, a.l};
    const auto m = mask_scores(cur, nm);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += wts[i] * m[i];
    return s;
  };
  GradCheckStats st;
  for (Param* p : {&px, &pf})
    for (std::size_t i = 0; i < p->value.size(); ++i)
      compare_gradient(st, p->grad[i], central_difference(loss, p->value[i]), "mask input " + p->name);
  for (Param* p : nm.mlp().params())
    for (std::size_t i = 0; i < p->value.size(); ++i)
      compare_gradient(st, p->grad[i], central_difference(loss, p->value[i]), p->name);

  // Straight-through gate: the backward factor is the sigmoid derivative.
  Tensor scores(8, 1);
  for (double& v : scores.values) v = unif(rng, -6.0, 6.0);
  Param ps("score", scores);
  {
    Graph g;
    g.backward(g.sum(g.ste_gate(g.param(ps), 0.01)));
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double x = scores[i];
    const double fd = central_difference([&] { return sigmoid(x); }, x);
    compare_gradient(st, ps.grad[i], fd, "ste_gate", 1e-6, 1e-9);
  }
  return st;
}

GradCheckStats check_btc_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int w = 12, h = 12;
  const Camera cam = test_camera(w, h, 14.0);
  const AttributeNetConfig ncfg{4, 6, 2, 0.12};
  GaussianAttributeNet ng(ncfg, rng);
  MaskNet nm(MaskNetConfig{4, 4}, rng);
  const AnchorSet a = random_anchors(rng, 3, 4);
  const Image gt = random_image(rng, w, h);
  const ObjectiveOptions opt = smooth_objective();

  BtcConfig bcfg;
  bcfg.feature_dim = 4;
  bcfg.hidden = 6;
  BtcPair pair = BtcPair::init(bcfg, rng());
  for (BtcNet* net : {&pair.btc_x, &pair.btc_f})
    for (auto& l : net->layers) {
      l.scale.value[0] = unif(rng, 0.2, 0.6);
      for (double& v : l.bias.value.values) v = unif(rng, -0.3, 0.3);
    }
  const Tensor enc = positional_encoding(a.x);
  {
    Graph g;
    const auto out = btc_forward(g, pair, g.constant(enc), true);
    const auto u = apply_updates(g, g.constant(a.x), g.constant(a.f), out);
    frame_objective(g, u.x, u.f, g.constant(a.l), ng, false, nm, false, cam, gt, opt);
  }
  auto loss = [&] {
    Graph g;
    const auto out = btc_forward(g, pair, g.constant(enc), false);
    const auto u = apply_updates(g, g.constant(a.x), g.constant(a.f), out);
    return frame_objective(g, u.x, u.f, g.constant(a.l), ng, false, nm, false, cam, gt, opt).rendering;
  };
  GradCheckStats st;
  for (BtcNet* net : {&pair.btc_x, &pair.btc_f})
    for (auto& l : net->layers) {
      for (std::size_t i = 0; i < l.bias.value.size(); ++i)
        compare_gradient(st, l.bias.grad[i], central_difference(loss, l.bias.value[i]), l.bias.name);
      compare_gradient(st, l.scale.grad[0], central_difference(loss, l.scale.value[0]), l.scale.name);
    }

  // Relaxed rate: smooth in every latent weight.
  for (Param* p : pair.params()) p->zero_grad();
  const double p_b = unif(rng, 0.1, 0.9);
  const double tau = unif(rng, 0.05, 1.0);
  soft_rate(pair, p_b, tau, 1.0);
  auto rate = [&] { return soft_rate(pair, p_b, tau, 0.0); };
  for (BtcNet* net : {&pair.btc_x, &pair.btc_f})
    for (auto& l : net->layers)
      for (std::size_t i = 0; i < l.latent_w.value.size(); ++i)
        compare_gradient(st, l.latent_w.grad[i], central_difference(rate, l.latent_w.value[i]), "soft_rate latent");
  return st;
}

GradCheckStats check_loss_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int w = 11 + static_cast<int>(rng() % 5), h = 11 + static_cast<int>(rng() % 5);
  Image a = random_image(rng, w, h);
  Image b = random_image(rng, w, h);
  // Keep every pixel away from the L1 kink so the difference quotient is smooth.
  for (std::size_t i = 0; i < b.pixels.size(); ++i)
    if (std::abs(a.pixels[i] - b.pixels[i]) < 1e-3) b.pixels[i] = a.pixels[i] + 0.01;
  const LossWeights lw{unif(rng, 0.05, 0.95), 0.004, 0.01};
  GradCheckStats st;

  Image g_l1, g_ssim, g_r;
  l1_loss(a, b, &g_l1);
  ssim(a, b, &g_ssim);
  rendering_loss(a, b, lw, &g_r);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    compare_gradient(st, g_l1.pixels[i], central_difference([&] { return l1_loss(a, b); }, a.pixels[i]), "l1");
    compare_gradient(st, g_ssim.pixels[i], central_difference([&] { return ssim(a, b); }, a.pixels[i]), "ssim");
    compare_gradient(st, g_r.pixels[i], central_difference([&] { return rendering_loss(a, b, lw); }, a.pixels[i]),
                     "rendering_loss");
  }

  std::vector<double> scores(10);
  for (double& v : scores) v = unif(rng, -5.0, 5.0);
  std::vector<double> gs;
  sparsity_loss(scores, &gs);
  for (std::size_t i = 0; i < scores.size(); ++i)
    compare_gradient(st, gs[i], central_difference([&] { return sparsity_loss(scores); }, scores[i]), "sparsity");

  double r = unif(rng, 0, 1), e = unif(rng, 0, 100), s = unif(rng, 0, 1);
  double le = lw.lambda_e, ls = lw.lambda_s;
  auto total_e = [&] { return total_loss(r, e, s, LossWeights{lw.lambda_ssim, le, ls}); };
  compare_gradient(st, e, central_difference(total_e, le), "total_loss d/d lambda_e");
  compare_gradient(st, s, central_difference(total_e, ls), "total_loss d/d lambda_s");
  compare_gradient(st, 1.0, central_difference(total_e, r), "total_loss d/d L_r");
  return st;
}

}  // namespace solar
