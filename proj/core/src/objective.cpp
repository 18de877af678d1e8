#include "solar/objective.hpp"

namespace solar {

ObjectiveResult frame_objective(Graph& g, Graph::Node x, Graph::Node f, Graph::Node l, GaussianAttributeNet& ng,
                                bool ng_trainable, MaskNet& nm, bool nm_trainable, const Camera& cam,
                                const Image& gt, const ObjectiveOptions& opt) {
  const std::size_t k = ng.config().gaussians_per_anchor;
  const std::size_t n = g.value(x).rows;
  const DecodedNodes decoded = decode_anchors(g, x, f, l, ng, ng_trainable, view_direction(cam, opt.scene_center));

  DecodedNodes shown = decoded;
  Graph::Node scores = 0, gate = 0;
  if (opt.gate) {
    scores = mask_scores(g, x, f, nm, nm_trainable);
    shown = gate_attributes(g, decoded, scores, opt.eps_m, k, &gate);
  }

  const auto prims = to_primitives(g, shown);
  RenderCache cache;
  ObjectiveResult res;
  res.image = render(prims, cam, opt.render, &cache);
  Image dimg;
  res.rendering = rendering_loss(res.image, gt, opt.weights, &dimg);

  // Gated-off anchors act as opacity probes for the mask gradient.
  std::vector<GaussianPrimitive> probes;
  std::vector<std::size_t> probe_rows;
  if (opt.gate) {
    const Tensor& m = g.value(gate);
    std::vector<GaussianPrimitive> ungated;
    for (std::size_t a = 0; a < n; ++a) {
      if (m[a] > 0.0) {
        ++res.active;
        continue;
      }
      if (!nm_trainable) continue;
      if (ungated.empty()) ungated = to_primitives(g, decoded);
      for (std::size_t j = 0; j < k; ++j) {
        probes.push_back(ungated[a * k + j]);
        probe_rows.push_back(a * k + j);
      }
    }
  } else {
    res.active = n;
  }

  std::vector<double> probe_grad;
  const auto grads = render_backward(prims, cam, cache, dimg, opt.render, probes, &probe_grad);

  const std::size_t rows = prims.size();
  Tensor d_mu(rows, 3), d_s(rows, 3), d_r(rows, 4), d_c(rows, 3), d_a(rows, 1);
  for (std::size_t i = 0; i < rows; ++i) {
    for (int j = 0; j < 3; ++j) {
      d_mu(i, j) = grads[i].mu[j];
      d_s(i, j) = grads[i].s[j];
      d_c(i, j) = grads[i].c[j];
    }
    for (int j = 0; j < 4; ++j) d_r(i, j) = grads[i].r[j];
    d_a(i, 0) = grads[i].alpha;
  }
  for (std::size_t p = 0; p < probe_rows.size(); ++p) d_a(probe_rows[p], 0) = probe_grad[p];

  std::vector<Graph::Seed> seeds;
  seeds.push_back({shown.mu, std::move(d_mu)});
  seeds.push_back({shown.s, std::move(d_s)});
  seeds.push_back({shown.r, std::move(d_r)});
  seeds.push_back({shown.c, std::move(d_c)});
  seeds.push_back({shown.alpha, std::move(d_a)});

  if (opt.gate && opt.use_sparsity) {
    std::vector<double> ds;
    res.sparsity = sparsity_loss(g.value(scores).values, &ds);
    Tensor seed(n, 1);
    for (std::size_t a = 0; a < n; ++a) seed[a] = opt.weights.lambda_s * ds[a];
    seeds.push_back({scores, std::move(seed)});
  }
  g.backward(seeds);
  return res;
}

Image render_state(const AnchorSet& anchors, const GaussianAttributeNet& ng, const MaskNet& nm, bool gate,
                   double eps_m, const Camera& cam, const Eigen::Vector3d& scene_center, const RenderOptions& ropt) {
  auto prims = decode_anchors(anchors, ng, view_direction(cam, scene_center));
  if (gate) prims = gate_attributes(std::move(prims), mask_scores(anchors, nm), eps_m);
  return render(prims, cam, ropt);
}

}  // namespace solar
