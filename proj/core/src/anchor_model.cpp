#include "solar/anchor_model.hpp"

#include <cmath>

#include "solar/errors.hpp"

namespace solar {

void AnchorSet::validate() const {
  if (x.cols != 3 || l.cols != 3 || f.rows != x.rows || l.rows != x.rows)
    throw ShapeError("anchor set tensors are inconsistent");
  for (double v : l.values)
    if (!(v > 0.0)) throw Error("anchor scaling must be positive");
  if (!x.all_finite() || !f.all_finite()) throw NonFiniteError("anchor state is not finite", 0);
}

GaussianAttributeNet::GaussianAttributeNet(const AttributeNetConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg),
      mlp_({cfg.feature_dim + 3, cfg.hidden, cfg.hidden, cfg.gaussians_per_anchor * kAttributeCols}, rng, "ng") {
  // Rotation heads start at the identity quaternion.
  Tensor& bias = mlp_.layers().back().bias.value;
  for (std::size_t k = 0; k < cfg.gaussians_per_anchor; ++k)
    bias[k * kAttributeCols + kOffsetCols + kColorCols] = 1.0;
}

MaskNet::MaskNet(const MaskNetConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg), mlp_({cfg.feature_dim + 3, cfg.hidden, 1}, rng, "nm") {}

Eigen::Vector3d view_direction(const Camera& cam, const Eigen::Vector3d& scene_center) {
  const Eigen::Vector3d d = cam.center() - scene_center;
  const double n = d.norm();
  if (n < 1e-12) throw ConfigError("camera centre coincides with the scene centre");
  return d / n;
}

DecodedNodes decode_anchors(Graph& g, Graph::Node x, Graph::Node f, Graph::Node l, GaussianAttributeNet& ng,
                            bool trainable, const Eigen::Vector3d& d_c) {
  const std::size_t n = g.value(x).rows;
  const std::size_t k = ng.config().gaussians_per_anchor;
  Tensor dir(n, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) dir(i, j) = d_c[j];
  const auto input = g.concat_cols(f, g.constant(std::move(dir)));
  const auto raw = g.reshape(ng.mlp().forward(g, input, trainable), n * k, kAttributeCols);

  std::size_t col = 0;
  const auto offset = g.slice_cols(raw, col, col + kOffsetCols);
  col += kOffsetCols;
  const auto color = g.sigmoid(g.slice_cols(raw, col, col + kColorCols));
  col += kColorCols;
  const auto rot = g.normalize_rows(g.slice_cols(raw, col, col + kRotationCols));
  col += kRotationCols;
  const auto scale = g.scale(g.softplus(g.slice_cols(raw, col, col + kScaleCols)), ng.config().scale_base);
  col += kScaleCols;
  const auto alpha = g.sigmoid(g.slice_cols(raw, col, col + 1));

  const auto mu = g.add(g.repeat_rows(x, k), g.mul(offset, g.repeat_rows(l, k)));
  return DecodedNodes{mu, scale, rot, color, alpha};
}

std::vector<GaussianPrimitive> to_primitives(const Graph& g, const DecodedNodes& d) {
  const Tensor& mu = g.value(d.mu);
  const Tensor& s = g.value(d.s);
  const Tensor& r = g.value(d.r);
  const Tensor& c = g.value(d.c);
  const Tensor& a = g.value(d.alpha);
  std::vector<GaussianPrimitive> out(mu.rows);
  for (std::size_t i = 0; i < mu.rows; ++i) {
    auto& gp = out[i];
    gp.mu = Eigen::Vector3d(mu(i, 0), mu(i, 1), mu(i, 2));
    gp.s = Eigen::Vector3d(s(i, 0), s(i, 1), s(i, 2));
    gp.r = Eigen::Vector4d(r(i, 0), r(i, 1), r(i, 2), r(i, 3));
    gp.c = Eigen::Vector3d(c(i, 0), c(i, 1), c(i, 2));
    gp.alpha = a(i, 0);
  }
  return out;
}

std::vector<GaussianPrimitive> decode_anchors(const AnchorSet& anchors, const GaussianAttributeNet& ng,
                                              const Eigen::Vector3d& d_c) {
  if (std::abs(d_c.norm() - 1.0) > 1e-9) throw ConfigError("view direction must be unit length");
  Graph g;
  GaussianAttributeNet copy = ng;
  const auto d = decode_anchors(g, g.constant(anchors.x), g.constant(anchors.f), g.constant(anchors.l), copy, false,
                                d_c);
  return to_primitives(g, d);
}

Graph::Node mask_scores(Graph& g, Graph::Node x, Graph::Node f, MaskNet& nm, bool trainable) {
  return nm.mlp().forward(g, g.concat_cols(f, x), trainable);
}

std::vector<double> mask_scores(const AnchorSet& anchors, const MaskNet& nm) {
  Graph g;
  MaskNet copy = nm;
  const auto m = mask_scores(g, g.constant(anchors.x), g.constant(anchors.f), copy, false);
  return g.value(m).values;
}

DecodedNodes gate_attributes(Graph& g, const DecodedNodes& d, Graph::Node scores, double eps_m,
                             std::size_t gaussians_per_anchor, Graph::Node* gate) {
  const auto m = g.ste_gate(scores, eps_m);
  if (gate) *gate = m;
  const auto rep = g.repeat_rows(m, gaussians_per_anchor);
  DecodedNodes out = d;
  out.s = g.mul(d.s, rep);
  out.alpha = g.mul(d.alpha, rep);
  return out;
}

std::vector<GaussianPrimitive> gate_attributes(std::vector<GaussianPrimitive> gaussians,
                                               std::span<const double> scores, double eps_m) {
  if (scores.empty() || gaussians.size() % scores.size() != 0)
    throw ShapeError("gate_attributes: gaussians are not aligned with anchor scores");
  const std::size_t k = gaussians.size() / scores.size();
  for (std::size_t a = 0; a < scores.size(); ++a) {
    const double m = sigmoid(scores[a]) > eps_m ? 1.0 : 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      auto& gp = gaussians[a * k + j];
      gp.s *= m;
      gp.alpha *= m;
    }
  }
  return gaussians;
}

ActivationPartition partition(std::span<const double> scores, double eps_m) {
  ActivationPartition p;
  for (std::size_t i = 0; i < scores.size(); ++i) (sigmoid(scores[i]) > eps_m ? p.active : p.vanished).push_back(i);
  return p;
}

MaskNet warm_start_mask(const MaskNet& prev) {
  MaskNet next = prev;
  next.mlp().reset_optimizer();
  return next;
}

}  // namespace solar
