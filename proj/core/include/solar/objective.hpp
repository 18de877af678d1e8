#pragma once

#include <Eigen/Core>

#include "solar/anchor_model.hpp"
#include "solar/autodiff.hpp"
#include "solar/losses.hpp"
#include "solar/render.hpp"

namespace solar {

struct ObjectiveOptions {
  bool gate = true;           // anchor activation gating on/off
  bool use_sparsity = true;   // add lambda_s * L_s (only meaningful with gate)
  double eps_m = 0.01;
  LossWeights weights;
  RenderOptions render;
  Eigen::Vector3d scene_center = Eigen::Vector3d::Zero();
};

struct ObjectiveResult {
  double rendering = 0.0;
  double sparsity = 0.0;
  std::size_t active = 0;
  Image image;
};

/// Records decode, mask, gate and render on top of the anchor nodes, evaluates
/// the rendering (and sparsity) loss against `gt`, and back-propagates into
/// every trainable parameter bound on `g`.
///
/// Gated-off anchors are rendered with zero opacity; when the mask network is
/// trainable their straight-through gradient is the derivative of the loss
/// w.r.t. opacity at zero, evaluated on their ungated footprint.
ObjectiveResult frame_objective(Graph& g, Graph::Node x, Graph::Node f, Graph::Node l, GaussianAttributeNet& ng,
                                bool ng_trainable, MaskNet& nm, bool nm_trainable, const Camera& cam,
                                const Image& gt, const ObjectiveOptions& opt);

/// Forward-only render of a committed state from an arbitrary camera.
Image render_state(const AnchorSet& anchors, const GaussianAttributeNet& ng, const MaskNet& nm, bool gate,
                   double eps_m, const Camera& cam, const Eigen::Vector3d& scene_center,
                   const RenderOptions& ropt = {});

}  // namespace solar
