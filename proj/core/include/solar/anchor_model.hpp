#pragma once

// Dynamic-anchor scene representation. Each anchor (position x, latent
// feature f, scaling l) decodes into k Gaussians through the attribute
// network; the mask network scores anchors for activation gating.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "solar/autodiff.hpp"
#include "solar/mlp.hpp"
#include "solar/render.hpp"

namespace solar {

/// Structure-of-arrays anchor storage; row i of every tensor is anchor i.
struct AnchorSet {
  Tensor x;  // N x 3
  Tensor f;  // N x D
  Tensor l;  // N x 3, strictly positive

  std::size_t size() const { return x.rows; }
  std::size_t feature_dim() const { return f.cols; }
  void validate() const;
  bool operator==(const AnchorSet& o) const {
    return x.values == o.x.values && f.values == o.f.values && l.values == o.l.values && f.cols == o.f.cols;
  }
};

/// Per-Gaussian raw output layout of the attribute network.
inline constexpr std::size_t kOffsetCols = 3;
inline constexpr std::size_t kColorCols = 3;
inline constexpr std::size_t kRotationCols = 4;
inline constexpr std::size_t kScaleCols = 3;
inline constexpr std::size_t kAttributeCols = kOffsetCols + kColorCols + kRotationCols + kScaleCols + 1;

struct AttributeNetConfig {
  std::size_t feature_dim = 16;
  std::size_t hidden = 64;
  std::size_t gaussians_per_anchor = 5;
  double scale_base = 0.05;
};

/// N_G: (f, d_c) -> k x (offset, colour, rotation, scale, opacity).
class GaussianAttributeNet {
 public:
  GaussianAttributeNet() = default;
  GaussianAttributeNet(const AttributeNetConfig& cfg, std::mt19937_64& rng);

  const AttributeNetConfig& config() const { return cfg_; }
  Mlp& mlp() { return mlp_; }
  const Mlp& mlp() const { return mlp_; }
  std::size_t byte_size() const { return mlp_.parameter_count() * 4; }

 private:
  AttributeNetConfig cfg_;
  Mlp mlp_;
};

struct MaskNetConfig {
  std::size_t feature_dim = 16;
  std::size_t hidden = 16;
};

/// N_m: (f, x) -> scalar significance score m_x.
class MaskNet {
 public:
  MaskNet() = default;
  MaskNet(const MaskNetConfig& cfg, std::mt19937_64& rng);

  const MaskNetConfig& config() const { return cfg_; }
  Mlp& mlp() { return mlp_; }
  const Mlp& mlp() const { return mlp_; }
  std::size_t byte_size() const { return mlp_.parameter_count() * 4; }

 private:
  MaskNetConfig cfg_;
  Mlp mlp_;
};

/// Decoded Gaussian attributes as graph nodes, (N*k) rows each, ordered
/// anchor-major then offset index.
struct DecodedNodes {
  Graph::Node mu, s, r, c, alpha;
};

/// Unit vector from the scene centroid toward the camera centre.
Eigen::Vector3d view_direction(const Camera& cam, const Eigen::Vector3d& scene_center);

DecodedNodes decode_anchors(Graph& g, Graph::Node x, Graph::Node f, Graph::Node l, GaussianAttributeNet& ng,
                            bool trainable, const Eigen::Vector3d& d_c);
std::vector<GaussianPrimitive> decode_anchors(const AnchorSet& anchors, const GaussianAttributeNet& ng,
                                              const Eigen::Vector3d& d_c);

Graph::Node mask_scores(Graph& g, Graph::Node x, Graph::Node f, MaskNet& nm, bool trainable);
std::vector<double> mask_scores(const AnchorSet& anchors, const MaskNet& nm);

/// Straight-through gating of scale and opacity. Returns the gated nodes and
/// the per-anchor gate node (N x 1) in `gate`.
DecodedNodes gate_attributes(Graph& g, const DecodedNodes& d, Graph::Node scores, double eps_m,
                             std::size_t gaussians_per_anchor, Graph::Node* gate = nullptr);
std::vector<GaussianPrimitive> gate_attributes(std::vector<GaussianPrimitive> gaussians,
                                               std::span<const double> scores, double eps_m);

struct ActivationPartition {
  std::vector<std::size_t> active;
  std::vector<std::size_t> vanished;
};

ActivationPartition partition(std::span<const double> scores, double eps_m);

/// Deep copy with fresh optimizer state.
MaskNet warm_start_mask(const MaskNet& prev);

/// Converts graph node values into render-ready primitives.
std::vector<GaussianPrimitive> to_primitives(const Graph& g, const DecodedNodes& d);

}  // namespace solar
