#pragma once

// Latent-discrepancy-aware recalibration: an exponential moving average of
// the BTC_f gradient norm decides, once per frame, whether the attribute
// network is fine-tuned on the current frame with anchors frozen.

#include <cstdint>
#include <span>
#include <string>

#include "solar/anchor_model.hpp"
#include "solar/btc.hpp"
#include "solar/objective.hpp"

namespace solar {

struct GradientStatistic {
  double g_current = 0.0;
  double ema = 0.0;
  double alpha_d = 0.3;
  std::uint64_t step = 0;
};

struct RecalConfig {
  double eps_d = 0.002;
  std::size_t t_recal = 200;
  double lr_recal = 5e-3;

  void validate() const;
};

/// L2 norm over all BTC_f latent-weight, bias and scale gradients.
double grad_norm_btc_f(const BtcPair& pair);

/// ema' = alpha_d * ema + (1 - alpha_d) * g.
GradientStatistic update_ema(GradientStatistic stat, double g);

/// Strictly greater than the threshold.
bool should_recalibrate(const GradientStatistic& stat, const RecalConfig& cfg);

struct RecalScene {
  const AnchorSet* anchors = nullptr;
  const MaskNet* nm = nullptr;
  std::span<const Camera> cameras;
  std::span<const Image> images;
  ObjectiveOptions objective;  // sparsity is ignored: recalibration minimises L_r only
  std::uint64_t seed = 0;
};

struct RecalResult {
  bool applied = false;
  std::size_t steps = 0;
  double loss_before = 0.0;  // mean L_r over all cameras (only when measured)
  double loss_after = 0.0;
  std::string message;
};

/// Fine-tunes `ng` in place for cfg.t_recal steps with fresh Adam state. On a
/// non-finite loss the original network is restored and applied == false.
RecalResult recalibrate(GaussianAttributeNet& ng, const RecalScene& scene, const RecalConfig& cfg,
                        bool measure = false);

/// Mean L_r of a committed state over a set of views.
double mean_rendering_loss(const AnchorSet& anchors, const GaussianAttributeNet& ng, const MaskNet& nm,
                           std::span<const Camera> cameras, std::span<const Image> images,
                           const ObjectiveOptions& opt);

}  // namespace solar
