#include "solar/ladar.hpp"

#include <cmath>
#include <random>

#include "solar/errors.hpp"

namespace solar {

void RecalConfig::validate() const {
  if (!(eps_d > 0.0)) throw ConfigError("eps_d must be positive");
  if (!(lr_recal > 0.0)) throw ConfigError("lr_recal must be positive");
}

double grad_norm_btc_f(const BtcPair& pair) {
  const auto params = pair.btc_f.params();
  return grad_norm(params);
}

GradientStatistic update_ema(GradientStatistic stat, double g) {
  if (!(g >= 0.0)) throw Error("gradient norm must be non-negative");
  stat.g_current = g;
  stat.ema = stat.alpha_d * stat.ema + (1.0 - stat.alpha_d) * g;
  ++stat.step;
  return stat;
}

bool should_recalibrate(const GradientStatistic& stat, const RecalConfig& cfg) { return stat.ema > cfg.eps_d; }

double mean_rendering_loss(const AnchorSet& anchors, const GaussianAttributeNet& ng, const MaskNet& nm,
                           std::span<const Camera> cameras, std::span<const Image> images,
                           const ObjectiveOptions& opt) {
  if (cameras.empty() || cameras.size() != images.size()) throw Error("camera/image lists do not match");
  double acc = 0.0;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const Image img = render_state(anchors, ng, nm, opt.gate, opt.eps_m, cameras[i], opt.scene_center, opt.render);
    acc += rendering_loss(img, images[i], opt.weights);
  }
  return acc / static_cast<double>(cameras.size());
}

RecalResult recalibrate(GaussianAttributeNet& ng, const RecalScene& scene, const RecalConfig& cfg, bool measure) {
  RecalResult res;
  if (cfg.t_recal == 0) return res;
  if (!scene.anchors || !scene.nm || scene.cameras.empty()) throw Error("recalibrate: incomplete frame state");

  ObjectiveOptions opt = scene.objective;
  opt.use_sparsity = false;
  if (measure) res.loss_before = mean_rendering_loss(*scene.anchors, ng, *scene.nm, scene.cameras, scene.images, opt);

  GaussianAttributeNet backup = ng;
  GaussianAttributeNet work = ng;
  work.mlp().reset_optimizer();
  MaskNet nm = *scene.nm;
  std::mt19937_64 rng(scene.seed);
  std::uniform_int_distribution<std::size_t> pick(0, scene.cameras.size() - 1);
  const AdamOptions adam{cfg.lr_recal};

  try {
    for (std::size_t step = 0; step < cfg.t_recal; ++step) {
      const std::size_t cam = pick(rng);
      Graph g;
      const auto x = g.constant(scene.anchors->x);
      const auto f = g.constant(scene.anchors->f);
      const auto l = g.constant(scene.anchors->l);
      const auto r = frame_objective(g, x, f, l, work, true, nm, false, scene.cameras[cam], scene.images[cam], opt);
      if (!std::isfinite(r.rendering)) throw NonFiniteError("non-finite recalibration loss", step);
      auto params = work.mlp().params();
      adam_step(params, adam);
      ++res.steps;
    }
  } catch (const NonFiniteError& e) {
    ng = backup;
    res.message = std::string("recalibration aborted: ") + e.what();
    return res;
  }
  work.mlp().reset_optimizer();
  ng = work;
  res.applied = true;
  if (measure) res.loss_after = mean_rendering_loss(*scene.anchors, ng, *scene.nm, scene.cameras, scene.images, opt);
  return res;
}

}  // namespace solar
