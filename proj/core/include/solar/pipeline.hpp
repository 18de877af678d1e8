#pragma once

// Streaming encoder: an I-frame optimisation followed by per-frame BTC
// training with anchor activation and gradient-triggered recalibration.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "solar/anchor_model.hpp"
#include "solar/btc.hpp"
#include "solar/codec.hpp"
#include "solar/ladar.hpp"
#include "solar/render.hpp"

namespace solar {

struct PipelineConfig {
  std::size_t t_btc = 500;
  std::size_t t_iframe = 2000;
  std::size_t t_recal = 200;
  double eps_m = 0.01;
  double eps_d = 0.002;
  double alpha_d = 0.3;
  double lambda_e = 0.004;
  double lambda_s = 0.01;
  double lambda_ssim = 0.2;
  double lr = 5e-3;
  double lr_mask = 5e-4;  // N_m during P-frames
  std::uint64_t seed = 0;
  bool enable_aad = true;
  bool enable_ladar = true;
  std::size_t gop_size = 0;

  std::size_t anchor_count = 256;
  std::size_t feature_dim = 16;
  std::size_t gaussians_per_anchor = 5;
  std::size_t ng_hidden = 64;
  std::size_t nm_hidden = 16;
  std::size_t btc_hidden = 48;
  double scale_base = 0.05;
  double gamma_max = 1.0;
  double layer_scale_floor = 1e-6;

  void validate() const;
  ModelShape shape() const;
  LossWeights weights() const { return LossWeights{lambda_ssim, lambda_e, lambda_s}; }
  /// One "key=value" pair per field, space separated.
  std::string echo() const;
};

/// Field names of PipelineConfig, as used by config files and CLI flags.
std::vector<std::string> config_keys();
/// Sets one field from text; throws ConfigError naming the key on bad input.
void set_config_field(PipelineConfig& cfg, const std::string& key, const std::string& value);
/// Applies "key = value" lines ('#' comments) on top of `base`.
PipelineConfig parse_config_text(const std::string& text, PipelineConfig base, const std::string& source = "config");

/// Multi-view sequence: frames[t][c] is camera c at time t.
struct Sequence {
  std::vector<Camera> cameras;
  std::optional<Camera> heldout;
  std::vector<std::vector<Image>> frames;
  std::vector<Image> heldout_frames;  // empty or one per frame
  Eigen::Vector3d bbox_min = Eigen::Vector3d::Constant(-1.0);
  Eigen::Vector3d bbox_max = Eigen::Vector3d::Constant(1.0);
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d background = Eigen::Vector3d::Zero();

  std::size_t frame_count() const { return frames.size(); }
  void validate() const;
};

struct FrameReport {
  std::uint32_t frame = 0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::uint64_t bytes = 0;
  double grad_ema = 0.0;
  bool recal = false;
  std::size_t active_anchors = 0;
};

struct FrameResult {
  FrameRecord record;
  FrameReport report;
  FrameKind kind = FrameKind::I;
  double final_loss = 0.0;            // training loss at the last step
  std::vector<double> ema_trace;      // G_i per BTC step
  SymbolCounts symbols;
  RecalResult recal;
};

/// Frame-by-frame closed-loop encoder. state() is the decoder-reconstructible
/// state after the last encoded frame.
class StreamEncoder {
 public:
  StreamEncoder(const PipelineConfig& cfg, const Sequence& seq);

  FrameResult encode_frame(std::size_t t);
  const DecodedState& state() const { return state_; }
  /// Mutable access for experiments that perturb the carried state.
  DecodedState& mutable_state() { return state_; }
  const StreamHeader& header() const { return header_; }
  Bitstream bitstream() const { return Bitstream{header_, records_}; }
  ObjectiveOptions objective() const;

 private:
  FrameResult train_iframe(std::size_t t);
  FrameResult train_pframe(std::size_t t);
  FrameReport evaluate(std::size_t t, const FrameRecord& rec, double ema) const;

  PipelineConfig cfg_;
  const Sequence& seq_;
  StreamHeader header_;
  DecodedState state_;
  std::vector<FrameRecord> records_;
  std::optional<MaskNet> nm_optimizer_;  // encoder-side Adam moments of N_m
};

struct EncodeResult {
  Bitstream bitstream;
  std::vector<FrameReport> reports;
};

EncodeResult stream_encode(const Sequence& seq, const PipelineConfig& cfg);

/// Decodes every frame and renders it from `cam`.
std::vector<Image> stream_decode(const Bitstream& bs, const Camera& cam);

StreamHeader make_header(const PipelineConfig& cfg, const Sequence& seq);

/// Per-frame seed derived from (sequence seed, frame, purpose).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t frame, std::uint64_t purpose);

/// Jittered grid of `n` anchor positions inside the box; deterministic in rng.
Tensor jittered_grid(std::size_t n, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, std::mt19937_64& rng);

}  // namespace solar
