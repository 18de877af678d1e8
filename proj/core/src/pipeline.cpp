#include "solar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <type_traits>

#include "solar/errors.hpp"
#include "solar/losses.hpp"
#include "solar/objective.hpp"

namespace solar {

namespace {

enum Purpose : std::uint64_t { kInit = 1, kCameras = 2, kRecal = 3, kBtc = 4 };

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<Param*> concat(std::vector<Param*> a, const std::vector<Param*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t frame, std::uint64_t purpose) {
  return splitmix(splitmix(splitmix(seed) ^ frame) ^ purpose);
}

void PipelineConfig::validate() const {
  if (!(eps_m > 0.0 && eps_m < 0.5)) throw ConfigError("eps_m must lie in (0, 0.5)");
  if (!(eps_d > 0.0)) throw ConfigError("eps_d must be positive");
  if (!(alpha_d >= 0.0 && alpha_d < 1.0)) throw ConfigError("alpha_d must lie in [0, 1)");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(lr_mask > 0.0)) throw ConfigError("lr_mask must be positive");
  if (!(scale_base > 0.0) || !(gamma_max > 0.0)) throw ConfigError("scale_base and gamma_max must be positive");
  if (!(layer_scale_floor > 0.0)) throw ConfigError("layer_scale_floor must be positive");
  if (anchor_count == 0 || feature_dim == 0 || gaussians_per_anchor == 0 || ng_hidden == 0 || nm_hidden == 0 ||
      btc_hidden == 0)
    throw ConfigError("model dimensions must be positive");
  weights().validate();
}

ModelShape PipelineConfig::shape() const {
  return ModelShape{feature_dim, gaussians_per_anchor, ng_hidden, nm_hidden, btc_hidden, scale_base, gamma_max};
}

std::string PipelineConfig::echo() const {
  std::ostringstream o;
  o.precision(17);
  o << "t_btc=" << t_btc << " t_iframe=" << t_iframe << " t_recal=" << t_recal << " eps_m=" << eps_m
    << " eps_d=" << eps_d << " alpha_d=" << alpha_d << " lambda_e=" << lambda_e << " lambda_s=" << lambda_s
    << " lambda_ssim=" << lambda_ssim << " lr=" << lr << " lr_mask=" << lr_mask << " seed=" << seed << " enable_aad=" << enable_aad
    << " enable_ladar=" << enable_ladar << " gop_size=" << gop_size << " anchor_count=" << anchor_count
    << " feature_dim=" << feature_dim << " gaussians_per_anchor=" << gaussians_per_anchor
    << " ng_hidden=" << ng_hidden << " nm_hidden=" << nm_hidden << " btc_hidden=" << btc_hidden
    << " scale_base=" << scale_base << " gamma_max=" << gamma_max << " layer_scale_floor=" << layer_scale_floor;
  return o.str();
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    if constexpr (std::is_floating_point_v<T>) {
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } else {
      if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
      const unsigned long long v = std::stoull(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return static_cast<T>(v);
    }
  } catch (const std::exception&) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  throw ConfigError("invalid boolean '" + value + "' for " + key);
}

}  // namespace

std::vector<std::string> config_keys() {
  return {"t_btc",       "t_iframe",     "t_recal",     "eps_m",        "eps_d",
          "alpha_d",     "lambda_e",     "lambda_s",    "lambda_ssim",  "lr", "lr_mask",
          "seed",        "enable_aad",   "enable_ladar", "gop_size",    "anchor_count",
          "feature_dim", "gaussians_per_anchor", "ng_hidden", "nm_hidden", "btc_hidden",
          "scale_base",  "gamma_max",    "layer_scale_floor"};
}

void set_config_field(PipelineConfig& c, const std::string& k, const std::string& v) {
  using Z = std::size_t;
  if (k == "t_btc") c.t_btc = parse_number<Z>(k, v);
  else if (k == "t_iframe") c.t_iframe = parse_number<Z>(k, v);
  else if (k == "t_recal") c.t_recal = parse_number<Z>(k, v);
  else if (k == "eps_m") c.eps_m = parse_number<double>(k, v);
  else if (k == "eps_d") c.eps_d = parse_number<double>(k, v);
  else if (k == "alpha_d") c.alpha_d = parse_number<double>(k, v);
  else if (k == "lambda_e") c.lambda_e = parse_number<double>(k, v);
  else if (k == "lambda_s") c.lambda_s = parse_number<double>(k, v);
  else if (k == "lambda_ssim") c.lambda_ssim = parse_number<double>(k, v);
  else if (k == "lr") c.lr = parse_number<double>(k, v);
  else if (k == "lr_mask") c.lr_mask = parse_number<double>(k, v);
  else if (k == "seed") c.seed = parse_number<std::uint64_t>(k, v);
  else if (k == "enable_aad") c.enable_aad = parse_bool(k, v);
  else if (k == "enable_ladar") c.enable_ladar = parse_bool(k, v);
  else if (k == "gop_size") c.gop_size = parse_number<Z>(k, v);
  else if (k == "anchor_count") c.anchor_count = parse_number<Z>(k, v);
  else if (k == "feature_dim") c.feature_dim = parse_number<Z>(k, v);
  else if (k == "gaussians_per_anchor") c.gaussians_per_anchor = parse_number<Z>(k, v);
  else if (k == "ng_hidden") c.ng_hidden = parse_number<Z>(k, v);
  else if (k == "nm_hidden") c.nm_hidden = parse_number<Z>(k, v);
  else if (k == "btc_hidden") c.btc_hidden = parse_number<Z>(k, v);
  else if (k == "scale_base") c.scale_base = parse_number<double>(k, v);
  else if (k == "gamma_max") c.gamma_max = parse_number<double>(k, v);
  else if (k == "layer_scale_floor") c.layer_scale_floor = parse_number<double>(k, v);
  else throw ConfigError("unknown config key '" + k + "'");
}

PipelineConfig parse_config_text(const std::string& text, PipelineConfig base, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    try {
      set_config_field(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return base;
}

void Sequence::validate() const {
  if (cameras.empty()) throw ConfigError("sequence has no training cameras");
  if (frames.empty()) throw ConfigError("sequence has no frames");
  for (const auto& c : cameras) c.validate();
  if (heldout) heldout->validate();
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != cameras.size())
      throw ConfigError("frame " + std::to_string(t) + " does not have one image per camera");
    for (std::size_t c = 0; c < cameras.size(); ++c)
      if (frames[t][c].width != cameras[c].width || frames[t][c].height != cameras[c].height)
        throw ConfigError("frame " + std::to_string(t) + " camera " + std::to_string(c) + ": resolution mismatch");
  }
  if (!heldout_frames.empty()) {
    if (!heldout) throw ConfigError("held-out images without a held-out camera");
    if (heldout_frames.size() != frames.size()) throw ConfigError("held-out image count differs from frame count");
  }
  if ((bbox_max - bbox_min).minCoeff() < 0.0) throw ConfigError("scene bounding box is inverted");
}

Tensor jittered_grid(std::size_t n, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, std::mt19937_64& rng) {
  std::size_t g = 1;
  while (g * g * g < n) ++g;
  std::vector<std::size_t> cells(g * g * g);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  // Fisher-Yates with an explicit draw so the order is library independent.
  for (std::size_t i = cells.size(); i > 1; --i) std::swap(cells[i - 1], cells[rng() % i]);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Vector3d cell = (hi - lo) / static_cast<double>(g);
  Tensor x(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = cells[i];
    const std::size_t idx[3] = {c % g, (c / g) % g, c / (g * g)};
    for (int a = 0; a < 3; ++a) x(i, a) = lo[a] + (static_cast<double>(idx[a]) + u(rng)) * cell[a];
  }
  return x;
}

StreamHeader make_header(const PipelineConfig& cfg, const Sequence& seq) {
  StreamHeader h;
  h.shape = cfg.shape();
  h.eps_m = cfg.eps_m;
  h.eps_d = cfg.eps_d;
  h.lambda_ssim = cfg.lambda_ssim;
  h.lambda_e = cfg.lambda_e;
  h.lambda_s = cfg.lambda_s;
  h.enable_aad = cfg.enable_aad;
  h.enable_ladar = cfg.enable_ladar;
  h.gop_size = static_cast<std::uint32_t>(cfg.gop_size);
  h.seed = cfg.seed;
  h.scene_center = seq.center;
  h.background = seq.background;
  h.cameras = seq.cameras;
  h.heldout = seq.heldout;
  return h;
}

StreamEncoder::StreamEncoder(const PipelineConfig& cfg, const Sequence& seq) : cfg_(cfg), seq_(seq) {
  cfg_.validate();
  seq_.validate();
  header_ = make_header(cfg_, seq_);
}

ObjectiveOptions StreamEncoder::objective() const {
  ObjectiveOptions o;
  o.gate = cfg_.enable_aad;
  o.use_sparsity = cfg_.enable_aad;
  o.eps_m = cfg_.eps_m;
  o.weights = cfg_.weights();
  o.render.background = seq_.background;
  o.scene_center = seq_.center;
  return o;
}

FrameResult StreamEncoder::encode_frame(std::size_t t) {
  if (t >= seq_.frame_count()) throw Error("frame index beyond the sequence");
  if (static_cast<std::int64_t>(t) != state_.frame + 1) throw Error("frames must be encoded in order");
  const bool iframe = t == 0 || (cfg_.gop_size > 0 && t % cfg_.gop_size == 0);
  FrameResult res = iframe ? train_iframe(t) : train_pframe(t);
  state_ = decode_frame(res.record, state_, header_.shape);
  res.report = evaluate(t, res.record, res.kind == FrameKind::P ? res.ema_trace.back() : 0.0);
  records_.push_back(res.record);
  return res;
}

FrameResult StreamEncoder::train_iframe(std::size_t t) {
  std::mt19937_64 rng(derive_seed(cfg_.seed, t, kInit));
  const std::size_t n = cfg_.anchor_count, d = cfg_.feature_dim;
  std::size_t g = 1;
  while (g * g * g < n) ++g;

  Param px("x", jittered_grid(n, seq_.bbox_min, seq_.bbox_max, rng));
  Tensor f0(n, d);
  std::normal_distribution<double> nf(0.0, 0.1);
  for (double& v : f0.values) v = nf(rng);
  Param pf("f", std::move(f0));
  Tensor l0(n, 3);
  const Eigen::Vector3d cell = (seq_.bbox_max - seq_.bbox_min) / static_cast<double>(g);
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) l0(i, a) = std::log(std::max(cell[a], 1e-3));
  Param pl("log_l", std::move(l0));
  GaussianAttributeNet ng(cfg_.shape().ng_config(), rng);
  MaskNet nm(cfg_.shape().nm_config(), rng);

  const ObjectiveOptions opt = objective();
  const AdamOptions adam{cfg_.lr};
  std::mt19937_64 cam_rng(derive_seed(cfg_.seed, t, kCameras));
  std::uniform_int_distribution<std::size_t> pick(0, seq_.cameras.size() - 1);

  FrameResult res;
  res.kind = FrameKind::I;
  for (std::size_t step = 0; step < cfg_.t_iframe; ++step) {
    const std::size_t c = pick(cam_rng);
    Graph gr;
    const auto x = gr.param(px);
    const auto f = gr.param(pf);
    const auto l = gr.exp(gr.param(pl));
    ObjectiveResult r;
    try {
      r = frame_objective(gr, x, f, l, ng, true, nm, cfg_.enable_aad, seq_.cameras[c], seq_.frames[t][c], opt);
    } catch (const NonFiniteError& e) {
      throw Error("I-frame " + std::to_string(t) + " diverged at step " + std::to_string(step) +
                  " (seed=" + std::to_string(cfg_.seed) + "): " + e.what());
    }
    auto params = concat({&px, &pf, &pl}, ng.mlp().params());
    if (cfg_.enable_aad) params = concat(params, nm.mlp().params());
    adam_step(params, adam);
    res.final_loss = r.rendering + (opt.use_sparsity ? cfg_.lambda_s * r.sparsity : 0.0);
  }

  AnchorSet anchors{px.value, pf.value, pl.value};
  for (double& v : anchors.l.values) v = std::exp(v);
  nm_optimizer_ = nm;
  res.record = encode_iframe(anchors, ng, nm, static_cast<std::uint32_t>(t));
  return res;
}

FrameResult StreamEncoder::train_pframe(std::size_t t) {
  const DecodedState& prev = state_;
  const ModelShape shape = cfg_.shape();
  BtcPair pair = BtcPair::init(shape.btc_config(), derive_seed(cfg_.seed, t, kBtc));
  MaskNet nm = warm_start_mask(prev.nm);
  if (nm_optimizer_) {
    auto dst = nm.mlp().params();
    auto src = nm_optimizer_->mlp().params();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i]->adam_m = src[i]->adam_m;
      dst[i]->adam_v = src[i]->adam_v;
      dst[i]->step_count = src[i]->step_count;
    }
  }
  GaussianAttributeNet ng = prev.ng;
  GradientStatistic stat;
  stat.alpha_d = cfg_.alpha_d;

  const ObjectiveOptions opt = objective();
  const AdamOptions adam{cfg_.lr};
  const Tensor enc = positional_encoding(prev.anchors.x);
  std::mt19937_64 cam_rng(derive_seed(cfg_.seed, t, kCameras));
  std::uniform_int_distribution<std::size_t> pick(0, seq_.cameras.size() - 1);

  FrameResult res;
  res.kind = FrameKind::P;
  const std::size_t steps = std::max<std::size_t>(cfg_.t_btc, 1);
  for (std::size_t step = 0; step < cfg_.t_btc; ++step) {
    const double frac = steps > 1 ? static_cast<double>(step) / static_cast<double>(steps - 1) : 1.0;
    const double tau = 1.0 + (1e-2 - 1.0) * frac;
    const std::size_t c = pick(cam_rng);
    try {
      Graph g;
      const auto out = btc_forward(g, pair, g.constant(enc), true);
      const auto upd = apply_updates(g, g.constant(prev.anchors.x), g.constant(prev.anchors.f), out);
      const auto l = g.constant(prev.anchors.l);
      const ObjectiveResult r =
          frame_objective(g, upd.x, upd.f, l, ng, false, nm, cfg_.enable_aad, seq_.cameras[c], seq_.frames[t][c], opt);
      // The statistic tracks the distortion-side gradient, measured before the
      // rate term is added to the latent gradients.
      stat = update_ema(stat, grad_norm_btc_f(pair));
      res.ema_trace.push_back(stat.ema);
      const double p_b = empirical_p_plus(count_symbols(pair));
      const double rate = soft_rate(pair, p_b, tau, cfg_.lambda_e);
      res.final_loss = total_loss(r.rendering, rate, opt.use_sparsity ? r.sparsity : 0.0, opt.weights);
      if (!std::isfinite(res.final_loss)) throw NonFiniteError("non-finite loss", step);
    } catch (const NonFiniteError& e) {
      throw Error("frame " + std::to_string(t) + ": training diverged at step " + std::to_string(step) + " (seed=" +
                  std::to_string(cfg_.seed) + "): " + e.what());
    }
    adam_step(pair.params(), adam);
    if (cfg_.enable_aad) adam_step(nm.mlp().params(), AdamOptions{cfg_.lr_mask});
    for (BtcNet* net : {&pair.btc_x, &pair.btc_f})
      for (auto& layer : net->layers)
        layer.scale.value[0] = std::max(layer.scale.value[0], cfg_.layer_scale_floor);
  }
  if (res.ema_trace.empty()) res.ema_trace.push_back(0.0);
  stat.ema = res.ema_trace.back();
  res.symbols = count_symbols(pair);

  if (cfg_.enable_aad) nm_optimizer_ = nm;
  PFramePayload payload = make_pframe_payload(pair, nm, nullptr);
  if (cfg_.enable_ladar && should_recalibrate(stat, RecalConfig{cfg_.eps_d, cfg_.t_recal, cfg_.lr})) {
    const DecodedState committed = apply_pframe(prev, payload, shape);
    GaussianAttributeNet tuned = committed.ng;
    RecalScene scene;
    scene.anchors = &committed.anchors;
    scene.nm = &committed.nm;
    scene.cameras = seq_.cameras;
    scene.images = seq_.frames[t];
    scene.objective = opt;
    scene.seed = derive_seed(cfg_.seed, t, kRecal);
    res.recal = recalibrate(tuned, scene, RecalConfig{cfg_.eps_d, cfg_.t_recal, cfg_.lr});
    if (res.recal.applied) {
      round_to_float(tuned.mlp());
      payload.ng = tuned.mlp().flatten();
    }
  }
  res.record = encode_pframe(payload, static_cast<std::uint32_t>(t));
  return res;
}

FrameReport StreamEncoder::evaluate(std::size_t t, const FrameRecord& rec, double ema) const {
  FrameReport rep;
  rep.frame = static_cast<std::uint32_t>(t);
  rep.bytes = measure_rate(rec);
  rep.grad_ema = ema;
  rep.recal = state_.recalibrated;
  rep.active_anchors = cfg_.enable_aad
                           ? partition(mask_scores(state_.anchors, state_.nm), cfg_.eps_m).active.size()
                           : state_.anchors.size();
  const bool use_heldout = seq_.heldout && !seq_.heldout_frames.empty();
  const Camera& cam = use_heldout ? *seq_.heldout : seq_.cameras.front();
  const Image& gt = use_heldout ? seq_.heldout_frames[t] : seq_.frames[t].front();
  RenderOptions ropt;
  ropt.background = seq_.background;
  const Image img = render_state(state_.anchors, state_.ng, state_.nm, cfg_.enable_aad, cfg_.eps_m, cam,
                                 seq_.center, ropt);
  rep.psnr_db = psnr(img, gt);
  rep.ssim = ssim(img, gt);
  return rep;
}

EncodeResult stream_encode(const Sequence& seq, const PipelineConfig& cfg) {
  StreamEncoder enc(cfg, seq);
  EncodeResult out;
  for (std::size_t t = 0; t < seq.frame_count(); ++t) out.reports.push_back(enc.encode_frame(t).report);
  out.bitstream = enc.bitstream();
  return out;
}

std::vector<Image> stream_decode(const Bitstream& bs, const Camera& cam) {
  if (bs.frames.empty()) throw FormatError("bitstream contains no frames");
  cam.validate();
  RenderOptions ropt;
  ropt.background = bs.header.background;
  std::vector<Image> out;
  DecodedState st;
  for (const auto& rec : bs.frames) {
    st = decode_frame(rec, st, bs.header.shape);
    out.push_back(render_state(st.anchors, st.ng, st.nm, bs.header.enable_aad, bs.header.eps_m, cam,
                               bs.header.scene_center, ropt));
  }
  return out;
}

}  // namespace solar
