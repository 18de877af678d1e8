// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: solar_acceptance <path-to-solar-cli> [criterion numbers...]

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../common/oracles.hpp"
#include "solar/codec.hpp"
#include "solar/entropy.hpp"
#include "solar/errors.hpp"
#include "solar/gradcheck.hpp"
#include "solar/ladar.hpp"
#include "solar/losses.hpp"
#include "solar/pipeline.hpp"
#include "solar/report.hpp"
#include "solar/synth.hpp"

using namespace solar;
namespace fs = std::filesystem;

namespace {

std::string g_cli;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

PipelineConfig desk_config(std::uint64_t seed) {
  PipelineConfig c;
  c.t_iframe = 2000;
  c.t_btc = 150;
  c.t_recal = 60;
  c.anchor_count = 96;
  c.ng_hidden = 32;
  c.btc_hidden = 24;
  c.seed = seed;
  return c;
}

const Sequence& drift_sequence() {
  static const Sequence seq = make_sequence(builtin_script("drift"));
  return seq;
}

const Sequence& drift_prefix(std::size_t frames) {
  static std::map<std::size_t, Sequence> cache;
  auto it = cache.find(frames);
  if (it == cache.end()) {
    SceneScript s = builtin_script("drift");
    s.frame_count = static_cast<std::uint32_t>(frames);
    it = cache.emplace(frames, make_sequence(s)).first;
  }
  return it->second;
}

std::string report_csv(const PipelineConfig& cfg, const std::vector<FrameReport>& rows) {
  std::ostringstream out;
  write_report(out, Report{cfg.echo(), rows});
  return out.str();
}

std::vector<std::uint8_t> state_bytes(const DecodedState& s) {
  std::vector<std::uint8_t> out;
  auto put = [&](const std::vector<double>& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
    out.insert(out.end(), p, p + v.size() * sizeof(double));
  };
  put(s.anchors.x.values);
  put(s.anchors.f.values);
  put(s.anchors.l.values);
  put(s.ng.mlp().flatten());
  put(s.nm.mlp().flatten());
  return out;
}

// ------------------------------------------------------------------ 1

Outcome gradients() {
  Stopwatch sw;
  using Check = GradCheckStats (*)(std::uint64_t);
  const std::vector<std::pair<std::string, Check>> suites{{"render", check_render_gradients},
                                                          {"N_G", check_attribute_net_gradients},
                                                          {"N_m", check_mask_net_gradients},
                                                          {"BTC", check_btc_gradients},
                                                          {"losses", check_loss_gradients}};
  bool ok = true;
  std::string detail;
  for (const auto& [name, fn] : suites) {
    GradCheckStats all;
    int configs = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed, ++configs) {
      const GradCheckStats s = fn(seed);
      ok = ok && s.ok();
      all.merge(s);
    }
    detail += fmt("%s %d configs %zu coords worst rel %.2e; ", name.c_str(), configs, all.checked, all.worst_rel);
  }
  const double t = sw.seconds();
  ok = ok && t < 120.0;
  return {ok, detail + fmt("%.1f s", t)};
}

// ------------------------------------------------------------------ 2

Outcome compositing() {
  Stopwatch sw;
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int scenes = 0;
  for (int trial = 0; trial < 50; ++trial, ++scenes) {
    const int n = 1 + static_cast<int>(rng() % 10);
    std::vector<GaussianPrimitive> gs;
    for (int i = 0; i < n; ++i) gs.push_back(oracle::random_gaussian(rng));
    const int w = 8 + static_cast<int>(rng() % 25), h = 8 + static_cast<int>(rng() % 25);
    const Camera cam = Camera::look_at({3.0, oracle::unif(rng, -1, 1), oracle::unif(rng, 0, 1.5)}, {0, 0, 0},
                                       {0, 0, 1}, 1.6 * std::max(w, h), w, h);
    RenderOptions opt = oracle::unculled();
    opt.background = {oracle::unif(rng, 0, 1), oracle::unif(rng, 0, 1), oracle::unif(rng, 0, 1)};
    const Image got = render(gs, cam, opt);
    const Image want = oracle::brute_force(gs, cam, opt.background);
    for (std::size_t i = 0; i < got.pixels.size(); ++i) worst = std::max(worst, std::abs(got.pixels[i] - want.pixels[i]));
  }
  const double t = sw.seconds();
  return {worst < 1e-12 && t < 10.0, fmt("%d scenes, max abs error %.2e, %.2f s", scenes, worst, t)};
}

// ------------------------------------------------------------------ 3 and 11

struct PrefixRun {
  std::vector<std::uint8_t> bytes;
  std::string csv;
  std::vector<FrameReport> reports;
};

std::optional<PrefixRun> g_prefix_run;

Outcome codec_round_trip() {
  Stopwatch sw;
  const Sequence& seq = drift_prefix(50);
  const PipelineConfig cfg = desk_config(0);
  StreamEncoder enc(cfg, seq);
  std::vector<DecodedState> encoder_states;
  std::vector<FrameReport> reports;
  for (std::size_t t = 0; t < seq.frame_count(); ++t) {
    reports.push_back(enc.encode_frame(t).report);
    encoder_states.push_back(enc.state());
  }
  const auto bytes = serialize(enc.bitstream());
  g_prefix_run = PrefixRun{bytes, report_csv(cfg, reports), reports};

  // Independent decoder over the serialized file.
  BitstreamReader reader(bytes);
  DecodedState dec;
  std::size_t t = 0, state_mismatch = 0, pixel_mismatch = 0;
  RenderOptions ropt;
  ropt.background = reader.header().background;
  while (auto rec = reader.next()) {
    dec = decode_frame(*rec, dec, reader.header().shape);
    if (state_bytes(dec) != state_bytes(encoder_states[t])) ++state_mismatch;
    for (const Camera& cam : seq.cameras) {
      const Image a = render_state(dec.anchors, dec.ng, dec.nm, cfg.enable_aad, cfg.eps_m, cam, seq.center, ropt);
      const Image b = render_state(encoder_states[t].anchors, encoder_states[t].ng, encoder_states[t].nm,
                                   cfg.enable_aad, cfg.eps_m, cam, seq.center, ropt);
      if (a.pixels != b.pixels) ++pixel_mismatch;
    }
    ++t;
  }
  const double secs = sw.seconds();
  const bool ok = t == 50 && state_mismatch == 0 && pixel_mismatch == 0 && secs < 600.0;
  return {ok, fmt("%zu frames, %zu bytes, %zu state mismatches, %zu render mismatches, %.1f s", t, bytes.size(),
                  state_mismatch, pixel_mismatch, secs)};
}

Outcome determinism() {
  if (!g_prefix_run) codec_round_trip();
  Stopwatch sw;
  const PipelineConfig cfg = desk_config(0);
  const EncodeResult again = stream_encode(drift_prefix(50), cfg);
  const bool same_bytes = serialize(again.bitstream) == g_prefix_run->bytes;
  const bool same_csv = report_csv(cfg, again.reports) == g_prefix_run->csv;
  return {same_bytes && same_csv,
          fmt("50-frame drift encode repeated: bitstream %s, CSV %s, %.1f s", same_bytes ? "identical" : "DIFFERS",
              same_csv ? "identical" : "DIFFERS", sw.seconds())};
}

// ------------------------------------------------------------------ 4

Outcome rate_tightness() {
  Stopwatch sw;
  std::mt19937_64 rng(4);
  double worst_excess = -1e300;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = static_cast<std::size_t>(std::pow(10.0, std::uniform_real_distribution<double>(3, 5)(rng)));
    const double p = 0.1 * (1 + trial % 9);
    std::bernoulli_distribution b(p);
    std::vector<bool> bits(n);
    SymbolCounts c;
    for (std::size_t i = 0; i < n; ++i) {
      bits[i] = b(rng);
      (bits[i] ? c.c_plus : c.c_minus)++;
    }
    const auto p16 = quantize_probability(empirical_p_plus(c));
    const auto coded = arith_encode(bits, p16);
    if (arith_decode(coded, n, p16) != bits) return {false, fmt("round trip failed on stream %d", trial)};
    worst_excess = std::max(worst_excess, 8.0 * coded.size() - hard_rate(c, p16 / 65536.0));
  }
  double worst_rel = 0.0;
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    std::bernoulli_distribution b(p);
    std::vector<bool> bits(100000);
    std::size_t plus = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) plus += (bits[i] = b(rng));
    const double q = static_cast<double>(plus) / bits.size();
    const double shannon = plus * -std::log2(q) + (bits.size() - plus) * -std::log2(1 - q);
    const double coded = 8.0 * arith_encode(bits, quantize_probability(q)).size();
    worst_rel = std::max(worst_rel, std::abs(coded - shannon) / shannon);
  }
  const double t = sw.seconds();
  return {worst_excess <= 64.0 && worst_rel < 0.01 && t < 60.0,
          fmt("max excess over hard rate %.1f bits (limit 64), max Shannon deviation at 1e5 symbols %.3f%%, %.1f s",
              worst_excess, 100 * worst_rel, t)};
}

// ------------------------------------------------------------------ 5

Outcome ema_exactness() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int trace = 0; trace < 20; ++trace) {
    const double alpha = trace == 0 ? 0.3 : std::uniform_real_distribution<double>(0.0, 0.95)(rng);
    std::vector<double> g(500);
    for (double& v : g) v = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    GradientStatistic s;
    s.alpha_d = alpha;
    for (std::size_t n = 1; n <= g.size(); ++n) {
      s = update_ema(s, g[n - 1]);
      long double closed = 0;
      for (std::size_t i = 1; i <= n; ++i)
        closed += (1.0L - alpha) * std::pow(static_cast<long double>(alpha), static_cast<long double>(n - i)) * g[i - 1];
      worst = std::max(worst, static_cast<double>(std::abs(closed - s.ema)));
    }
  }
  return {worst < 1e-12, fmt("20 traces of length 500, max |recursion - closed form| %.2e", worst)};
}

// ------------------------------------------------------------------ 6

Outcome aad_behaviour() {
  Stopwatch sw;
  const SceneScript script = builtin_script("vanish");
  const Sequence seq = make_sequence(script);
  std::uint32_t hide_begin = 0, hide_end = 0;
  for (const auto& tr : script.tracks)
    if (!tr.hidden.empty()) std::tie(hide_begin, hide_end) = tr.hidden.front();

  double active_aad = 0.0, active_plain = 0.0;
  std::size_t transitions = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (bool sparse : {true, false}) {
      PipelineConfig cfg = desk_config(seed);
      if (!sparse) cfg.lambda_s = 0.0;
      StreamEncoder enc(cfg, seq);
      std::vector<std::vector<bool>> active;
      double sum = 0.0;
      for (std::size_t t = 0; t < seq.frame_count(); ++t) {
        const FrameReport r = enc.encode_frame(t).report;
        if (t >= hide_begin && t < hide_end) sum += static_cast<double>(r.active_anchors);
        const auto p = partition(mask_scores(enc.state().anchors, enc.state().nm), cfg.eps_m);
        std::vector<bool> on(enc.state().anchors.size(), false);
        for (auto i : p.active) on[i] = true;
        active.push_back(on);
      }
      const double mean = sum / (hide_end - hide_begin);
      (sparse ? active_aad : active_plain) += mean / 3.0;
      if (!sparse) continue;
      for (std::size_t a = 0; a < active[0].size(); ++a) {
        bool before = false, during = false, after = false;
        for (std::size_t t = 0; t < hide_begin; ++t) before = before || active[t][a];
        for (std::size_t t = hide_begin; t < hide_end; ++t) during = during || (before && !active[t][a]);
        for (std::size_t t = hide_end; t < active.size(); ++t) after = after || active[t][a];
        if (before && during && after) ++transitions;
      }
    }
  }
  const double t = sw.seconds();
  return {active_aad < active_plain && transitions >= 1 && t < 900.0,
          fmt("mean active anchors in frames [%u, %u): AAD %.2f vs lambda_s=0 %.2f; A->V->A anchors %zu; %.1f s",
              hide_begin, hide_end, active_aad, active_plain, transitions, t)};
}

// ------------------------------------------------------------------ 7

Outcome ladar_behaviour() {
  Stopwatch sw;
  const Sequence& seq = drift_prefix(8);
  int increased = 0, decreased = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const PipelineConfig cfg = desk_config(seed);
    StreamEncoder control(cfg, seq);
    for (std::size_t t = 0; t < 5; ++t) control.encode_frame(t);
    StreamEncoder perturbed = control;
    std::mt19937_64 rng(derive_seed(seed, 5, 99));
    std::normal_distribution<double> noise(0.0, 0.2);
    for (Param* p : perturbed.mutable_state().ng.mlp().params())
      for (double& v : p->value.values) v += noise(rng);

    // (c) recalibration on the perturbed state, current frame, anchors frozen.
    const DecodedState& st = perturbed.state();
    RecalScene scene;
    scene.anchors = &st.anchors;
    scene.nm = &st.nm;
    scene.cameras = seq.cameras;
    scene.images = seq.frames[4];
    scene.objective = perturbed.objective();
    scene.seed = seed;
    GaussianAttributeNet tuned = st.ng;
    const RecalResult rr = recalibrate(tuned, scene, RecalConfig{cfg.eps_d, cfg.t_recal, cfg.lr}, true);
    if (rr.applied && rr.loss_after < rr.loss_before) ++decreased;

    // (a) the statistic on the following frame.
    const double g_control = control.encode_frame(5).ema_trace.back();
    const double g_perturbed = perturbed.encode_frame(5).ema_trace.back();
    if (g_perturbed > g_control) ++increased;
    detail += fmt("seed %llu: G %.4f -> %.4f, L_r %.4f -> %.4f; ", static_cast<unsigned long long>(seed), g_control,
                  g_perturbed, rr.loss_before, rr.loss_after);
  }

  // (b) trigger count over a fixed recorded trace.
  if (!g_prefix_run) codec_round_trip();
  std::vector<std::size_t> counts;
  for (double eps : {0.0015, 0.002, 0.003}) {
    RecalConfig rc;
    rc.eps_d = eps;
    std::size_t n = 0;
    for (const auto& row : g_prefix_run->reports)
      if (row.frame > 0) {
        GradientStatistic s;
        s.ema = row.grad_ema;
        n += should_recalibrate(s, rc) ? 1 : 0;
      }
    counts.push_back(n);
  }
  const bool monotone = counts[0] >= counts[1] && counts[1] >= counts[2];
  detail += fmt("triggers at eps_d {0.0015, 0.002, 0.003}: %zu, %zu, %zu; %.1f s", counts[0], counts[1], counts[2],
                sw.seconds());
  return {increased == 3 && decreased == 3 && monotone, detail};
}

// ------------------------------------------------------------------ 8, 9, 10

struct DriftRuns {
  // reports[config][seed]; configs: full, w/o AAD, w/o LaDAR, w/o both
  std::array<std::array<std::vector<FrameReport>, 3>, 4> reports;
  std::uint64_t full_bytes_seed0 = 0;
  double seconds = 0.0;
};

std::optional<DriftRuns> g_drift;

const DriftRuns& drift_runs() {
  if (g_drift) return *g_drift;
  Stopwatch sw;
  DriftRuns runs;
  for (std::uint64_t seed = 0; seed < 3; ++seed)
    for (int c = 0; c < 4; ++c) {
      PipelineConfig cfg = desk_config(seed);
      cfg.enable_aad = c == 0 || c == 2;
      cfg.enable_ladar = c == 0 || c == 1;
      const EncodeResult r = stream_encode(drift_sequence(), cfg);
      runs.reports[c][seed] = r.reports;
      if (c == 0 && seed == 0) runs.full_bytes_seed0 = serialize(r.bitstream).size();
      std::fprintf(stderr, "  drift run seed %llu config %d done (%.0f s)\n", static_cast<unsigned long long>(seed), c,
                   sw.seconds());
    }
  runs.seconds = sw.seconds();
  g_drift = runs;
  return *g_drift;
}

double mean_in(const std::vector<FrameReport>& rows, std::uint32_t a, std::uint32_t b) {
  return mean_psnr(Report{"", rows}, a, b);
}

Outcome drift_trend() {
  const DriftRuns& d = drift_runs();
  std::array<double, 4> mean{}, early{}, late{};
  for (int c = 0; c < 4; ++c)
    for (int s = 0; s < 3; ++s) {
      const auto& rows = d.reports[c][s];
      mean[c] += mean_in(rows, 0, static_cast<std::uint32_t>(rows.size())) / 3.0;
      early[c] += mean_in(rows, 10, 60) / 3.0;
      late[c] += mean_in(rows, 150, 200) / 3.0;
    }
  const double drop_full = early[0] - late[0];
  const double drop_both = early[3] - late[3];
  const bool ok = mean[0] >= mean[1] && mean[0] >= mean[2] && mean[0] - mean[3] >= 0.2 &&
                  std::abs(late[0] - early[0]) <= 1.5 && drop_both > drop_full && d.seconds < 2700.0;
  return {ok, fmt("mean PSNR full %.2f, w/o AAD %.2f, w/o LaDAR %.2f, w/o both %.2f dB; full frames 10-60 %.2f, "
                  "150-200 %.2f; drop full %.2f vs w/o both %.2f dB; %.0f s",
                  mean[0], mean[1], mean[2], mean[3], early[0], late[0], drop_full, drop_both, d.seconds)};
}

Outcome gop_bytes() {
  const DriftRuns& d = drift_runs();
  Stopwatch sw;
  PipelineConfig cfg = desk_config(0);
  cfg.gop_size = 25;
  const EncodeResult r = stream_encode(drift_sequence(), cfg);
  const std::uint64_t gop = serialize(r.bitstream).size();
  std::size_t iframes = 0;
  for (const auto& f : r.bitstream.frames) iframes += f.kind == FrameKind::I;
  double mean_gop = 0.0;
  for (const auto& row : r.reports) mean_gop += row.psnr_db / r.reports.size();
  return {gop > d.full_bytes_seed0,
          fmt("GOP 25: %llu bytes (%zu I-frames, mean PSNR %.2f dB) vs GOP-free %llu bytes; %.0f s",
              static_cast<unsigned long long>(gop), iframes, mean_gop,
              static_cast<unsigned long long>(d.full_bytes_seed0), sw.seconds())};
}

Outcome correlation_sign() {
  const DriftRuns& d = drift_runs();
  double r_full = 0.0, r_noladar = 0.0;
  for (int s = 0; s < 3; ++s) {
    r_full += psnr_gradient_correlation(Report{"", d.reports[0][s]}) / 3.0;
    r_noladar += psnr_gradient_correlation(Report{"", d.reports[2][s]}) / 3.0;
  }
  const double r0 = psnr_gradient_correlation(Report{"", d.reports[0][0]});
  return {r0 < 0.0 && r_full < 0.0 && r_noladar < 0.0,
          fmt("Pearson r seed 0 full %.3f; 3-seed mean full %.3f, w/o LaDAR %.3f", r0, r_full, r_noladar)};
}

// ------------------------------------------------------------------ 12

Outcome stability_stats() {
  Stopwatch sw;
  const fs::path dir = fs::temp_directory_path() / ("solar_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const Sequence seq = make_sequence(builtin_script("static"));
  std::vector<std::vector<double>> psnr;
  std::string cmd = "\"" + g_cli + "\" report stability";
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PipelineConfig cfg = desk_config(seed);
    const EncodeResult r = stream_encode(seq, cfg);
    const fs::path csv = dir / ("run" + std::to_string(seed) + ".csv");
    write_report(csv, Report{cfg.echo(), r.reports});
    std::vector<double> p;
    for (const auto& row : read_report(csv).rows) p.push_back(row.psnr_db);
    psnr.push_back(p);
    cmd += " \"" + csv.string() + "\"";
  }
  std::string out;
  if (FILE* pipe = popen(cmd.c_str(), "r")) {
    char buf[256];
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    if (pclose(pipe) != 0) out.clear();
  }
  fs::remove_all(dir);
  std::istringstream in(out);
  std::string head, row;
  std::getline(in, head);
  std::getline(in, row);
  if (head != "runs,mu_seq,sigma_run,sigma_temp") return {false, "report stability printed '" + out + "'"};
  for (char& c : row)
    if (c == ',') c = ' ';
  std::istringstream fields(row);
  double runs = 0, mu = 0, srun = 0, stemp = 0;
  fields >> runs >> mu >> srun >> stemp;

  // Spreadsheet-style: AVERAGE and STDEV.P via sums of squares in long double.
  auto stdev_p = [](const std::vector<long double>& v) {
    long double s = 0, ss = 0;
    for (auto x : v) s += x, ss += x * x;
    const long double n = static_cast<long double>(v.size());
    return std::sqrt(std::max<long double>(0, ss / n - (s / n) * (s / n)));
  };
  long double e_mu = 0, e_temp = 0, e_run = 0;
  for (const auto& p : psnr) {
    std::vector<long double> v(p.begin(), p.end());
    long double s = 0;
    for (auto x : v) s += x;
    e_mu += s / v.size() / 5;
    e_temp += stdev_p(v) / 5;
  }
  const std::size_t frames = psnr[0].size();
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<long double> v;
    for (const auto& p : psnr) v.push_back(p[t]);
    e_run += stdev_p(v) / frames;
  }
  const double err = std::max({std::abs(mu - static_cast<double>(e_mu)), std::abs(srun - static_cast<double>(e_run)),
                               std::abs(stemp - static_cast<double>(e_temp))});
  return {runs == 5 && err < 1e-9,
          fmt("mu_seq %.4f, sigma_run %.4f, sigma_temp %.4f dB over 5 runs; max deviation from the reference %.2e; "
              "%.0f s",
              mu, srun, stemp, err, sw.seconds())};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: solar_acceptance <solar-cli> [criteria...]\n";
    return 2;
  }
  g_cli = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradients},
      {"compositing oracle", compositing},
      {"codec round trip", codec_round_trip},
      {"rate tightness", rate_tightness},
      {"EMA exactness", ema_exactness},
      {"AAD behaviour", aad_behaviour},
      {"LaDAR behaviour", ladar_behaviour},
      {"drift-mitigation trend", drift_trend},
      {"GOP comparison", gop_bytes},
      {"correlation sign", correlation_sign},
      {"determinism", determinism},
      {"stability statistics", stability_stats},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
