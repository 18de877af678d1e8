#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "solar/codec.hpp"
#include "solar/errors.hpp"
#include "solar/image_io.hpp"
#include "solar/pipeline.hpp"
#include "solar/report.hpp"
#include "solar/synth.hpp"
#include "selftest.hpp"

namespace fs = std::filesystem;
using namespace solar;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SceneScript resolve_script(const std::string& name_or_path) {
  for (const auto& n : builtin_script_names())
    if (n == name_or_path) return builtin_script(n);
  if (!fs::exists(name_or_path)) throw ConfigError("'" + name_or_path + "' is neither a built-in scene nor a script file");
  return load_script(name_or_path);
}

fs::path resolve_manifest(const fs::path& p) { return fs::is_directory(p) ? p / "manifest.txt" : p; }

std::vector<double> parse_list(const std::string& text, std::size_t n, const std::string& what) {
  std::vector<double> v;
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ',') c = ' ';
  std::istringstream in(cleaned);
  double x;
  while (in >> x) v.push_back(x);
  if (v.size() != n || !in.eof()) throw ConfigError(what + " expects " + std::to_string(n) + " numbers");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"solar: streamable anchor-based Gaussian video codec"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Render a synthetic multi-view dataset");
  std::string synth_scene, synth_out;
  synth->add_option("scene", synth_scene, "Built-in scene (static, drift, vanish) or script file")->required();
  synth->add_option("out_dir", synth_out, "Output directory")->required();

  // encode
  auto* encode = app.add_subcommand("encode", "Encode a dataset into a .solar bitstream");
  std::string enc_in, enc_out, enc_report, enc_config;
  encode->add_option("dataset", enc_in, "Dataset directory or manifest")->required();
  encode->add_option("output", enc_out, "Output .solar file")->required();
  encode->add_option("--report", enc_report, "Per-frame CSV (default: <output>.csv)");
  encode->add_option("--config", enc_config, "Config file of key = value lines");
  std::map<std::string, std::string> flag_values;
  for (const auto& key : config_keys()) encode->add_option("--" + key, flag_values[key], "PipelineConfig." + key);
  bool no_aad = false, no_ladar = false;
  std::string gop_alias;
  std::size_t max_frames = 0;
  encode->add_flag("--no-aad", no_aad, "Disable anchor activation dynamics");
  encode->add_flag("--no-ladar", no_ladar, "Disable recalibration");
  encode->add_option("--gop", gop_alias, "Alias of --gop_size");
  encode->add_option("--frames", max_frames, "Encode only the first N frames (0 = all)");

  // decode
  auto* decode = app.add_subcommand("decode", "Decode a bitstream and render every frame");
  std::string dec_in, dec_out, dec_pose;
  int dec_camera = 0;
  bool dec_heldout = false;
  double dec_focal = 0.0;
  decode->add_option("input", dec_in, "Input .solar file")->required();
  decode->add_option("out_dir", dec_out, "Directory for rendered PPM frames")->required();
  auto* cam_opt = decode->add_option("--camera", dec_camera, "Training camera index");
  auto* held_opt = decode->add_flag("--heldout", dec_heldout, "Render from the held-out camera");
  auto* pose_opt = decode->add_option("--pose", dec_pose, "Free viewpoint: 'ex,ey,ez,tx,ty,tz' eye and target");
  decode->add_option("--focal", dec_focal, "Focal length for --pose (default: training camera 0)");
  cam_opt->excludes(held_opt)->excludes(pose_opt);
  held_opt->excludes(pose_opt);

  // report
  auto* report = app.add_subcommand("report", "Derive tables from per-frame CSV reports");
  std::string rep_mode, rep_out;
  std::vector<std::string> rep_inputs;
  report->add_option("mode", rep_mode, "drift | rd | correlation | stability")
      ->required()
      ->check(CLI::IsMember({"drift", "rd", "correlation", "stability"}));
  report->add_option("csv", rep_inputs, "Report CSV files")->required();
  report->add_option("-o,--output", rep_out, "Output CSV (default: stdout)");

  auto* selftest = app.add_subcommand("selftest", "Run gradient and round-trip checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      const SceneScript s = resolve_script(synth_scene);
      generate(s, synth_out);
      std::printf("wrote %u frames x %zu cameras to %s\n", s.frame_count,
                  s.camera_count + (s.heldout_azimuth ? 1 : 0), synth_out.c_str());
      return 0;
    }

    if (*encode) {
      PipelineConfig cfg;
      if (!enc_config.empty()) cfg = parse_config_text(read_text(enc_config), cfg, enc_config);
      if (const char* env = std::getenv("SOLAR_SEED")) set_config_field(cfg, "seed", env);
      for (const auto& key : config_keys())
        if (encode->get_option("--" + key)->count() > 0) set_config_field(cfg, key, flag_values[key]);
      if (!gop_alias.empty()) set_config_field(cfg, "gop_size", gop_alias);
      if (no_aad) cfg.enable_aad = false;
      if (no_ladar) cfg.enable_ladar = false;
      cfg.validate();

      const Sequence seq = load_sequence(resolve_manifest(enc_in));
      StreamEncoder enc(cfg, seq);
      Report rep;
      rep.config = cfg.echo();
      const std::size_t n = max_frames > 0 ? std::min(max_frames, seq.frame_count()) : seq.frame_count();
      for (std::size_t t = 0; t < n; ++t) {
        const FrameResult r = enc.encode_frame(t);
        rep.rows.push_back(r.report);
        std::fprintf(stderr, "frame %zu %c psnr=%.3f bytes=%llu ema=%.5f recal=%d active=%zu\n", t,
                     static_cast<char>(r.kind), r.report.psnr_db, static_cast<unsigned long long>(r.report.bytes),
                     r.report.grad_ema, r.report.recal ? 1 : 0, r.report.active_anchors);
      }
      const Bitstream bs = enc.bitstream();
      write_bitstream(enc_out, bs);
      write_report(enc_report.empty() ? fs::path(enc_out + ".csv") : fs::path(enc_report), rep);

      double mean = 0.0;
      std::size_t recals = 0;
      for (const auto& r : rep.rows) {
        mean += r.psnr_db;
        recals += r.recal ? 1 : 0;
      }
      mean /= static_cast<double>(rep.rows.size());
      const double mb = static_cast<double>(fs::file_size(enc_out)) / 1e6;
      std::printf("frames=%zu mean_psnr_db=%.4f total_mb=%.6f recals=%zu\n", rep.rows.size(), mean, mb, recals);
      return 0;
    }

    if (*decode) {
      const Bitstream bs = read_bitstream(dec_in);
      Camera cam;
      if (dec_heldout) {
        if (!bs.header.heldout) throw ConfigError("bitstream has no held-out camera");
        cam = *bs.header.heldout;
      } else if (!dec_pose.empty()) {
        const auto v = parse_list(dec_pose, 6, "--pose");
        const Camera& ref = bs.header.cameras.at(0);
        cam = Camera::look_at({v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {0, 0, 1}, dec_focal > 0 ? dec_focal : ref.fx,
                              ref.width, ref.height);
      } else {
        if (dec_camera < 0 || static_cast<std::size_t>(dec_camera) >= bs.header.cameras.size())
          throw ConfigError("camera index " + std::to_string(dec_camera) + " out of range (stream has " +
                            std::to_string(bs.header.cameras.size()) + " cameras)");
        cam = bs.header.cameras[static_cast<std::size_t>(dec_camera)];
      }
      const auto frames = stream_decode(bs, cam);
      fs::create_directories(dec_out);
      for (std::size_t t = 0; t < frames.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04zu.ppm", t);
        write_ppm(fs::path(dec_out) / name, frames[t]);
      }
      std::printf("decoded %zu frames into %s\n", frames.size(), dec_out.c_str());
      return 0;
    }

    if (*report) {
      std::vector<Report> runs;
      for (const auto& p : rep_inputs) runs.push_back(read_report(fs::path(p)));
      std::ostringstream out;
      if (rep_mode == "drift") write_drift_table(out, runs);
      else if (rep_mode == "rd") write_rd_table(out, runs);
      else if (rep_mode == "correlation") write_correlation_table(out, runs);
      else write_stability_table(out, runs);
      if (rep_out.empty()) {
        std::cout << out.str();
      } else {
        std::ofstream f(rep_out);
        if (!f) throw IoError("cannot write " + rep_out);
        f << out.str();
      }
      return 0;
    }

    if (*selftest) return run_selftest(std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solar: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
