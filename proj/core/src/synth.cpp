#include "solar/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "solar/errors.hpp"
#include "solar/image_io.hpp"

namespace solar {

namespace {

// Library-independent uniform draw in [0, 1).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::map<std::string, std::string>& builtins() {
  static const std::map<std::string, std::string> scripts = {
      {"static",
       "# Static scene: every frame identical.\n"
       "name static\n"
       "frames 12\n"
       "size 48 48\n"
       "random 30 11 0 0 0 0.65 0.10 0.22\n"},
      {"drift",
       "# Rigid translation plus articulation over a long horizon.\n"
       "name drift\n"
       "frames 200\n"
       "size 48 48\n"
       "random 18 21 0 0 0 0.6 0.10 0.20\n"
       "random 8 22 -0.35 0 0 0.25 0.08 0.16\n"
       "linear 0.003 0 0\n"
       "random 8 23 0.3 0.25 0 0.25 0.08 0.16\n"
       "sine 0 0 0.25 80 0\n"},
      {"vanish",
       "# A cluster disappears for frames [10, 20) and then returns.\n"
       "name vanish\n"
       "frames 30\n"
       "size 48 48\n"
       "random 20 31 0 0 0 0.6 0.10 0.20\n"
       "random 6 32 0.35 -0.3 0.1 0.2 0.10 0.18\n"
       "hide 10 20\n"},
  };
  return scripts;
}

}  // namespace

void SceneScript::validate() const {
  if (frame_count == 0) throw ConfigError("scene script: frame count must be positive");
  if (width < 11 || height < 11) throw ConfigError("scene script: images must be at least 11x11");
  if (!(focal > 0.0)) throw ConfigError("scene script: focal length must be positive");
  if (camera_count == 0) throw ConfigError("scene script: need at least one camera");
  if (!(ring_radius > 0.0)) throw ConfigError("scene script: ring radius must be positive");
  if (gaussians.size() != tracks.size()) throw ConfigError("scene script: one track per Gaussian required");
  if ((bbox_max - bbox_min).minCoeff() < 0.0) throw ConfigError("scene script: bounding box is inverted");
}

SceneScript parse_script(const std::string& text, const std::string& source) {
  SceneScript s;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::size_t group_begin = 0;
  bool have_group = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string cmd;
    if (!(ls >> cmd)) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    std::vector<double> a;
    std::string word;
    std::vector<std::string> words;
    while (ls >> word) words.push_back(word);
    auto numbers = [&](std::size_t n) {
      if (words.size() != n)
        throw ConfigError(where + ": '" + cmd + "' expects " + std::to_string(n) + " values, got " +
                          std::to_string(words.size()));
      a.clear();
      for (const auto& w : words) {
        try {
          std::size_t used = 0;
          a.push_back(std::stod(w, &used));
          if (used != w.size()) throw std::invalid_argument(w);
        } catch (const std::exception&) {
          throw ConfigError(where + ": '" + w + "' is not a number");
        }
      }
    };
    auto need_group = [&] {
      if (!have_group) throw ConfigError(where + ": '" + cmd + "' must follow a gaussian or random statement");
    };

    if (cmd == "name") {
      if (words.size() != 1) throw ConfigError(where + ": 'name' expects one word");
      s.name = words[0];
    } else if (cmd == "frames") {
      numbers(1);
      if (a[0] < 1) throw ConfigError(where + ": frame count must be positive");
      s.frame_count = static_cast<std::uint32_t>(a[0]);
    } else if (cmd == "size") {
      numbers(2);
      s.width = static_cast<int>(a[0]);
      s.height = static_cast<int>(a[1]);
    } else if (cmd == "focal") {
      numbers(1);
      s.focal = a[0];
    } else if (cmd == "ring") {
      numbers(3);
      if (a[0] < 1) throw ConfigError(where + ": camera count must be positive");
      s.camera_count = static_cast<std::size_t>(a[0]);
      s.ring_radius = a[1];
      s.ring_height = a[2];
    } else if (cmd == "heldout") {
      if (words.size() == 1 && words[0] == "none") {
        s.heldout_azimuth.reset();
      } else {
        numbers(1);
        s.heldout_azimuth = a[0];
      }
    } else if (cmd == "center") {
      numbers(3);
      s.center = {a[0], a[1], a[2]};
    } else if (cmd == "bbox") {
      numbers(6);
      s.bbox_min = {a[0], a[1], a[2]};
      s.bbox_max = {a[3], a[4], a[5]};
    } else if (cmd == "gaussian") {
      numbers(10);
      GaussianPrimitive g;
      g.mu = {a[0], a[1], a[2]};
      g.s = {a[3], a[4], a[5]};
      g.c = {a[6], a[7], a[8]};
      g.alpha = a[9];
      if (g.s.minCoeff() <= 0.0) throw ConfigError(where + ": scales must be positive");
      if (g.alpha < 0.0 || g.alpha > 1.0) throw ConfigError(where + ": opacity must lie in [0, 1]");
      group_begin = s.gaussians.size();
      have_group = true;
      s.gaussians.push_back(g);
      s.tracks.emplace_back();
    } else if (cmd == "random") {
      numbers(8);
      if (a[0] < 1) throw ConfigError(where + ": random count must be positive");
      if (a[6] <= 0.0 || a[7] < a[6]) throw ConfigError(where + ": need 0 < smin <= smax");
      std::mt19937_64 rng(static_cast<std::uint64_t>(a[1]));
      group_begin = s.gaussians.size();
      have_group = true;
      for (int i = 0; i < static_cast<int>(a[0]); ++i) {
        GaussianPrimitive g;
        for (int k = 0; k < 3; ++k) g.mu[k] = a[2 + k] + uniform(rng, -a[5], a[5]);
        for (int k = 0; k < 3; ++k) g.s[k] = uniform(rng, a[6], a[7]);
        Eigen::Vector4d q;
        for (int k = 0; k < 4; ++k) q[k] = uniform(rng, -1.0, 1.0);
        if (q.norm() < 1e-3) q = Eigen::Vector4d(1, 0, 0, 0);
        g.r = q.normalized();
        for (int k = 0; k < 3; ++k) g.c[k] = uniform(rng, 0.15, 0.95);
        g.alpha = uniform(rng, 0.7, 0.95);
        s.gaussians.push_back(g);
        s.tracks.emplace_back();
      }
    } else if (cmd == "rotation") {
      numbers(4);
      need_group();
      const Eigen::Vector4d q(a[0], a[1], a[2], a[3]);
      if (q.norm() < 1e-12) throw ConfigError(where + ": rotation quaternion is zero");
      for (std::size_t i = group_begin; i < s.gaussians.size(); ++i) s.gaussians[i].r = q.normalized();
    } else if (cmd == "linear") {
      numbers(3);
      need_group();
      for (std::size_t i = group_begin; i < s.tracks.size(); ++i) s.tracks[i].velocity = {a[0], a[1], a[2]};
    } else if (cmd == "sine") {
      numbers(5);
      need_group();
      if (!(a[3] > 0.0)) throw ConfigError(where + ": period must be positive");
      for (std::size_t i = group_begin; i < s.tracks.size(); ++i) {
        s.tracks[i].amplitude = {a[0], a[1], a[2]};
        s.tracks[i].period = a[3];
        s.tracks[i].phase = a[4];
      }
    } else if (cmd == "hide") {
      numbers(2);
      need_group();
      if (a[0] < 0 || a[1] <= a[0]) throw ConfigError(where + ": hide needs 0 <= begin < end");
      for (std::size_t i = group_begin; i < s.tracks.size(); ++i)
        s.tracks[i].hidden.emplace_back(static_cast<std::uint32_t>(a[0]), static_cast<std::uint32_t>(a[1]));
    } else {
      throw ConfigError(where + ": unknown statement '" + cmd + "'");
    }
  }
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return s;
}

SceneScript load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene script " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str(), path.string());
}

std::vector<std::string> builtin_script_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : builtins()) out.push_back(k);
  return out;
}

const std::string& builtin_script_text(const std::string& name) {
  const auto it = builtins().find(name);
  if (it == builtins().end()) throw ConfigError("unknown built-in scene '" + name + "'");
  return it->second;
}

SceneScript builtin_script(const std::string& name) { return parse_script(builtin_script_text(name), name); }

std::vector<GaussianPrimitive> gaussians_at(const SceneScript& s, std::uint32_t t) {
  std::vector<GaussianPrimitive> out = s.gaussians;
  const double tt = static_cast<double>(t);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Track& tr = s.tracks[i];
    out[i].mu += tr.velocity * tt;
    out[i].mu += tr.amplitude * std::sin(2.0 * std::numbers::pi * tt / tr.period + tr.phase);
    for (const auto& [b, e] : tr.hidden)
      if (t >= b && t < e) out[i].alpha = 0.0;
  }
  return out;
}

namespace {

Camera ring_camera(const SceneScript& s, double azimuth) {
  const Eigen::Vector3d eye =
      s.center + Eigen::Vector3d(s.ring_radius * std::cos(azimuth), s.ring_radius * std::sin(azimuth), s.ring_height);
  return Camera::look_at(eye, s.center, Eigen::Vector3d(0, 0, 1), s.focal, s.width, s.height);
}

}  // namespace

std::vector<Camera> ring_cameras(const SceneScript& s) {
  std::vector<Camera> cams;
  for (std::size_t i = 0; i < s.camera_count; ++i)
    cams.push_back(ring_camera(s, 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(s.camera_count)));
  return cams;
}

std::optional<Camera> heldout_camera(const SceneScript& s) {
  if (!s.heldout_azimuth) return std::nullopt;
  return ring_camera(s, *s.heldout_azimuth);
}

Sequence make_sequence(const SceneScript& s) {
  s.validate();
  Sequence seq;
  seq.cameras = ring_cameras(s);
  seq.heldout = heldout_camera(s);
  seq.center = s.center;
  seq.bbox_min = s.bbox_min;
  seq.bbox_max = s.bbox_max;
  for (std::uint32_t t = 0; t < s.frame_count; ++t) {
    const auto g = gaussians_at(s, t);
    std::vector<Image> views;
    for (const auto& c : seq.cameras) views.push_back(quantize_8bit(render(g, c)));
    seq.frames.push_back(std::move(views));
    if (seq.heldout) seq.heldout_frames.push_back(quantize_8bit(render(g, *seq.heldout)));
  }
  return seq;
}

namespace {

std::string camera_fields(const Camera& c) {
  std::string out = fmt(c.fx) + " " + fmt(c.fy) + " " + fmt(c.cx) + " " + fmt(c.cy);
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) out += " " + fmt(c.rotation(r, k));
  for (int k = 0; k < 3; ++k) out += " " + fmt(c.translation[k]);
  return out;
}

std::string view_name(std::uint32_t t, const std::string& cam) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frames/%04u_%s.ppm", t, cam.c_str());
  return buf;
}

}  // namespace

void generate(const SceneScript& s, const std::filesystem::path& out_dir) {
  const Sequence seq = make_sequence(s);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "frames", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "frames").string() + ": " + ec.message());

  std::ofstream m(out_dir / "manifest.txt");
  if (!m) throw IoError("cannot write " + (out_dir / "manifest.txt").string());
  m << "solar-manifest 1\n";
  m << "name " << s.name << "\n";
  m << "size " << s.width << " " << s.height << "\n";
  m << "frames " << s.frame_count << "\n";
  m << "center " << fmt(seq.center[0]) << " " << fmt(seq.center[1]) << " " << fmt(seq.center[2]) << "\n";
  m << "bbox";
  for (int k = 0; k < 3; ++k) m << " " << fmt(seq.bbox_min[k]);
  for (int k = 0; k < 3; ++k) m << " " << fmt(seq.bbox_max[k]);
  m << "\n";
  for (std::size_t c = 0; c < seq.cameras.size(); ++c) m << "camera " << c << " " << camera_fields(seq.cameras[c]) << "\n";
  if (seq.heldout) m << "camera heldout " << camera_fields(*seq.heldout) << "\n";
  for (std::uint32_t t = 0; t < s.frame_count; ++t) {
    for (std::size_t c = 0; c < seq.cameras.size(); ++c) {
      const std::string name = view_name(t, "c" + std::to_string(c));
      write_ppm(out_dir / name, seq.frames[t][c]);
      m << "view " << t << " " << c << " " << name << "\n";
    }
    if (seq.heldout) {
      const std::string name = view_name(t, "heldout");
      write_ppm(out_dir / name, seq.heldout_frames[t]);
      m << "view " << t << " heldout " << name << "\n";
    }
  }
  if (!m) throw IoError("failed writing manifest");
}

Sequence load_sequence(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  const auto root = manifest.parent_path();
  Sequence seq;
  int width = 0, height = 0;
  std::uint32_t frames = 0;
  std::map<std::string, Camera> cams;
  std::vector<std::tuple<std::uint32_t, std::string, std::string, std::size_t>> views;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string cmd;
    if (!(ls >> cmd)) continue;
    const std::string where = manifest.string() + ":" + std::to_string(lineno);
    auto fail = [&](const std::string& msg) { throw FormatError(where + ": " + msg); };
    if (!header) {
      int version = 0;
      if (cmd != "solar-manifest" || !(ls >> version)) fail("missing 'solar-manifest 1' header");
      if (version != 1) fail("unsupported manifest version " + std::to_string(version));
      header = true;
      continue;
    }
    if (cmd == "name") {
      continue;
    } else if (cmd == "size") {
      if (!(ls >> width >> height) || width <= 0 || height <= 0) fail("bad size");
    } else if (cmd == "frames") {
      if (!(ls >> frames) || frames == 0) fail("bad frame count");
    } else if (cmd == "center") {
      if (!(ls >> seq.center[0] >> seq.center[1] >> seq.center[2])) fail("bad center");
    } else if (cmd == "background") {
      if (!(ls >> seq.background[0] >> seq.background[1] >> seq.background[2])) fail("bad background");
    } else if (cmd == "bbox") {
      if (!(ls >> seq.bbox_min[0] >> seq.bbox_min[1] >> seq.bbox_min[2] >> seq.bbox_max[0] >> seq.bbox_max[1] >>
            seq.bbox_max[2]))
        fail("bad bbox");
    } else if (cmd == "camera") {
      std::string id;
      Camera c;
      if (!(ls >> id >> c.fx >> c.fy >> c.cx >> c.cy)) fail("bad camera intrinsics");
      for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k)
          if (!(ls >> c.rotation(r, k))) fail("bad camera rotation");
      for (int k = 0; k < 3; ++k)
        if (!(ls >> c.translation[k])) fail("bad camera translation");
      if (width == 0) fail("camera before size");
      c.width = width;
      c.height = height;
      if (cams.count(id)) fail("duplicate camera '" + id + "'");
      cams[id] = c;
    } else if (cmd == "view") {
      std::uint32_t t = 0;
      std::string id, path;
      if (!(ls >> t >> id >> path)) fail("bad view line");
      views.emplace_back(t, id, path, lineno);
    } else {
      fail("unknown statement '" + cmd + "'");
    }
  }
  if (!header) throw FormatError(manifest.string() + ": empty manifest");
  if (frames == 0) throw FormatError(manifest.string() + ": missing frame count");

  std::size_t ncam = 0;
  while (cams.count(std::to_string(ncam))) ++ncam;
  if (ncam == 0) throw FormatError(manifest.string() + ": no training cameras (ids 0, 1, ...)");
  for (std::size_t c = 0; c < ncam; ++c) seq.cameras.push_back(cams[std::to_string(c)]);
  if (cams.count("heldout")) seq.heldout = cams["heldout"];
  if (cams.size() != ncam + (seq.heldout ? 1 : 0)) throw FormatError(manifest.string() + ": unexpected camera ids");

  seq.frames.assign(frames, std::vector<Image>(ncam));
  if (seq.heldout) seq.heldout_frames.assign(frames, Image());
  std::vector<std::vector<bool>> seen(frames, std::vector<bool>(ncam + 1, false));
  for (const auto& [t, id, path, ln] : views) {
    const std::string where = manifest.string() + ":" + std::to_string(ln);
    if (t >= frames) throw FormatError(where + ": frame index out of range");
    std::size_t slot;
    if (id == "heldout") {
      if (!seq.heldout) throw FormatError(where + ": view for undeclared held-out camera");
      slot = ncam;
    } else {
      if (!cams.count(id) || id == "heldout") throw FormatError(where + ": unknown camera '" + id + "'");
      slot = std::stoul(id);
    }
    if (seen[t][slot]) throw FormatError(where + ": duplicate view");
    seen[t][slot] = true;
    const auto full = root / path;
    if (!std::filesystem::exists(full)) throw IoError("missing frame image " + full.string());
    Image img = read_ppm(full);
    if (img.width != width || img.height != height)
      throw FormatError(full.string() + ": resolution " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                        " does not match " + std::to_string(width) + "x" + std::to_string(height));
    (slot == ncam ? seq.heldout_frames[t] : seq.frames[t][slot]) = std::move(img);
  }
  for (std::uint32_t t = 0; t < frames; ++t)
    for (std::size_t c = 0; c < ncam + (seq.heldout ? 1 : 0); ++c)
      if (!seen[t][c])
        throw FormatError(manifest.string() + ": frame " + std::to_string(t) + " lacks a view for camera " +
                          (c == ncam ? std::string("heldout") : std::to_string(c)));
  seq.validate();
  return seq;
}

}  // namespace solar
