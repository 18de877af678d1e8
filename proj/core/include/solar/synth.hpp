#pragma once

// Synthetic multi-view ground truth: analytic Gaussian scenes with scripted
// motion, rendered by the same rasterizer the codec uses.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "solar/pipeline.hpp"
#include "solar/render.hpp"

namespace solar {

struct Track {
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();   // per frame
  Eigen::Vector3d amplitude = Eigen::Vector3d::Zero();  // sinusoidal articulation
  double period = 1.0;                                  // frames
  double phase = 0.0;                                   // radians
  /// Half-open frame intervals [begin, end) during which alpha is exactly 0.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> hidden;
};

struct SceneScript {
  std::string name = "custom";
  std::uint32_t frame_count = 10;
  int width = 48;
  int height = 48;
  double focal = 52.0;
  std::size_t camera_count = 4;
  double ring_radius = 3.2;
  double ring_height = 1.0;
  std::optional<double> heldout_azimuth = 0.785398163397448;  // radians; nullopt disables
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d bbox_min = Eigen::Vector3d::Constant(-1.0);
  Eigen::Vector3d bbox_max = Eigen::Vector3d::Constant(1.0);
  std::vector<GaussianPrimitive> gaussians;  // state at frame 0
  std::vector<Track> tracks;                 // one per Gaussian

  void validate() const;
};

/// Parses the scene-script text format; errors name the line number.
SceneScript parse_script(const std::string& text, const std::string& source = "script");
SceneScript load_script(const std::filesystem::path& path);

/// Built-in fixtures: "static", "drift", "vanish".
std::vector<std::string> builtin_script_names();
const std::string& builtin_script_text(const std::string& name);
SceneScript builtin_script(const std::string& name);

std::vector<GaussianPrimitive> gaussians_at(const SceneScript& s, std::uint32_t t);
std::vector<Camera> ring_cameras(const SceneScript& s);
std::optional<Camera> heldout_camera(const SceneScript& s);

/// In-memory rendering of the whole script, 8-bit quantized like the files.
Sequence make_sequence(const SceneScript& s);

/// Writes frames/<t>_<cam>.ppm and manifest.txt into out_dir.
void generate(const SceneScript& s, const std::filesystem::path& out_dir);
Sequence load_sequence(const std::filesystem::path& manifest);

}  // namespace solar
