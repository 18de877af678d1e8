#pragma once

// Differentiable Gaussian splatting on the CPU: pinhole projection with
// EWA covariance propagation, depth-sorted front-to-back alpha compositing,
// and an exact analytic backward pass.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace solar {

struct GaussianPrimitive {
  Eigen::Vector3d mu = Eigen::Vector3d::Zero();
  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  Eigen::Vector4d r{1.0, 0.0, 0.0, 0.0};  // (w, x, y, z)
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  double alpha = 0.0;
};

struct GaussianGrad {
  Eigen::Vector3d mu = Eigen::Vector3d::Zero();
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  Eigen::Vector4d r = Eigen::Vector4d::Zero();
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  double alpha = 0.0;
};

/// Pinhole camera, OpenCV axes (x right, y down, z forward). Pixel (u, v) is
/// centred at integer coordinates.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // world -> camera
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  int width = 0;
  int height = 0;

  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
  /// Camera forward axis expressed in world coordinates.
  Eigen::Vector3d view_dir() const { return rotation.row(2).transpose(); }

  static Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                        double focal, int width, int height);
  void validate() const;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major RGB

  Image() = default;
  Image(int w, int h, double fill = 0.0) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  double& at(int x, int y, int ch) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch]; }
  double at(int x, int y, int ch) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch]; }
  bool same_size(const Image& o) const { return width == o.width && height == o.height; }
  bool operator==(const Image& o) const = default;
};

struct RenderOptions {
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  double cov_floor = 0.3;        // px^2 added to the projected covariance diagonal
  double w_min = 1.0 / 255.0;    // contributions below this weight are skipped
  double radius_sigmas = 3.0;
  double near_plane = 0.01;
};

struct Projection {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
  double depth = 0.0;
};

/// Quaternion (w, x, y, z) to rotation matrix; exact for unit quaternions.
Eigen::Matrix3d quat_to_rotation(const Eigen::Vector4d& q);
Eigen::Matrix3d covariance_3d(const GaussianPrimitive& g);

/// Empty when the Gaussian is at or behind the near plane (culled).
std::optional<Projection> project(const GaussianPrimitive& g, const Camera& cam, const RenderOptions& opt = {});

double eval_gaussian_2d(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov, const Eigen::Vector2d& p);

/// Per-pixel front-to-back state recorded by render() for render_backward().
struct RenderCache {
  struct Entry {
    std::uint32_t gaussian;
    double g;   // 2D Gaussian value at the pixel
    double t;   // transmittance in front of this contribution
  };
  struct Splat {
    bool visible = false;
    Projection proj;
    Eigen::Matrix2d conic;
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
  };
  std::vector<Splat> splats;
  std::vector<std::uint32_t> order;              // depth order of input indices
  std::vector<std::vector<Entry>> pixel_entries;  // per pixel, front to back
  std::vector<double> final_t;
};

Image render(std::span<const GaussianPrimitive> gaussians, const Camera& cam, const RenderOptions& opt = {},
             RenderCache* cache = nullptr);

/// Gradients of a scalar loss w.r.t. every attribute of every Gaussian, given
/// dL/dImage and the cache from the matching render() call.
///
/// `probes` are Gaussians that were rendered with zero opacity. For each one
/// the derivative of the loss w.r.t. its opacity at zero is returned in
/// `probe_alpha_grad`, evaluated as if it were inserted into the depth order
/// with its own footprint.
std::vector<GaussianGrad> render_backward(std::span<const GaussianPrimitive> gaussians, const Camera& cam,
                                          const RenderCache& cache, const Image& dl_dimage,
                                          const RenderOptions& opt = {},
                                          std::span<const GaussianPrimitive> probes = {},
                                          std::vector<double>* probe_alpha_grad = nullptr);

}  // namespace solar
