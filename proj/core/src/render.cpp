#include "solar/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>

#include "solar/errors.hpp"

namespace solar {

Camera Camera::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                       double focal, int width, int height) {
  const Eigen::Vector3d fwd = (target - eye).normalized();
  Eigen::Vector3d right = fwd.cross(up);
  if (right.norm() < 1e-12) throw ConfigError("look_at: up vector parallel to view direction");
  right.normalize();
  const Eigen::Vector3d down = fwd.cross(right);
  Camera cam;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = fwd.transpose();
  cam.translation = -cam.rotation * eye;
  cam.fx = cam.fy = focal;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.width = width;
  cam.height = height;
  return cam;
}

void Camera::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw ConfigError("camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ConfigError("camera resolution must be positive");
  const double ortho = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).norm();
  if (ortho > 1e-6) throw ConfigError("camera rotation is not orthonormal");
}

Eigen::Matrix3d quat_to_rotation(const Eigen::Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),   //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Eigen::Matrix3d covariance_3d(const GaussianPrimitive& g) {
  const Eigen::Matrix3d m = quat_to_rotation(g.r) * g.s.asDiagonal();
  return m * m.transpose();
}

namespace {

Eigen::Matrix<double, 2, 3> projection_jacobian(const Camera& cam, const Eigen::Vector3d& pc) {
  const double z = pc.z();
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx / z, 0.0, -cam.fx * pc.x() / (z * z),  //
      0.0, cam.fy / z, -cam.fy * pc.y() / (z * z);
  return j;
}

}  // namespace

std::optional<Projection> project(const GaussianPrimitive& g, const Camera& cam, const RenderOptions& opt) {
  const Eigen::Vector3d pc = cam.rotation * g.mu + cam.translation;
  if (pc.z() <= opt.near_plane) return std::nullopt;
  const Eigen::Matrix<double, 2, 3> t = projection_jacobian(cam, pc) * cam.rotation;
  Projection p;
  p.mean = Eigen::Vector2d(cam.fx * pc.x() / pc.z() + cam.cx, cam.fy * pc.y() / pc.z() + cam.cy);
  p.cov = t * covariance_3d(g) * t.transpose();
  p.cov(0, 0) += opt.cov_floor;
  p.cov(1, 1) += opt.cov_floor;
  p.depth = pc.z();
  return p;
}

double eval_gaussian_2d(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov, const Eigen::Vector2d& p) {
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  Eigen::Matrix2d inv;
  inv << cov(1, 1), -cov(0, 1), -cov(1, 0), cov(0, 0);
  inv /= det;
  const Eigen::Vector2d d = p - mean;
  return std::exp(-0.5 * d.dot(inv * d));
}

namespace {

Eigen::Matrix2d inverse_2x2(const Eigen::Matrix2d& m) {
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  Eigen::Matrix2d inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv / det;
}

RenderCache::Splat make_splat(const GaussianPrimitive& g, const Camera& cam, const RenderOptions& opt) {
  RenderCache::Splat s;
  if (!(g.alpha > 0.0)) return s;
  auto proj = project(g, cam, opt);
  if (!proj) return s;
  s.proj = *proj;
  s.conic = inverse_2x2(proj->cov);
  const double mid = 0.5 * (proj->cov(0, 0) + proj->cov(1, 1));
  const double det = proj->cov.determinant();
  const double lmax = mid + std::sqrt(std::max(0.0, mid * mid - det));
  const double radius = opt.radius_sigmas * std::sqrt(lmax);
  s.x0 = std::max(0, static_cast<int>(std::ceil(proj->mean.x() - radius)));
  s.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(proj->mean.x() + radius)));
  s.y0 = std::max(0, static_cast<int>(std::ceil(proj->mean.y() - radius)));
  s.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(proj->mean.y() + radius)));
  s.visible = s.x0 <= s.x1 && s.y0 <= s.y1;
  return s;
}

inline double splat_value(const RenderCache::Splat& s, double px, double py) {
  const double dx = px - s.proj.mean.x();
  const double dy = py - s.proj.mean.y();
  const double q = s.conic(0, 0) * dx * dx + (s.conic(0, 1) + s.conic(1, 0)) * dx * dy + s.conic(1, 1) * dy * dy;
  return std::exp(-0.5 * q);
}

}  // namespace

Image render(std::span<const GaussianPrimitive> gaussians, const Camera& cam, const RenderOptions& opt,
             RenderCache* cache) {
  RenderCache local;
  RenderCache& rc = cache ? *cache : local;
  const std::size_t npix = static_cast<std::size_t>(cam.width) * cam.height;

  rc.splats.resize(gaussians.size());
  for (std::size_t i = 0; i < gaussians.size(); ++i) rc.splats[i] = make_splat(gaussians[i], cam, opt);

  rc.order.clear();
  for (std::size_t i = 0; i < gaussians.size(); ++i)
    if (rc.splats[i].visible) rc.order.push_back(static_cast<std::uint32_t>(i));
  std::stable_sort(rc.order.begin(), rc.order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return rc.splats[a].proj.depth < rc.splats[b].proj.depth; });

  rc.pixel_entries.resize(npix);
  for (auto& e : rc.pixel_entries) e.clear();
  for (std::uint32_t gi : rc.order) {
    const auto& s = rc.splats[gi];
    const double alpha = gaussians[gi].alpha;
    for (int y = s.y0; y <= s.y1; ++y)
      for (int x = s.x0; x <= s.x1; ++x) {
        const double g = splat_value(s, x, y);
        if (alpha * g < opt.w_min) continue;
        rc.pixel_entries[static_cast<std::size_t>(y) * cam.width + x].push_back({gi, g, 0.0});
      }
  }

  Image img(cam.width, cam.height);
  rc.final_t.assign(npix, 1.0);
  for (std::size_t p = 0; p < npix; ++p) {
    double t = 1.0;
    double col[3] = {0.0, 0.0, 0.0};
    for (auto& e : rc.pixel_entries[p]) {
      const GaussianPrimitive& gp = gaussians[e.gaussian];
      const double w = gp.alpha * e.g;
      e.t = t;
      for (int ch = 0; ch < 3; ++ch) col[ch] += gp.c[ch] * w * t;
      t *= 1.0 - w;
    }
    rc.final_t[p] = t;
    for (int ch = 0; ch < 3; ++ch) img.pixels[p * 3 + ch] = col[ch] + opt.background[ch] * t;
  }
  return img;
}

namespace {

struct SplatAccum {
  Eigen::Vector2d d_mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d d_conic = Eigen::Matrix2d::Zero();
};

// Chain rule from the projected mean/conic back to mu, s and r.
void backprop_projection(const GaussianPrimitive& g, const Camera& cam, const RenderCache::Splat& s,
                         const SplatAccum& acc, GaussianGrad& out) {
  const Eigen::Vector3d pc = cam.rotation * g.mu + cam.translation;
  const double x = pc.x(), y = pc.y(), z = pc.z();
  const Eigen::Matrix<double, 2, 3> j = projection_jacobian(cam, pc);
  const Eigen::Matrix<double, 2, 3> t = j * cam.rotation;
  const Eigen::Matrix3d rq = quat_to_rotation(g.r);
  const Eigen::Matrix3d m = rq * g.s.asDiagonal();
  const Eigen::Matrix3d sigma = m * m.transpose();

  // conic = cov2d^-1  =>  dL/dcov2d = -conic^T dL/dconic conic^T
  const Eigen::Matrix2d d_cov2d = -s.conic.transpose() * acc.d_conic * s.conic.transpose();
  const Eigen::Matrix2d d_cov2d_sym = 0.5 * (d_cov2d + d_cov2d.transpose());

  const Eigen::Matrix3d d_sigma = t.transpose() * d_cov2d_sym * t;
  const Eigen::Matrix<double, 2, 3> d_t = 2.0 * d_cov2d_sym * t * sigma;
  const Eigen::Matrix<double, 2, 3> d_j = d_t * cam.rotation.transpose();

  Eigen::Vector3d d_pc = Eigen::Vector3d::Zero();
  const double z2 = z * z, z3 = z2 * z;
  d_pc.x() += d_j(0, 2) * (-cam.fx / z2);
  d_pc.y() += d_j(1, 2) * (-cam.fy / z2);
  d_pc.z() += d_j(0, 0) * (-cam.fx / z2) + d_j(0, 2) * (2.0 * cam.fx * x / z3) + d_j(1, 1) * (-cam.fy / z2) +
              d_j(1, 2) * (2.0 * cam.fy * y / z3);
  d_pc.x() += acc.d_mean.x() * cam.fx / z;
  d_pc.z() += acc.d_mean.x() * (-cam.fx * x / z2);
  d_pc.y() += acc.d_mean.y() * cam.fy / z;
  d_pc.z() += acc.d_mean.y() * (-cam.fy * y / z2);
  out.mu += cam.rotation.transpose() * d_pc;

  const Eigen::Matrix3d d_m = 2.0 * d_sigma * m;
  for (int k = 0; k < 3; ++k) out.s[k] += d_m.col(k).dot(rq.col(k));
  const Eigen::Matrix3d gr = d_m * g.s.asDiagonal();
  const double w = g.r[0], qx = g.r[1], qy = g.r[2], qz = g.r[3];
  out.r[0] += 2.0 * (-qz * gr(0, 1) + qy * gr(0, 2) + qz * gr(1, 0) - qx * gr(1, 2) - qy * gr(2, 0) + qx * gr(2, 1));
  out.r[1] += 2.0 * (qy * gr(0, 1) + qz * gr(0, 2) + qy * gr(1, 0) - 2.0 * qx * gr(1, 1) - w * gr(1, 2) +
                     qz * gr(2, 0) + w * gr(2, 1) - 2.0 * qx * gr(2, 2));
  out.r[2] += 2.0 * (-2.0 * qy * gr(0, 0) + qx * gr(0, 1) + w * gr(0, 2) + qx * gr(1, 0) + qz * gr(1, 2) -
                     w * gr(2, 0) + qz * gr(2, 1) - 2.0 * qy * gr(2, 2));
  out.r[3] += 2.0 * (-2.0 * qz * gr(0, 0) - w * gr(0, 1) + qx * gr(0, 2) + w * gr(1, 0) - 2.0 * qz * gr(1, 1) +
                     qy * gr(1, 2) + qx * gr(2, 0) + qy * gr(2, 1));
}

}  // namespace

std::vector<GaussianGrad> render_backward(std::span<const GaussianPrimitive> gaussians, const Camera& cam,
                                          const RenderCache& cache, const Image& dl_dimage, const RenderOptions& opt,
                                          std::span<const GaussianPrimitive> probes,
                                          std::vector<double>* probe_alpha_grad) {
  if (dl_dimage.width != cam.width || dl_dimage.height != cam.height)
    throw ShapeError("render_backward: gradient image size differs from camera");
  if (cache.splats.size() != gaussians.size()) throw Error("render_backward: cache does not match gaussians");

  std::vector<GaussianGrad> grads(gaussians.size());
  std::vector<SplatAccum> acc(gaussians.size());
  const std::size_t npix = static_cast<std::size_t>(cam.width) * cam.height;
  std::vector<std::vector<Eigen::Vector3d>> behind;  // back colour from each entry on, for probes
  if (!probes.empty()) behind.resize(npix);

  std::vector<Eigen::Vector3d> back_scratch;
  for (std::size_t p = 0; p < npix; ++p) {
    const auto& entries = cache.pixel_entries[p];
    if (entries.empty() && probes.empty()) continue;
    const Eigen::Vector3d dc(dl_dimage.pixels[p * 3], dl_dimage.pixels[p * 3 + 1], dl_dimage.pixels[p * 3 + 2]);
    const double px = static_cast<double>(p % cam.width);
    const double py = static_cast<double>(p / cam.width);
    Eigen::Vector3d back = opt.background;
    back_scratch.resize(entries.size());
    for (std::size_t k = entries.size(); k-- > 0;) {
      const auto& e = entries[k];
      const GaussianPrimitive& gp = gaussians[e.gaussian];
      const double w = gp.alpha * e.g;
      const double dl_dw = e.t * dc.dot(gp.c - back);
      GaussianGrad& gg = grads[e.gaussian];
      gg.c += (w * e.t) * dc;
      gg.alpha += e.g * dl_dw;
      const double dl_dg = gp.alpha * dl_dw;
      const auto& s = cache.splats[e.gaussian];
      const Eigen::Vector2d d(px - s.proj.mean.x(), py - s.proj.mean.y());
      // g = exp(-0.5 d^T C d)
      acc[e.gaussian].d_mean += dl_dg * e.g * (s.conic * d);
      acc[e.gaussian].d_conic += (-0.5 * dl_dg * e.g) * (d * d.transpose());
      back = gp.c * w + (1.0 - w) * back;
      back_scratch[k] = back;
    }
    if (!probes.empty()) behind[p] = back_scratch;
  }

  for (std::size_t i = 0; i < gaussians.size(); ++i)
    if (cache.splats[i].visible) backprop_projection(gaussians[i], cam, cache.splats[i], acc[i], grads[i]);

  if (probe_alpha_grad != nullptr) {
    probe_alpha_grad->assign(probes.size(), 0.0);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      GaussianPrimitive unit = probes[i];
      unit.alpha = 1.0;
      const auto s = make_splat(unit, cam, opt);
      if (!s.visible) continue;
      double total = 0.0;
      for (int y = s.y0; y <= s.y1; ++y)
        for (int x = s.x0; x <= s.x1; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * cam.width + x;
          const double g = splat_value(s, x, y);
          const auto& entries = cache.pixel_entries[p];
          // insertion point: first entry not strictly in front of the probe
          std::size_t k = 0;
          while (k < entries.size() && cache.splats[entries[k].gaussian].proj.depth < s.proj.depth) ++k;
          const double t = k < entries.size() ? entries[k].t : cache.final_t[p];
          const Eigen::Vector3d back = k < entries.size() ? behind[p][k] : opt.background;
          const Eigen::Vector3d dc(dl_dimage.pixels[p * 3], dl_dimage.pixels[p * 3 + 1], dl_dimage.pixels[p * 3 + 2]);
          total += g * t * dc.dot(probes[i].c - back);
        }
      (*probe_alpha_grad)[i] = total;
    }
  }
  return grads;
}

}  // namespace solar
