#pragma once

// Reference compositing used as an oracle by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "solar/render.hpp"

namespace oracle {

using namespace solar;

inline double unif(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline GaussianPrimitive random_gaussian(std::mt19937_64& rng) {
  GaussianPrimitive g;
  for (int k = 0; k < 3; ++k) g.mu[k] = unif(rng, -0.5, 0.5);
  for (int k = 0; k < 3; ++k) g.s[k] = unif(rng, 0.05, 0.3);
  for (int k = 0; k < 4; ++k) g.r[k] = unif(rng, -1, 1);
  g.r.normalize();
  for (int k = 0; k < 3; ++k) g.c[k] = unif(rng, 0, 1);
  g.alpha = unif(rng, 0.1, 0.95);
  return g;
}

// Independent projection: Eigen quaternion, explicit pinhole Jacobian.
struct ScratchSplat {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
  double depth;
};

inline ScratchSplat scratch_project(const GaussianPrimitive& g, const Camera& cam, double floor) {
  const Eigen::Vector3d p = cam.rotation * g.mu + cam.translation;
  const Eigen::Matrix3d rq = Eigen::Quaterniond(g.r[0], g.r[1], g.r[2], g.r[3]).toRotationMatrix();
  const Eigen::Matrix3d sigma = rq * g.s.cwiseProduct(g.s).asDiagonal() * rq.transpose();
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx / p.z(), 0, -cam.fx * p.x() / (p.z() * p.z()), 0, cam.fy / p.z(), -cam.fy * p.y() / (p.z() * p.z());
  ScratchSplat s;
  s.mean = {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
  s.cov = j * cam.rotation * sigma * cam.rotation.transpose() * j.transpose();
  s.cov += floor * Eigen::Matrix2d::Identity();
  s.depth = p.z();
  return s;
}

// Front-to-back compositing evaluated term by term: C = sum_i c_i w_i prod_{j<i} (1 - w_j).
inline Image brute_force(const std::vector<GaussianPrimitive>& gs, const Camera& cam, const Eigen::Vector3d& bg) {
  std::vector<ScratchSplat> sp;
  for (const auto& g : gs) sp.push_back(scratch_project(g, cam, 0.3));
  std::vector<std::size_t> idx(gs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return sp[a].depth < sp[b].depth; });
  Image img(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      std::vector<double> w;
      for (auto i : idx) {
        const Eigen::Vector2d d = Eigen::Vector2d(x, y) - sp[i].mean;
        w.push_back(gs[i].alpha * std::exp(-0.5 * d.dot(sp[i].cov.inverse() * d)));
      }
      for (int ch = 0; ch < 3; ++ch) {
        double c = 0.0;
        for (std::size_t a = 0; a < idx.size(); ++a) {
          double trans = 1.0;
          for (std::size_t b = 0; b < a; ++b) trans *= 1.0 - w[b];
          c += gs[idx[a]].c[ch] * w[a] * trans;
        }
        double trans = 1.0;
        for (double v : w) trans *= 1.0 - v;
        img.at(x, y, ch) = c + bg[ch] * trans;
      }
    }
  return img;
}

inline RenderOptions unculled() {
  RenderOptions o;
  o.w_min = 0.0;
  o.radius_sigmas = 1e6;
  return o;
}

}  // namespace oracle
