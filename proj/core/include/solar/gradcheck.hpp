#pragma once

// Central finite-difference checks of every analytic gradient path. Scenes are
// drawn with the skip threshold disabled and a wide support radius, so the
// loss is smooth in every checked coordinate.

#include <cstdint>
#include <functional>
#include <string>

namespace solar {

struct GradCheckStats {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_rel = 0.0;
  double max_grad = 0.0;  // largest |analytic| seen
  std::string worst;

  bool ok() const { return checked > 0 && failed == 0 && max_grad > 0.0; }
  void merge(const GradCheckStats& o);
};

inline constexpr double kFdStep = 1e-5;
inline constexpr double kGradRelTol = 1e-4;
inline constexpr double kGradAbsTol = 1e-7;

/// Passes if |a - n| < abs_tol or |a - n| / max(|a|, |n|) < rel_tol.
void compare_gradient(GradCheckStats& stats, double analytic, double numeric, const std::string& where,
                      double rel_tol = kGradRelTol, double abs_tol = kGradAbsTol);

/// (f(x + h) - f(x - h)) / 2h, restoring x afterwards.
double central_difference(const std::function<double()>& f, double& x, double h = kFdStep);

GradCheckStats check_render_gradients(std::uint64_t seed);
GradCheckStats check_attribute_net_gradients(std::uint64_t seed);
GradCheckStats check_mask_net_gradients(std::uint64_t seed);
GradCheckStats check_btc_gradients(std::uint64_t seed);
GradCheckStats check_loss_gradients(std::uint64_t seed);

}  // namespace solar
