#include "solar/losses.hpp"

#include <cmath>

#include "solar/autodiff.hpp"
#include "solar/errors.hpp"

namespace solar {

void LossWeights::validate() const {
  if (lambda_ssim < 0 || lambda_ssim >= 1) throw ConfigError("lambda_ssim must lie in [0, 1)");
  if (lambda_e < 0 || lambda_s < 0) throw ConfigError("loss weights must be non-negative");
}

namespace {

void require_same(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw ShapeError("image dimensions differ");
}

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// Plane of size h x w stored row-major.
struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  Plane(int ww, int hh) : w(ww), h(hh), v(static_cast<std::size_t>(ww) * hh, 0.0) {}
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Valid separable correlation: output (w - n + 1) x (h - n + 1).
Plane filter_valid(const Plane& in, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  Plane tmp(in.w - n + 1, in.h);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < tmp.w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * in.at(x + i, y);
      tmp.at(x, y) = acc;
    }
  Plane out(tmp.w, in.h - n + 1);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * tmp.at(x, y + i);
      out.at(x, y) = acc;
    }
  return out;
}

// Adjoint of filter_valid: scatters a window map back onto the full plane.
Plane filter_adjoint(const Plane& in, const std::vector<double>& k, int w, int h) {
  const int n = static_cast<int>(k.size());
  Plane tmp(in.w, h);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int i = 0; i < n; ++i) tmp.at(x, y + i) += k[i] * in.at(x, y);
  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int i = 0; i < n; ++i) out.at(x + i, y) += k[i] * tmp.at(x, y);
  return out;
}

Plane channel(const Image& img, int ch) {
  Plane p(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p.at(x, y) = img.at(x, y, ch);
  return p;
}

}  // namespace

std::vector<double> ssim_taps() {
  std::vector<double> k(kSsimWindow);
  double sum = 0.0;
  const int half = kSsimWindow / 2;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

double l1_loss(const Image& a, const Image& b, Image* grad) {
  require_same(a, b);
  const double n = static_cast<double>(a.pixels.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) acc += std::abs(a.pixels[i] - b.pixels[i]);
  if (grad) {
    *grad = Image(a.width, a.height);
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
      const double d = a.pixels[i] - b.pixels[i];
      grad->pixels[i] = (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) / n;
    }
  }
  return acc / n;
}

double ssim(const Image& a, const Image& b, Image* grad) {
  require_same(a, b);
  if (a.width < kSsimWindow || a.height < kSsimWindow) throw ShapeError("image smaller than the SSIM window");
  const auto k = ssim_taps();
  const int ow = a.width - kSsimWindow + 1;
  const int oh = a.height - kSsimWindow + 1;
  const double norm = 1.0 / (3.0 * ow * oh);
  if (grad) *grad = Image(a.width, a.height);

  double total = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    const Plane x = channel(a, ch);
    const Plane y = channel(b, ch);
    Plane xx(x.w, x.h), yy(x.w, x.h), xy(x.w, x.h);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      xx.v[i] = x.v[i] * x.v[i];
      yy.v[i] = y.v[i] * y.v[i];
      xy.v[i] = x.v[i] * y.v[i];
    }
    const Plane mx = filter_valid(x, k), my = filter_valid(y, k);
    const Plane exx = filter_valid(xx, k), eyy = filter_valid(yy, k), exy = filter_valid(xy, k);
    Plane g_mx(ow, oh), g_exx(ow, oh), g_exy(ow, oh);
    for (std::size_t i = 0; i < mx.v.size(); ++i) {
      const double ux = mx.v[i], uy = my.v[i];
      const double a1 = 2.0 * ux * uy + kC1;
      const double a2 = 2.0 * (exy.v[i] - ux * uy) + kC2;
      const double b1 = ux * ux + uy * uy + kC1;
      const double b2 = (exx.v[i] - ux * ux) + (eyy.v[i] - uy * uy) + kC2;
      const double s = (a1 * a2) / (b1 * b2);
      total += s;
      // Identical window statistics give s = 1, the maximum, where the gradient vanishes.
      if (grad && ux == uy && exx.v[i] == eyy.v[i] && exx.v[i] == exy.v[i]) continue;
      if (grad) {
        g_mx.v[i] = norm * ((2.0 * uy * a2 - 2.0 * uy * a1) / (b1 * b2) - s * (2.0 * ux / b1 - 2.0 * ux / b2));
        g_exx.v[i] = norm * (-s / b2);
        g_exy.v[i] = norm * (2.0 * a1 / (b1 * b2));
      }
    }
    if (grad) {
      const Plane gm = filter_adjoint(g_mx, k, a.width, a.height);
      const Plane gxx = filter_adjoint(g_exx, k, a.width, a.height);
      const Plane gxy = filter_adjoint(g_exy, k, a.width, a.height);
      for (int yy_ = 0; yy_ < a.height; ++yy_)
        for (int xx_ = 0; xx_ < a.width; ++xx_)
          grad->at(xx_, yy_, ch) =
              gm.at(xx_, yy_) + 2.0 * x.at(xx_, yy_) * gxx.at(xx_, yy_) + y.at(xx_, yy_) * gxy.at(xx_, yy_);
    }
  }
  return total * norm;
}

double rendering_loss(const Image& pred, const Image& gt, const LossWeights& w, Image* grad) {
  Image g1, gs;
  const double l1 = l1_loss(pred, gt, grad ? &g1 : nullptr);
  double s = 1.0;
  if (w.lambda_ssim > 0) s = ssim(pred, gt, grad ? &gs : nullptr);
  if (grad) {
    *grad = Image(pred.width, pred.height);
    for (std::size_t i = 0; i < grad->pixels.size(); ++i) {
      grad->pixels[i] = (1.0 - w.lambda_ssim) * g1.pixels[i];
      if (w.lambda_ssim > 0) grad->pixels[i] -= w.lambda_ssim * gs.pixels[i];
    }
  }
  return (1.0 - w.lambda_ssim) * l1 + w.lambda_ssim * (1.0 - s);
}

double sparsity_loss(std::span<const double> scores, std::vector<double>* grad) {
  if (scores.empty()) throw ShapeError("sparsity loss of an empty anchor set");
  const double n = static_cast<double>(scores.size());
  double acc = 0.0;
  if (grad) grad->assign(scores.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = sigmoid(scores[i]);
    acc += s;
    if (grad) (*grad)[i] = s * (1.0 - s) / n;
  }
  return acc / n;
}

double total_loss(double rendering, double entropy, double sparsity, const LossWeights& w) {
  return rendering + w.lambda_e * entropy + w.lambda_s * sparsity;
}

double psnr(const Image& pred, const Image& gt) {
  require_same(pred, gt);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
    const double d = pred.pixels[i] - gt.pixels[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(pred.pixels.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

}  // namespace solar
