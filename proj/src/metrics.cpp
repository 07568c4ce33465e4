#include "sdsr/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "sdsr/parallel.hpp"

namespace sdsr {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;
constexpr double kRange = 255.0;

const std::array<double, kWindow>& gaussian_window() {
  static const std::array<double, kWindow> w = [] {
    std::array<double, kWindow> g{};
    double s = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double x = i - kWindow / 2;
      g[i] = std::exp(-x * x / (2.0 * kWindowSigma * kWindowSigma));
      s += g[i];
    }
    for (double& v : g) v /= s;
    return g;
  }();
  return w;
}

// Separable "valid" correlation with the Gaussian window.
std::vector<double> filter_valid(const std::vector<double>& in, int h, int w) {
  const auto& g = gaussian_window();
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < ow; ++c) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * in[static_cast<std::size_t>(r) * w + c + k];
      rows[static_cast<std::size_t>(r) * ow + c] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * rows[static_cast<std::size_t>(r + k) * ow + c];
      out[static_cast<std::size_t>(r) * ow + c] = s;
    }
  return out;
}

}  // namespace

double psnr(const Image& u, const Image& ref) {
  require_same_shape(u, ref, "psnr");
  const double mse = par::sum_squared_diff(u.pixels(), ref.pixels()) / static_cast<double>(u.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kRange * kRange / mse);
}

Image ssim_map(const Image& u, const Image& ref) {
  require_same_shape(u, ref, "ssim");
  const int h = u.height();
  const int w = u.width();
  if (h < kWindow || w < kWindow) throw std::invalid_argument("ssim: image too small (need at least 11x11)");
  const std::size_t n = u.size();
  std::vector<double> x(u.pixels().begin(), u.pixels().end());
  std::vector<double> y(ref.pixels().begin(), ref.pixels().end());
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, h, w);
  const auto my = filter_valid(y, h, w);
  const auto sxx = filter_valid(xx, h, w);
  const auto syy = filter_valid(yy, h, w);
  const auto sxy = filter_valid(xy, h, w);

  const double c1 = (kK1 * kRange) * (kK1 * kRange);
  const double c2 = (kK2 * kRange) * (kK2 * kRange);
  Image map(h - kWindow + 1, w - kWindow + 1);
  auto out = map.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m1 = mx[i];
    const double m2 = my[i];
    const double v1 = sxx[i] - m1 * m1;
    const double v2 = syy[i] - m2 * m2;
    const double cov = sxy[i] - m1 * m2;
    out[i] = ((2.0 * m1 * m2 + c1) * (2.0 * cov + c2)) / ((m1 * m1 + m2 * m2 + c1) * (v1 + v2 + c2));
  }
  return map;
}

double ssim(const Image& u, const Image& ref) {
  const Image map = ssim_map(u, ref);
  double s = 0.0;
  for (double v : map.pixels()) s += v;
  return s / static_cast<double>(map.size());
}

QualityScore quality(const Image& u, const Image& ref) { return {psnr(u, ref), ssim(u, ref)}; }

}  // namespace sdsr
