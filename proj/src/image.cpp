#include "sdsr/image.hpp"

#include <cmath>
#include <string>

#include "sdsr/parallel.hpp"

namespace sdsr {

Image::Image(int height, int width, double fill) : height_(height), width_(width) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("image dimensions must be positive");
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

Image::Image(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
    throw ShapeError("image data length does not match its dimensions");
}

bool Image::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
  }
}

namespace {

template <typename Fn>
Image zip(const Image& x, const Image& y, const char* what, Fn&& fn) {
  require_same_shape(x, y, what);
  Image out(x.height(), x.width());
  auto xs = x.pixels();
  auto ys = y.pixels();
  auto os = out.pixels();
  const auto n = static_cast<std::ptrdiff_t>(os.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) os[i] = fn(xs[i], ys[i]);
  return out;
}

}  // namespace

Image axpy(double alpha, const Image& x, const Image& y) {
  return zip(x, y, "axpy", [alpha](double a, double b) { return alpha * a + b; });
}

Image add(const Image& x, const Image& y) {
  return zip(x, y, "add", [](double a, double b) { return a + b; });
}

Image subtract(const Image& x, const Image& y) {
  return zip(x, y, "subtract", [](double a, double b) { return a - b; });
}

Image scale(double alpha, const Image& x) {
  Image out = x;
  for (double& v : out.pixels()) v *= alpha;
  return out;
}

double inner(const Image& x, const Image& y) {
  require_same_shape(x, y, "inner");
  return par::dot(x.pixels(), y.pixels());
}

double norm2(const Image& x) { return std::sqrt(par::sum_squares(x.pixels())); }

}  // namespace sdsr
