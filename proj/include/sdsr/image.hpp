#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sdsr/error.hpp"

namespace sdsr {

/// Row-major grayscale image with real intensities, nominally in [0, 255].
///
/// Values are never clamped here; clamping happens only when writing an
/// 8-bit file.
class Image {
public:
  Image() = default;
  Image(int height, int width, double fill = 0.0);
  Image(int height, int width, std::vector<double> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(int row, int col) const { return data_[index(row, col)]; }
  double& operator()(int row, int col) { return data_[index(row, col)]; }

  std::span<const double> pixels() const noexcept { return data_; }
  std::span<double> pixels() noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Image&, const Image&) = default;

private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

void require_same_shape(const Image& a, const Image& b, const char* what);

// Elementwise arithmetic. All of these allocate a new image.
Image axpy(double alpha, const Image& x, const Image& y);  // alpha*x + y
Image add(const Image& x, const Image& y);
Image subtract(const Image& x, const Image& y);
Image scale(double alpha, const Image& x);

double inner(const Image& x, const Image& y);
double norm2(const Image& x);

/// Reads an 8-bit grayscale PGM (P5, maxval 255, or P2) or PNG file.
Image load_image(const std::string& path);

/// Writes a binary PGM after clamping to [0, 255] and rounding half away from zero.
void save_image(const Image& img, const std::string& path);

/// The byte value save_image stores for `v`.
unsigned char quantize_pixel(double v) noexcept;

}  // namespace sdsr
