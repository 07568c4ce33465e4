#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sdsr/image.hpp"

namespace sdsr {

/// Linear B-spline framelet filter bank: h0 = [1,2,1]/4, h1 = sqrt(2)/4 [1,0,-1],
/// h2 = [-1,2,-1]/4. Filters are applied as correlations with taps at offsets
/// -1, 0, +1 (times the level dilation).
struct FrameletFilters {
  static const std::array<std::array<double, 3>, 3>& taps() noexcept;
};

/// Coefficients of an undecimated L-level framelet decomposition.
///
/// Storage is one contiguous buffer of (8L + 1) bands, each height x width.
/// Within a level the eight high-pass bands are ordered (i,j) lexicographically,
/// skipping (0,0): (0,1) (0,2) (1,0) (1,1) (1,2) (2,0) (2,1) (2,2). Here i is the
/// filter applied along columns (vertical) and j the filter along rows
/// (horizontal). The deepest level's (0,0) band is stored last.
class CoefficientPyramid {
public:
  static constexpr int kHighPassPerLevel = 8;

  CoefficientPyramid() = default;
  CoefficientPyramid(int levels, int height, int width, double fill = 0.0);

  int levels() const noexcept { return levels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int band_count() const noexcept { return kHighPassPerLevel * levels_ + 1; }
  std::size_t band_size() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t highpass_size() const noexcept { return band_size() * kHighPassPerLevel * levels_; }

  /// Band index for filter pair (i,j) at `level`; (0,0) is valid only at the deepest level.
  int band_index(int level, int i, int j) const;
  int lowpass_index() const noexcept { return kHighPassPerLevel * levels_; }

  std::span<double> band(int b);
  std::span<const double> band(int b) const;
  std::span<double> lowpass() { return band(lowpass_index()); }
  std::span<const double> lowpass() const { return band(lowpass_index()); }
  std::span<double> highpass() { return {data_.data(), highpass_size()}; }
  std::span<const double> highpass() const { return {data_.data(), highpass_size()}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  Image band_image(int b) const;

  bool same_shape(const CoefficientPyramid& o) const noexcept {
    return levels_ == o.levels_ && height_ == o.height_ && width_ == o.width_;
  }

  friend bool operator==(const CoefficientPyramid&, const CoefficientPyramid&) = default;

private:
  int levels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// (level, i, j) of band `b`; the low-pass band reports (levels-1, 0, 0).
struct BandLabel {
  int level;
  int i;
  int j;
};
BandLabel band_label(const CoefficientPyramid& c, int b);

void require_same_shape(const CoefficientPyramid& a, const CoefficientPyramid& b, const char* what);

/// Undecimated tensor-product B-spline framelet transform with symmetric
/// (half-sample) boundary extension. analyze() is W and synthesize() is its
/// exact adjoint W^T, with W^T W = I.
class FrameletSystem {
public:
  explicit FrameletSystem(int levels);

  int levels() const noexcept { return levels_; }

  CoefficientPyramid analyze(const Image& u) const;
  void analyze_into(const Image& u, CoefficientPyramid& out) const;

  Image synthesize(const CoefficientPyramid& c) const;
  void synthesize_into(const CoefficientPyramid& c, Image& out) const;

private:
  int levels_;
};

/// Largest absolute coefficient over the high-pass bands (and the low-pass band if requested).
double pyramid_linf(const CoefficientPyramid& c, bool include_lowpass);

CoefficientPyramid add(const CoefficientPyramid& x, const CoefficientPyramid& y);
CoefficientPyramid subtract(const CoefficientPyramid& x, const CoefficientPyramid& y);
CoefficientPyramid scale(double alpha, const CoefficientPyramid& x);
/// a*x + b*y
CoefficientPyramid lincomb(double a, const CoefficientPyramid& x, double b, const CoefficientPyramid& y);
double inner(const CoefficientPyramid& x, const CoefficientPyramid& y);

/// Writes one raw float64 grid per band plus manifest.json into `dir`.
void dump_pyramid(const CoefficientPyramid& c, const std::string& dir);
CoefficientPyramid load_pyramid(const std::string& dir);

namespace reference {

/// Serial implementations of analyze/synthesize kept as a cross-check for the
/// OpenMP kernels and as the benchmark baseline.
CoefficientPyramid analyze(int levels, const Image& u);
Image synthesize(const CoefficientPyramid& c);

}  // namespace reference

}  // namespace sdsr
