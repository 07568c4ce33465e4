#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sdsr/fft.hpp"
#include "sdsr/image.hpp"

namespace sdsr {

enum class PsfKind {
  inverse_quadratic_15,  ///< 15x15, w = 1/(z1^2 + z2^2), center weight 1
  uniform_9,             ///< 9x9 box
  gaussian_25_sigma1p6,  ///< 25x25 Gaussian, sigma 1.6
  motion_15_angle30,     ///< anti-aliased line, length 15, 30 degrees
};

std::string to_string(PsfKind kind);
PsfKind parse_psf_kind(const std::string& name);

/// Point spread function with odd dimensions whose weights sum to 1.
struct Psf {
  int height = 0;
  int width = 0;
  std::vector<double> weights;  // row-major

  double at(int row, int col) const { return weights[static_cast<std::size_t>(row) * width + col]; }
  int center_row() const noexcept { return height / 2; }
  int center_col() const noexcept { return width / 2; }
  double sum() const;
};

Psf make_psf(PsfKind kind);
Psf gaussian_psf(int size, double sigma);
/// Linear motion blur of `length` pixels at `angle_degrees` counter-clockwise
/// from the horizontal, with pixels weighted by their distance to the ideal line.
Psf motion_psf(double length, double angle_degrees);
/// Unit impulse (identity blur).
Psf delta_psf();

/// Row-major decimal text grid, one PSF row per line.
std::string psf_to_text(const Psf& psf);

/// One row of the benchmark degradation table.
struct Scenario {
  int id;
  PsfKind psf;
  double sigma;
};

/// Scenarios 1..8: each PSF appears twice, first with sigma = sqrt(2) then sigma = 2.
Scenario scenario(int id);

/// Circular convolution with a PSF on a fixed image size, diagonalized by the DFT.
class BlurOperator {
public:
  BlurOperator(Psf psf, int height, int width);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  const Psf& psf() const noexcept { return psf_; }
  /// Half spectrum (height x (width/2+1)) of the PSF embedded with its center at the origin.
  std::span<const std::complex<double>> otf() const noexcept { return otf_; }
  const Fft2d& fft() const noexcept { return *fft_; }

  Image apply(const Image& u) const;
  Image apply_adjoint(const Image& v) const;

private:
  Image multiply(const Image& u, bool conjugate) const;

  Psf psf_;
  int height_;
  int width_;
  std::shared_ptr<const Fft2d> fft_;
  std::vector<std::complex<double>> otf_;
};

/// Bit-reproducible N(0,1) stream: std::mt19937_64 feeding a Box-Muller
/// transform (53-bit uniforms, both outputs of each pair used).
class NormalStream {
public:
  explicit NormalStream(std::uint64_t seed);
  double next();

private:
  struct State;
  std::shared_ptr<State> state_;
};

/// f = A u + sigma * n with n drawn from NormalStream(seed) in row-major order.
Image degrade(const Image& u, const BlurOperator& op, double sigma, std::uint64_t seed);
Image degrade(const Image& u, const Scenario& sc, std::uint64_t seed);

}  // namespace sdsr
