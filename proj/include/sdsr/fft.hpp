#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace sdsr {

/// Real 2-D DFT of a fixed size backed by FFTW (estimate-mode plans, so the
/// arithmetic is identical from run to run). The half spectrum has
/// height x (width/2 + 1) entries. The inverse is unnormalized; callers divide by
/// height*width. Plans are immutable after construction and execute() is
/// thread-safe.
class Fft2d {
public:
  Fft2d(int height, int width);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;
  Fft2d(Fft2d&&) noexcept;
  Fft2d& operator=(Fft2d&&) noexcept;

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t spectrum_size() const noexcept;

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

private:
  struct Plans;
  int height_;
  int width_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace sdsr
