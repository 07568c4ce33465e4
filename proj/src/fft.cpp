#include "sdsr/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace sdsr {

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
std::unique_ptr<T[], FftwFree> aligned(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

}  // namespace

struct Fft2d::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (r2c != nullptr) fftw_destroy_plan(r2c);
    if (c2r != nullptr) fftw_destroy_plan(c2r);
  }
};

Fft2d::Fft2d(int height, int width) : height_(height), width_(width), plans_(std::make_unique<Plans>()) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("FFT dimensions must be positive");
  const std::size_t n = static_cast<std::size_t>(height) * width;
  auto real = aligned<double>(n);
  auto spec = aligned<fftw_complex>(spectrum_size());
  std::lock_guard lock(planner_mutex());
  plans_->r2c = fftw_plan_dft_r2c_2d(height, width, real.get(), spec.get(), FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r_2d(height, width, spec.get(), real.get(), FFTW_ESTIMATE);
  if (plans_->r2c == nullptr || plans_->c2r == nullptr) throw std::runtime_error("FFTW planning failed");
}

Fft2d::~Fft2d() = default;
Fft2d::Fft2d(Fft2d&&) noexcept = default;
Fft2d& Fft2d::operator=(Fft2d&&) noexcept = default;

std::size_t Fft2d::spectrum_size() const noexcept {
  return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_ / 2 + 1);
}

void Fft2d::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  if (in.size() != n || out.size() != spectrum_size()) throw std::invalid_argument("FFT size mismatch");
  auto real = aligned<double>(n);
  auto spec = aligned<fftw_complex>(spectrum_size());
  std::memcpy(real.get(), in.data(), n * sizeof(double));
  fftw_execute_dft_r2c(plans_->r2c, real.get(), spec.get());
  std::memcpy(static_cast<void*>(out.data()), spec.get(), spectrum_size() * sizeof(fftw_complex));
}

void Fft2d::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  if (out.size() != n || in.size() != spectrum_size()) throw std::invalid_argument("FFT size mismatch");
  auto real = aligned<double>(n);
  auto spec = aligned<fftw_complex>(spectrum_size());
  // c2r destroys its input, so it always works on the scratch copy.
  std::memcpy(spec.get(), in.data(), spectrum_size() * sizeof(fftw_complex));
  fftw_execute_dft_c2r(plans_->c2r, spec.get(), real.get());
  std::memcpy(out.data(), real.get(), n * sizeof(double));
}

}  // namespace sdsr
