#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdsr/framelet.hpp"
#include "sdsr/image.hpp"

namespace sdsr {

/// Detected support of framelet coefficients, laid out like CoefficientPyramid.
/// true means the coefficient is in the support I and is not penalized; false
/// means it belongs to the penalized complement T. The low-pass band is always true.
class SupportMask {
public:
  SupportMask() = default;
  /// High-pass entries set to `highpass_value`, low-pass entries true.
  SupportMask(int levels, int height, int width, bool highpass_value);

  int levels() const noexcept { return levels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return flags_.size(); }
  std::size_t highpass_size() const noexcept;

  std::span<const std::uint8_t> flags() const noexcept { return flags_; }
  std::span<std::uint8_t> flags() noexcept { return flags_; }

  bool in_support(std::size_t i) const noexcept { return flags_[i] != 0; }
  std::size_t support_count() const noexcept;  // |I| over high-pass bands

  bool congruent(const CoefficientPyramid& c) const noexcept {
    return levels_ == c.levels() && height_ == c.height() && width_ == c.width();
  }
  bool congruent(const SupportMask& m) const noexcept {
    return levels_ == m.levels_ && height_ == m.height_ && width_ == m.width_;
  }

  SupportMask complement() const;

  friend bool operator==(const SupportMask&, const SupportMask&) = default;

private:
  int levels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> flags_;
};

/// A high-pass index i is in I iff |(W ref)_i| > ||W ref||_inf / rho (strictly).
/// The norm scans every band including the low-pass one unless
/// `include_lowpass` is false; low-pass coefficients themselves are always in I.
SupportMask detect_support(const Image& ref, const FrameletSystem& sys, double rho, bool include_lowpass = true);
SupportMask detect_support(const CoefficientPyramid& coefficients, double rho, bool include_lowpass = true);

/// Fraction of high-pass coefficients on which the two masks agree.
double accuracy_rate(const SupportMask& detected, const SupportMask& oracle);

/// W^T applied to the 0/1 indicator of I (low-pass zeroed). Unscaled.
Image support_map(const SupportMask& mask, const FrameletSystem& sys);
/// support_map linearly rescaled to [0, 255] (an all-zero map stays zero).
Image support_map_image(const SupportMask& mask, const FrameletSystem& sys);

/// W^T (mask .* W true_img): keeps the true coefficients on I and the low-pass.
Image back_projection(const Image& true_img, const SupportMask& mask, const FrameletSystem& sys);

/// Writes the mask as one 0/255 PGM per band plus manifest.json into `dir`.
void dump_mask(const SupportMask& mask, const std::string& dir);

}  // namespace sdsr
