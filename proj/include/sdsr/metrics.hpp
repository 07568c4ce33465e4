#pragma once

#include "sdsr/image.hpp"

namespace sdsr {

struct QualityScore {
  double psnr;  ///< dB; +infinity for identical images
  double ssim;
};

/// 10 log10(255^2 / MSE) over all pixels; +infinity when the images are identical.
double psnr(const Image& u, const Image& ref);

/// Local SSIM map over the "valid" region: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 255. The map is (h-10) x (w-10).
Image ssim_map(const Image& u, const Image& ref);

/// Mean of ssim_map. Both images need at least 11 rows and columns.
double ssim(const Image& u, const Image& ref);

QualityScore quality(const Image& u, const Image& ref);

}  // namespace sdsr
