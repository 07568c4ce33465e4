// Straightforward serial framelet transform. Each band is computed pixel by
// pixel from the non-separable 3x3 tensor stencil, and the synthesis is the
// literal scatter form of the adjoint. Slow, but shares no index tables or
// loop structure with the OpenMP kernels in framelet.cpp.

#include <algorithm>

#include "sdsr/framelet.hpp"

namespace sdsr::reference {

namespace {

int reflect(long i, int n) {
  const long period = 2L * n;
  long r = i % period;
  if (r < 0) r += period;
  return static_cast<int>(r < n ? r : period - 1 - r);
}

}  // namespace

CoefficientPyramid analyze(int levels, const Image& u) {
  const int h = u.height();
  const int w = u.width();
  const auto& taps = FrameletFilters::taps();
  CoefficientPyramid out(levels, h, w);
  Image low = u;
  for (int level = 0; level < levels; ++level) {
    const long step = 1L << level;
    Image next(h, w);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const bool is_low = i == 0 && j == 0;
        for (int r = 0; r < h; ++r) {
          for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int a = 0; a < 3; ++a)
              for (int b = 0; b < 3; ++b)
                acc += taps[i][a] * taps[j][b] * low(reflect(r + (a - 1) * step, h), reflect(c + (b - 1) * step, w));
            if (is_low) {
              next(r, c) = acc;
            } else {
              out.band(out.band_index(level, i, j))[static_cast<std::size_t>(r) * w + c] = acc;
            }
          }
        }
      }
    }
    low = std::move(next);
  }
  std::copy(low.pixels().begin(), low.pixels().end(), out.lowpass().begin());
  return out;
}

Image synthesize(const CoefficientPyramid& c) {
  const int h = c.height();
  const int w = c.width();
  const auto& taps = FrameletFilters::taps();
  Image low = c.band_image(c.lowpass_index());
  for (int level = c.levels() - 1; level >= 0; --level) {
    const long step = 1L << level;
    Image up(h, w);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const bool is_low = i == 0 && j == 0;
        for (int r = 0; r < h; ++r) {
          for (int col = 0; col < w; ++col) {
            const double y = is_low ? low(r, col)
                                    : c.band(c.band_index(level, i, j))[static_cast<std::size_t>(r) * w + col];
            for (int a = 0; a < 3; ++a)
              for (int b = 0; b < 3; ++b)
                up(reflect(r + (a - 1) * step, h), reflect(col + (b - 1) * step, w)) += taps[i][a] * taps[j][b] * y;
          }
        }
      }
    }
    low = std::move(up);
  }
  return low;
}

}  // namespace sdsr::reference
