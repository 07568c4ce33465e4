#include "sdsr/support.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace sdsr {

SupportMask::SupportMask(int levels, int height, int width, bool highpass_value)
    : levels_(levels), height_(height), width_(width) {
  if (levels < 1 || height <= 0 || width <= 0) throw std::invalid_argument("invalid support mask shape");
  const std::size_t band = static_cast<std::size_t>(height) * width;
  flags_.assign(band * (CoefficientPyramid::kHighPassPerLevel * levels + 1), 1);
  std::fill_n(flags_.begin(), highpass_size(), highpass_value ? 1 : 0);
}

std::size_t SupportMask::highpass_size() const noexcept {
  return static_cast<std::size_t>(height_) * width_ * CoefficientPyramid::kHighPassPerLevel * levels_;
}

std::size_t SupportMask::support_count() const noexcept {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.begin() + highpass_size(), 1));
}

SupportMask SupportMask::complement() const {
  SupportMask out = *this;
  const std::size_t n = highpass_size();
  for (std::size_t i = 0; i < n; ++i) out.flags_[i] = flags_[i] ? 0 : 1;
  return out;
}

SupportMask detect_support(const CoefficientPyramid& coefficients, double rho, bool include_lowpass) {
  if (!(rho >= 1.0)) throw std::invalid_argument("support threshold ratio rho must be >= 1");
  SupportMask mask(coefficients.levels(), coefficients.height(), coefficients.width(), false);
  const double threshold = pyramid_linf(coefficients, include_lowpass) / rho;
  auto hp = coefficients.highpass();
  auto flags = mask.flags();
  const auto n = static_cast<std::ptrdiff_t>(hp.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) flags[i] = std::abs(hp[i]) > threshold ? 1 : 0;
  return mask;
}

SupportMask detect_support(const Image& ref, const FrameletSystem& sys, double rho, bool include_lowpass) {
  return detect_support(sys.analyze(ref), rho, include_lowpass);
}

double accuracy_rate(const SupportMask& detected, const SupportMask& oracle) {
  if (!detected.congruent(oracle)) throw ShapeError("accuracy_rate: mask shape mismatch");
  const std::size_t n = detected.highpass_size();
  auto a = detected.flags();
  auto b = oracle.flags();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) agree += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(n);
}

Image support_map(const SupportMask& mask, const FrameletSystem& sys) {
  CoefficientPyramid c(mask.levels(), mask.height(), mask.width());
  auto flags = mask.flags();
  auto hp = c.highpass();
  for (std::size_t i = 0; i < hp.size(); ++i) hp[i] = flags[i] ? 1.0 : 0.0;
  return sys.synthesize(c);
}

Image support_map_image(const SupportMask& mask, const FrameletSystem& sys) {
  Image map = support_map(mask, sys);
  auto px = map.pixels();
  const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
  const double min = *lo;
  const double range = *hi - *lo;
  if (range <= 0.0) {
    std::fill(px.begin(), px.end(), 0.0);
    return map;
  }
  for (double& v : px) v = 255.0 * (v - min) / range;
  return map;
}

Image back_projection(const Image& true_img, const SupportMask& mask, const FrameletSystem& sys) {
  CoefficientPyramid c = sys.analyze(true_img);
  if (!mask.congruent(c)) throw ShapeError("back_projection: mask does not match image/system");
  auto flags = mask.flags();
  auto hp = c.highpass();
  for (std::size_t i = 0; i < hp.size(); ++i)
    if (!flags[i]) hp[i] = 0.0;
  return sys.synthesize(c);
}

void dump_mask(const SupportMask& mask, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  CoefficientPyramid shape(mask.levels(), mask.height(), mask.width());
  const std::size_t band = shape.band_size();
  nlohmann::json manifest;
  manifest["format"] = "sdsr-support-mask";
  manifest["version"] = 1;
  manifest["levels"] = mask.levels();
  manifest["height"] = mask.height();
  manifest["width"] = mask.width();
  manifest["support_count"] = mask.support_count();
  manifest["bands"] = nlohmann::json::array();
  for (int b = 0; b < shape.band_count(); ++b) {
    const auto label = band_label(shape, b);
    Image img(mask.height(), mask.width());
    auto px = img.pixels();
    for (std::size_t i = 0; i < band; ++i) px[i] = mask.flags()[b * band + i] ? 255.0 : 0.0;
    char name[32];
    std::snprintf(name, sizeof(name), "band_%03d.pgm", b);
    save_image(img, (fs::path(dir) / name).string());
    manifest["bands"].push_back({{"index", b},
                                 {"level", label.level},
                                 {"i", label.i},
                                 {"j", label.j},
                                 {"lowpass", b == shape.lowpass_index()},
                                 {"file", name}});
  }
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw IoError("unwritable path: " + dir);
  out << manifest.dump(2) << '\n';
}

}  // namespace sdsr
