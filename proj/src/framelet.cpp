#include "sdsr/framelet.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sdsr/parallel.hpp"
#include "sdsr/raw_io.hpp"

namespace sdsr {

const std::array<std::array<double, 3>, 3>& FrameletFilters::taps() noexcept {
  static const std::array<std::array<double, 3>, 3> kTaps = {{
      {0.25, 0.5, 0.25},
      {std::sqrt(2.0) / 4.0, 0.0, -std::sqrt(2.0) / 4.0},
      {-0.25, 0.5, -0.25},
  }};
  return kTaps;
}

// ---------------------------------------------------------------------------
// CoefficientPyramid

CoefficientPyramid::CoefficientPyramid(int levels, int height, int width, double fill)
    : levels_(levels), height_(height), width_(width) {
  if (levels < 1) throw std::invalid_argument("framelet levels must be >= 1");
  if (height <= 0 || width <= 0) throw std::invalid_argument("pyramid dimensions must be positive");
  data_.assign(band_size() * static_cast<std::size_t>(band_count()), fill);
}

int CoefficientPyramid::band_index(int level, int i, int j) const {
  if (level < 0 || level >= levels_ || i < 0 || i > 2 || j < 0 || j > 2)
    throw std::out_of_range("band (level,i,j) out of range");
  if (i == 0 && j == 0) {
    if (level != levels_ - 1) throw std::out_of_range("(0,0) band is kept only at the deepest level");
    return lowpass_index();
  }
  return level * kHighPassPerLevel + (3 * i + j - 1);
}

std::span<double> CoefficientPyramid::band(int b) {
  if (b < 0 || b >= band_count()) throw std::out_of_range("band index out of range");
  return {data_.data() + static_cast<std::size_t>(b) * band_size(), band_size()};
}

std::span<const double> CoefficientPyramid::band(int b) const {
  if (b < 0 || b >= band_count()) throw std::out_of_range("band index out of range");
  return {data_.data() + static_cast<std::size_t>(b) * band_size(), band_size()};
}

Image CoefficientPyramid::band_image(int b) const {
  auto s = band(b);
  return Image(height_, width_, std::vector<double>(s.begin(), s.end()));
}

BandLabel band_label(const CoefficientPyramid& c, int b) {
  if (b == c.lowpass_index()) return {c.levels() - 1, 0, 0};
  const int level = b / CoefficientPyramid::kHighPassPerLevel;
  const int k = b % CoefficientPyramid::kHighPassPerLevel + 1;
  return {level, k / 3, k % 3};
}

void require_same_shape(const CoefficientPyramid& a, const CoefficientPyramid& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": pyramid shape mismatch");
}

// ---------------------------------------------------------------------------
// Boundary handling

namespace {

// Half-sample symmetric extension: ... x1 x0 | x0 x1 ... x_{n-1} | x_{n-1} x_{n-2} ...
// which is 2n-periodic, so any offset folds back into [0, n).
int reflect(long i, int n) {
  const long period = 2L * n;
  long r = i % period;
  if (r < 0) r += period;
  return static_cast<int>(r < n ? r : period - 1 - r);
}

long mod(long i, long p) {
  long r = i % p;
  return r < 0 ? r + p : r;
}

using Taps = std::array<std::array<double, 3>, 3>;

// Source index of tap k for each output position.
struct ForwardIndex {
  std::array<std::vector<int>, 3> at;
};

ForwardIndex forward_index(int n, int step) {
  ForwardIndex fi;
  for (int k = 0; k < 3; ++k) {
    fi.at[k].resize(n);
    for (int m = 0; m < n; ++m) fi.at[k][m] = reflect(m + static_cast<long>(k - 1) * step, n);
  }
  return fi;
}

// The adjoint of y_m = sum_k h_k x[reflect(m + d_k)] gathers, for each n,
// y at the (at most two) positions congruent to n - d_k and 2n-1-n - d_k
// modulo 2n that fall inside [0, n). -1 marks an absent contribution.
struct AdjointIndex {
  std::array<std::vector<int>, 3> first;
  std::array<std::vector<int>, 3> second;
};

AdjointIndex adjoint_index(int n, int step) {
  AdjointIndex ai;
  const long period = 2L * n;
  for (int k = 0; k < 3; ++k) {
    const long d = static_cast<long>(k - 1) * step;
    ai.first[k].resize(n);
    ai.second[k].resize(n);
    for (int m = 0; m < n; ++m) {
      const long a = mod(m - d, period);
      const long b = mod(period - 1 - m - d, period);
      ai.first[k][m] = a < n ? static_cast<int>(a) : -1;
      ai.second[k][m] = b < n ? static_cast<int>(b) : -1;
    }
  }
  return ai;
}

// out[r, :] = sum_k h[k] * in[r, idx[k][:]]
void filter_rows(const double* in, double* out, int height, int width, const std::array<double, 3>& h,
                 const ForwardIndex& fi) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    const double* src = in + static_cast<std::size_t>(r) * width;
    double* dst = out + static_cast<std::size_t>(r) * width;
    const int* i0 = fi.at[0].data();
    const int* i1 = fi.at[1].data();
    const int* i2 = fi.at[2].data();
    for (int c = 0; c < width; ++c) dst[c] = h[0] * src[i0[c]] + h[1] * src[i1[c]] + h[2] * src[i2[c]];
  }
}

// out[:, c] = sum_k h[k] * in[idx[k][:], c]
void filter_cols(const double* in, double* out, int height, int width, const std::array<double, 3>& h,
                 const ForwardIndex& fi) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    const double* a = in + static_cast<std::size_t>(fi.at[0][r]) * width;
    const double* b = in + static_cast<std::size_t>(fi.at[1][r]) * width;
    const double* c = in + static_cast<std::size_t>(fi.at[2][r]) * width;
    double* dst = out + static_cast<std::size_t>(r) * width;
    for (int x = 0; x < width; ++x) dst[x] = h[0] * a[x] + h[1] * b[x] + h[2] * c[x];
  }
}

// out[r, :] += adjoint of filter_rows applied to in
void adjoint_rows_accumulate(const double* in, double* out, int height, int width,
                             const std::array<double, 3>& h, const AdjointIndex& ai) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    const double* src = in + static_cast<std::size_t>(r) * width;
    double* dst = out + static_cast<std::size_t>(r) * width;
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) {
        if (h[k] == 0.0) continue;
        double s = 0.0;
        if (const int p = ai.first[k][c]; p >= 0) s += src[p];
        if (const int q = ai.second[k][c]; q >= 0) s += src[q];
        acc += h[k] * s;
      }
      dst[c] += acc;
    }
  }
}

// out[:, c] += adjoint of filter_cols applied to in
void adjoint_cols_accumulate(const double* in, double* out, int height, int width,
                             const std::array<double, 3>& h, const AdjointIndex& ai) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    double* dst = out + static_cast<std::size_t>(r) * width;
    for (int k = 0; k < 3; ++k) {
      if (h[k] == 0.0) continue;
      const int p = ai.first[k][r];
      const int q = ai.second[k][r];
      if (p >= 0) {
        const double* src = in + static_cast<std::size_t>(p) * width;
        for (int x = 0; x < width; ++x) dst[x] += h[k] * src[x];
      }
      if (q >= 0) {
        const double* src = in + static_cast<std::size_t>(q) * width;
        for (int x = 0; x < width; ++x) dst[x] += h[k] * src[x];
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// FrameletSystem

FrameletSystem::FrameletSystem(int levels) : levels_(levels) {
  if (levels < 1) throw std::invalid_argument("framelet levels must be >= 1");
}

CoefficientPyramid FrameletSystem::analyze(const Image& u) const {
  CoefficientPyramid out(levels_, u.height(), u.width());
  analyze_into(u, out);
  return out;
}

void FrameletSystem::analyze_into(const Image& u, CoefficientPyramid& out) const {
  const int h = u.height();
  const int w = u.width();
  if (out.levels() != levels_ || out.height() != h || out.width() != w) out = CoefficientPyramid(levels_, h, w);

  const auto& taps = FrameletFilters::taps();
  const std::size_t n = u.size();
  std::vector<double> low(u.pixels().begin(), u.pixels().end());
  std::array<std::vector<double>, 3> rowpass;
  for (auto& t : rowpass) t.resize(n);

  for (int level = 0; level < levels_; ++level) {
    const int step = 1 << level;
    const ForwardIndex fr = forward_index(w, step);
    const ForwardIndex fc = forward_index(h, step);
    for (int j = 0; j < 3; ++j) filter_rows(low.data(), rowpass[j].data(), h, w, taps[j], fr);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i == 0 && j == 0) {
          if (level == levels_ - 1) {
            filter_cols(rowpass[0].data(), out.lowpass().data(), h, w, taps[0], fc);
          } else {
            filter_cols(rowpass[0].data(), low.data(), h, w, taps[0], fc);
          }
          continue;
        }
        filter_cols(rowpass[j].data(), out.band(out.band_index(level, i, j)).data(), h, w, taps[i], fc);
      }
    }
  }
}

Image FrameletSystem::synthesize(const CoefficientPyramid& c) const {
  Image out(c.height(), c.width());
  synthesize_into(c, out);
  return out;
}

void FrameletSystem::synthesize_into(const CoefficientPyramid& c, Image& out) const {
  if (c.levels() != levels_) throw ShapeError("synthesize: pyramid has a different level count");
  const int h = c.height();
  const int w = c.width();
  if (out.height() != h || out.width() != w) out = Image(h, w);

  const auto& taps = FrameletFilters::taps();
  const std::size_t n = c.band_size();
  std::vector<double> low(c.lowpass().begin(), c.lowpass().end());
  std::array<std::vector<double>, 3> colsum;
  for (auto& t : colsum) t.resize(n);

  for (int level = levels_ - 1; level >= 0; --level) {
    const int step = 1 << level;
    const AdjointIndex ar = adjoint_index(w, step);
    const AdjointIndex ac = adjoint_index(h, step);
    for (int j = 0; j < 3; ++j) {
      std::fill(colsum[j].begin(), colsum[j].end(), 0.0);
      for (int i = 0; i < 3; ++i) {
        const double* src = (i == 0 && j == 0) ? low.data() : c.band(c.band_index(level, i, j)).data();
        adjoint_cols_accumulate(src, colsum[j].data(), h, w, taps[i], ac);
      }
    }
    std::fill(low.begin(), low.end(), 0.0);
    for (int j = 0; j < 3; ++j) adjoint_rows_accumulate(colsum[j].data(), low.data(), h, w, taps[j], ar);
  }
  std::copy(low.begin(), low.end(), out.pixels().begin());
}

// ---------------------------------------------------------------------------
// Pyramid arithmetic

double pyramid_linf(const CoefficientPyramid& c, bool include_lowpass) {
  double m = par::max_abs(c.highpass());
  if (include_lowpass) m = std::max(m, par::max_abs(c.lowpass()));
  return m;
}

CoefficientPyramid lincomb(double a, const CoefficientPyramid& x, double b, const CoefficientPyramid& y) {
  require_same_shape(x, y, "lincomb");
  CoefficientPyramid out(x.levels(), x.height(), x.width());
  auto xs = x.values();
  auto ys = y.values();
  auto os = out.values();
  const auto n = static_cast<std::ptrdiff_t>(os.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) os[i] = a * xs[i] + b * ys[i];
  return out;
}

CoefficientPyramid add(const CoefficientPyramid& x, const CoefficientPyramid& y) { return lincomb(1.0, x, 1.0, y); }

CoefficientPyramid subtract(const CoefficientPyramid& x, const CoefficientPyramid& y) {
  return lincomb(1.0, x, -1.0, y);
}

CoefficientPyramid scale(double alpha, const CoefficientPyramid& x) {
  CoefficientPyramid out = x;
  for (double& v : out.values()) v *= alpha;
  return out;
}

double inner(const CoefficientPyramid& x, const CoefficientPyramid& y) {
  require_same_shape(x, y, "inner");
  return par::dot(x.values(), y.values());
}

// ---------------------------------------------------------------------------
// Dump format

namespace {

std::string band_file_name(int b) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "band_%03d.f64", b);
  return buf;
}

}  // namespace

void dump_pyramid(const CoefficientPyramid& c, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "sdsr-pyramid";
  manifest["version"] = 1;
  manifest["levels"] = c.levels();
  manifest["height"] = c.height();
  manifest["width"] = c.width();
  manifest["bands"] = nlohmann::json::array();
  for (int b = 0; b < c.band_count(); ++b) {
    const auto label = band_label(c, b);
    const std::string file = band_file_name(b);
    save_raw(c.band_image(b), (fs::path(dir) / file).string());
    manifest["bands"].push_back({{"index", b},
                                 {"level", label.level},
                                 {"i", label.i},
                                 {"j", label.j},
                                 {"lowpass", b == c.lowpass_index()},
                                 {"file", file}});
  }
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw IoError("unwritable path: " + dir);
  out << manifest.dump(2) << '\n';
}

CoefficientPyramid load_pyramid(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw IoError("unreadable file: " + (fs::path(dir) / "manifest.json").string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt pyramid manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "sdsr-pyramid") throw IoError("not a pyramid manifest: " + dir);
  CoefficientPyramid c(manifest.at("levels").get<int>(), manifest.at("height").get<int>(),
                       manifest.at("width").get<int>());
  for (const auto& entry : manifest.at("bands")) {
    const int b = entry.at("index").get<int>();
    const Image band = load_raw((fs::path(dir) / entry.at("file").get<std::string>()).string());
    if (band.height() != c.height() || band.width() != c.width()) throw ShapeError("pyramid band has wrong shape");
    std::copy(band.pixels().begin(), band.pixels().end(), c.band(b).begin());
  }
  return c;
}

}  // namespace sdsr
