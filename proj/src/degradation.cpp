#include "sdsr/degradation.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sdsr {

std::string to_string(PsfKind kind) {
  switch (kind) {
    case PsfKind::inverse_quadratic_15: return "inverse_quadratic_15";
    case PsfKind::uniform_9: return "uniform_9";
    case PsfKind::gaussian_25_sigma1p6: return "gaussian_25_sigma1p6";
    case PsfKind::motion_15_angle30: return "motion_15_angle30";
  }
  return "unknown";
}

PsfKind parse_psf_kind(const std::string& name) {
  for (auto k : {PsfKind::inverse_quadratic_15, PsfKind::uniform_9, PsfKind::gaussian_25_sigma1p6,
                 PsfKind::motion_15_angle30})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown PSF kind: " + name);
}

double Psf::sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

namespace {

void normalize(Psf& psf) {
  const double s = psf.sum();
  for (double& w : psf.weights) w /= s;
}

Psf inverse_quadratic(int radius) {
  Psf psf{2 * radius + 1, 2 * radius + 1, {}};
  psf.weights.resize(static_cast<std::size_t>(psf.height) * psf.width);
  for (int r = -radius; r <= radius; ++r) {
    for (int c = -radius; c <= radius; ++c) {
      const int d2 = r * r + c * c;
      psf.weights[static_cast<std::size_t>(r + radius) * psf.width + (c + radius)] = d2 == 0 ? 1.0 : 1.0 / d2;
    }
  }
  normalize(psf);
  return psf;
}

Psf uniform(int size) {
  Psf psf{size, size, std::vector<double>(static_cast<std::size_t>(size) * size, 1.0)};
  normalize(psf);
  return psf;
}

}  // namespace

Psf gaussian_psf(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("Gaussian PSF size must be odd");
  const int half = size / 2;
  Psf psf{size, size, std::vector<double>(static_cast<std::size_t>(size) * size)};
  double peak = 0.0;
  for (int r = -half; r <= half; ++r) {
    for (int c = -half; c <= half; ++c) {
      const double v = std::exp(-(r * r + c * c) / (2.0 * sigma * sigma));
      psf.weights[static_cast<std::size_t>(r + half) * size + (c + half)] = v;
      peak = std::max(peak, v);
    }
  }
  // Negligible tails are dropped exactly like the conventional fspecial kernel.
  for (double& w : psf.weights)
    if (w < std::numeric_limits<double>::epsilon() * peak) w = 0.0;
  normalize(psf);
  return psf;
}

Psf motion_psf(double length, double angle_degrees) {
  // Pixels within one pixel of the ideal segment get weight (1 - distance);
  // the quarter-plane computed below is mirrored through the center.
  length = std::max(1.0, length);
  const double half = (length - 1.0) / 2.0;
  const double phi = std::fmod(angle_degrees, 180.0) / 180.0 * std::numbers::pi;
  const double cosphi = std::cos(phi);
  const double sinphi = std::sin(phi);
  const int xsign = cosphi > 0 ? 1 : (cosphi < 0 ? -1 : 0);
  constexpr double linewidth = 1.0;
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());

  const int sx = static_cast<int>(std::trunc(half * cosphi + linewidth * xsign - length * eps));
  const int sy = static_cast<int>(std::trunc(half * sinphi + linewidth - length * eps));
  const int ncols = xsign == 0 ? 1 : std::abs(sx) + 1;
  const int nrows = sy + 1;

  std::vector<double> dist(static_cast<std::size_t>(nrows) * ncols);
  for (int r = 0; r < nrows; ++r) {
    for (int c = 0; c < ncols; ++c) {
      const double x = static_cast<double>(c * (xsign == 0 ? 1 : xsign));
      const double y = r;
      double d = y * cosphi - x * sinphi;
      const double rad = std::sqrt(x * x + y * y);
      if (rad >= half && std::abs(d) <= linewidth) {
        const double x2last = half - std::abs((x + d * sinphi) / cosphi);
        d = std::sqrt(d * d + x2last * x2last);
      }
      d = linewidth + eps - std::abs(d);
      dist[static_cast<std::size_t>(r) * ncols + c] = d < 0 ? 0.0 : d;
    }
  }

  Psf psf{2 * nrows - 1, 2 * ncols - 1, {}};
  psf.weights.assign(static_cast<std::size_t>(psf.height) * psf.width, 0.0);
  auto put = [&](int r, int c, double v) { psf.weights[static_cast<std::size_t>(r) * psf.width + c] = v; };
  for (int r = 0; r < nrows; ++r) {
    for (int c = 0; c < ncols; ++c) {
      const double v = dist[static_cast<std::size_t>(r) * ncols + c];
      put(nrows - 1 - r, ncols - 1 - c, v);  // rotated by 180 degrees
      put(nrows - 1 + r, ncols - 1 + c, v);
    }
  }
  if (cosphi > 0) {
    for (int r = 0; r < psf.height / 2; ++r)
      for (int c = 0; c < psf.width; ++c)
        std::swap(psf.weights[static_cast<std::size_t>(r) * psf.width + c],
                  psf.weights[static_cast<std::size_t>(psf.height - 1 - r) * psf.width + c]);
  }
  normalize(psf);
  return psf;
}

Psf delta_psf() { return Psf{1, 1, {1.0}}; }

Psf make_psf(PsfKind kind) {
  switch (kind) {
    case PsfKind::inverse_quadratic_15: return inverse_quadratic(7);
    case PsfKind::uniform_9: return uniform(9);
    case PsfKind::gaussian_25_sigma1p6: return gaussian_psf(25, 1.6);
    case PsfKind::motion_15_angle30: return motion_psf(15.0, 30.0);
  }
  throw std::invalid_argument("unknown PSF kind");
}

std::string psf_to_text(const Psf& psf) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (int r = 0; r < psf.height; ++r) {
    for (int c = 0; c < psf.width; ++c) os << (c ? " " : "") << psf.at(r, c);
    os << '\n';
  }
  return os.str();
}

Scenario scenario(int id) {
  if (id < 1 || id > 8) throw std::invalid_argument("scenario id must be in 1..8, got " + std::to_string(id));
  static constexpr PsfKind kKinds[4] = {PsfKind::inverse_quadratic_15, PsfKind::uniform_9,
                                        PsfKind::gaussian_25_sigma1p6, PsfKind::motion_15_angle30};
  const double sigma = id % 2 == 1 ? std::sqrt(2.0) : 2.0;
  return Scenario{id, kKinds[(id - 1) / 2], sigma};
}

// ---------------------------------------------------------------------------

BlurOperator::BlurOperator(Psf psf, int height, int width)
    : psf_(std::move(psf)), height_(height), width_(width), fft_(std::make_shared<Fft2d>(height, width)) {
  if (psf_.height % 2 == 0 || psf_.width % 2 == 0) throw std::invalid_argument("PSF dimensions must be odd");
  // Periodic embedding with the PSF center at pixel (0,0); taps that overhang
  // a small image wrap around and accumulate.
  std::vector<double> embedded(static_cast<std::size_t>(height) * width, 0.0);
  for (int r = 0; r < psf_.height; ++r) {
    for (int c = 0; c < psf_.width; ++c) {
      int rr = (r - psf_.center_row()) % height;
      int cc = (c - psf_.center_col()) % width;
      if (rr < 0) rr += height;
      if (cc < 0) cc += width;
      embedded[static_cast<std::size_t>(rr) * width + cc] += psf_.at(r, c);
    }
  }
  otf_.resize(fft_->spectrum_size());
  fft_->forward(embedded, otf_);
}

Image BlurOperator::multiply(const Image& u, bool conjugate) const {
  if (u.height() != height_ || u.width() != width_) throw ShapeError("blur operator: image shape mismatch");
  std::vector<std::complex<double>> spec(fft_->spectrum_size());
  fft_->forward(u.pixels(), spec);
  const double inv_n = 1.0 / (static_cast<double>(height_) * width_);
  for (std::size_t i = 0; i < spec.size(); ++i)
    spec[i] *= (conjugate ? std::conj(otf_[i]) : otf_[i]) * inv_n;
  Image out(height_, width_);
  fft_->inverse(spec, out.pixels());
  return out;
}

Image BlurOperator::apply(const Image& u) const { return multiply(u, false); }
Image BlurOperator::apply_adjoint(const Image& v) const { return multiply(v, true); }

// ---------------------------------------------------------------------------

struct NormalStream::State {
  std::mt19937_64 engine;
  double spare = 0.0;
  bool has_spare = false;
};

NormalStream::NormalStream(std::uint64_t seed) : state_(std::make_shared<State>()) { state_->engine.seed(seed); }

double NormalStream::next() {
  if (state_->has_spare) {
    state_->has_spare = false;
    return state_->spare;
  }
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = 1.0 - static_cast<double>(state_->engine() >> 11) * kScale;  // (0, 1]
  const double u2 = static_cast<double>(state_->engine() >> 11) * kScale;        // [0, 1)
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  state_->spare = radius * std::sin(angle);
  state_->has_spare = true;
  return radius * std::cos(angle);
}

Image degrade(const Image& u, const BlurOperator& op, double sigma, std::uint64_t seed) {
  Image f = op.apply(u);
  if (sigma == 0.0) return f;
  NormalStream noise(seed);
  for (double& v : f.pixels()) v += sigma * noise.next();
  return f;
}

Image degrade(const Image& u, const Scenario& sc, std::uint64_t seed) {
  return degrade(u, BlurOperator(make_psf(sc.psf), u.height(), u.width()), sc.sigma, seed);
}

}  // namespace sdsr
