#include "sdsr/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "sdsr/metrics.hpp"
#include "sdsr/parallel.hpp"

namespace sdsr {

std::string to_string(Regularizer r) {
  switch (r) {
    case Regularizer::trunc_l0: return "trunc_l0";
    case Regularizer::plain_l0: return "plain_l0";
    case Regularizer::l1: return "l1";
  }
  return "unknown";
}

Regularizer parse_regularizer(const std::string& name) {
  for (auto r : {Regularizer::trunc_l0, Regularizer::plain_l0, Regularizer::l1})
    if (to_string(r) == name) return r;
  throw std::invalid_argument("unknown regularizer: " + name);
}

std::string to_string(StopReason r) { return r == StopReason::tolerance ? "tolerance" : "max_iters"; }

SolverConfig SolverConfig::for_levels(int levels) {
  SolverConfig cfg;
  cfg.levels = levels;
  cfg.rho = levels == 1 ? 200.0 : 250.0;
  return cfg;
}

void SolverConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (!(rho >= 1.0)) throw std::invalid_argument("rho must be >= 1");
  if (levels < 1) throw std::invalid_argument("levels must be >= 1");
  if (stages < 1) throw std::invalid_argument("stages must be >= 1");
  if (max_inner_iters < 1) throw std::invalid_argument("max_inner_iters must be >= 1");
}

// ---------------------------------------------------------------------------
// Proximal steps

namespace {

void require_prox_shapes(const CoefficientPyramid& x, const CoefficientPyramid& y, double mu, double gamma) {
  require_same_shape(x, y, "threshold");
  if (!(mu + gamma > 0.0)) throw std::invalid_argument("mu + gamma must be positive");
}

void hard_threshold_kernel(std::span<const double> x, std::span<const double> y, std::span<const std::uint8_t> keep,
                           double lambda, double mu, double gamma, std::span<double> out) {
  const double wsum = mu + gamma;
  const double wx = mu / wsum;
  const double wy = gamma / wsum;
  const double threshold = std::sqrt(2.0 * lambda / wsum);
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double z = wx * x[i] + wy * y[i];
    out[i] = (!keep[i] && std::abs(z) < threshold) ? 0.0 : z;
  }
}

void soft_threshold_kernel(std::span<const double> x, std::span<const double> y, std::size_t highpass, double lambda,
                           double mu, double gamma, std::span<double> out) {
  const double wsum = mu + gamma;
  const double wx = mu / wsum;
  const double wy = gamma / wsum;
  const double t = lambda / wsum;
  const auto n = static_cast<std::ptrdiff_t>(out.size());
  const auto hp = static_cast<std::ptrdiff_t>(highpass);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double z = wx * x[i] + wy * y[i];
    out[i] = i < hp ? soft_threshold(z, t) : z;
  }
}

}  // namespace

CoefficientPyramid selective_hard_threshold(const CoefficientPyramid& x, const CoefficientPyramid& y,
                                            const SupportMask& mask, double lambda, double mu, double gamma) {
  require_prox_shapes(x, y, mu, gamma);
  if (!mask.congruent(x)) throw ShapeError("selective_hard_threshold: mask shape mismatch");
  CoefficientPyramid out(x.levels(), x.height(), x.width());
  hard_threshold_kernel(x.values(), y.values(), mask.flags(), lambda, mu, gamma, out.values());
  return out;
}

double soft_threshold(double z, double t) noexcept {
  const double m = std::abs(z) - t;
  return m > 0.0 ? std::copysign(m, z) : 0.0;
}

CoefficientPyramid weighted_soft_threshold(const CoefficientPyramid& x, const CoefficientPyramid& y, double lambda,
                                           double mu, double gamma) {
  require_prox_shapes(x, y, mu, gamma);
  CoefficientPyramid out(x.levels(), x.height(), x.width());
  soft_threshold_kernel(x.values(), y.values(), x.highpass_size(), lambda, mu, gamma, out.values());
  return out;
}

// ---------------------------------------------------------------------------
// u-step

namespace {

// Diagonal solve of (A^T A + (mu+gamma) I) u = A^T f + r in the Fourier domain,
// with A^T f precomputed.
class NormalEquationSolver {
public:
  NormalEquationSolver(const Image& f, const BlurOperator& op, double mu, double gamma) : op_(op) {
    if (!(mu + gamma > 0.0)) throw std::invalid_argument("mu + gamma must be positive");
    if (f.height() != op.height() || f.width() != op.width()) throw ShapeError("u-step: f does not match operator");
    const auto otf = op.otf();
    atf_.resize(otf.size());
    op.fft().forward(f.pixels(), atf_);
    inv_denominator_.resize(otf.size());
    const double inv_n = 1.0 / (static_cast<double>(op.height()) * op.width());
    for (std::size_t i = 0; i < otf.size(); ++i) {
      atf_[i] *= std::conj(otf[i]);
      inv_denominator_[i] = inv_n / (std::norm(otf[i]) + mu + gamma);
    }
    spectrum_.resize(otf.size());
  }

  // Returns u and, if `blurred` is non-null, A u.
  void solve(const Image& extra_rhs, Image& u, Image* blurred) {
    op_.fft().forward(extra_rhs.pixels(), spectrum_);
    for (std::size_t i = 0; i < spectrum_.size(); ++i) spectrum_[i] = (spectrum_[i] + atf_[i]) * inv_denominator_[i];
    op_.fft().inverse(spectrum_, u.pixels());
    if (blurred != nullptr) {
      const auto otf = op_.otf();
      for (std::size_t i = 0; i < spectrum_.size(); ++i) spectrum_[i] *= otf[i];
      op_.fft().inverse(spectrum_, blurred->pixels());
    }
  }

private:
  const BlurOperator& op_;
  std::vector<std::complex<double>> atf_;
  std::vector<double> inv_denominator_;
  std::vector<std::complex<double>> spectrum_;
};

// gamma * u_prev + mu * W^T(alpha - b)
Image proximal_rhs(const FrameletSystem& sys, const CoefficientPyramid& alpha, const CoefficientPyramid& b,
                   const Image& u_prev, double mu, double gamma, CoefficientPyramid& scratch, Image& out) {
  auto a = alpha.values();
  auto bv = b.values();
  auto d = scratch.values();
  const auto n = static_cast<std::ptrdiff_t>(d.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) d[i] = a[i] - bv[i];
  sys.synthesize_into(scratch, out);
  auto o = out.pixels();
  auto up = u_prev.pixels();
  const auto m = static_cast<std::ptrdiff_t>(o.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) o[i] = gamma * up[i] + mu * o[i];
  return out;
}

}  // namespace

Image u_step(const Image& f, const BlurOperator& op, const FrameletSystem& sys, const CoefficientPyramid& alpha,
             const CoefficientPyramid& b, const Image& u_prev, double mu, double gamma) {
  require_same_shape(f, u_prev, "u_step");
  require_same_shape(alpha, b, "u_step");
  NormalEquationSolver solver(f, op, mu, gamma);
  CoefficientPyramid scratch(alpha.levels(), alpha.height(), alpha.width());
  Image rhs(f.height(), f.width());
  proximal_rhs(sys, alpha, b, u_prev, mu, gamma, scratch, rhs);
  Image u(f.height(), f.width());
  solver.solve(rhs, u, nullptr);
  return u;
}

double normal_equation_residual(const Image& u, const Image& f, const BlurOperator& op, const FrameletSystem& sys,
                                const CoefficientPyramid& alpha, const CoefficientPyramid& b, const Image& u_prev,
                                double mu, double gamma) {
  CoefficientPyramid scratch(alpha.levels(), alpha.height(), alpha.width());
  Image rhs(f.height(), f.width());
  proximal_rhs(sys, alpha, b, u_prev, mu, gamma, scratch, rhs);
  rhs = add(rhs, op.apply_adjoint(f));
  const Image lhs = axpy(mu + gamma, u, op.apply_adjoint(op.apply(u)));
  return norm2(subtract(lhs, rhs)) / norm2(rhs);
}

// ---------------------------------------------------------------------------
// MDAL

SolveResult mdal_solve(const Image& f, const BlurOperator& op, const SupportMask& mask, const SolverConfig& cfg,
                       const Image& u0, const SolveOptions& opts) {
  cfg.validate();
  require_same_shape(f, u0, "mdal_solve");
  if (opts.truth != nullptr) require_same_shape(f, *opts.truth, "mdal_solve truth");
  const auto start = std::chrono::steady_clock::now();

  const FrameletSystem sys(cfg.levels);
  const int h = f.height();
  const int w = f.width();

  SupportMask penalized_everywhere;
  const SupportMask* keep = &mask;
  if (cfg.regularizer == Regularizer::plain_l0) {
    penalized_everywhere = SupportMask(cfg.levels, h, w, false);
    keep = &penalized_everywhere;
  } else if (cfg.regularizer == Regularizer::trunc_l0) {
    if (mask.levels() != cfg.levels || mask.height() != h || mask.width() != w)
      throw ShapeError("mdal_solve: support mask does not match image/levels");
  }

  NormalEquationSolver normal(f, op, cfg.mu, cfg.gamma);
  const double f_norm = std::max(norm2(f), std::numeric_limits<double>::min());

  Image u = u0;
  Image u_next(h, w);
  Image blurred(h, w);
  Image rhs(h, w);
  CoefficientPyramid alpha = sys.analyze(u0);
  CoefficientPyramid b(cfg.levels, h, w);
  CoefficientPyramid wu(cfg.levels, h, w);
  CoefficientPyramid x(cfg.levels, h, w);
  CoefficientPyramid scratch(cfg.levels, h, w);

  Image sum_u = u0;
  CoefficientPyramid sum_alpha = alpha;
  Image mean(h, w);
  Image prev_mean = u0;
  Image sum_blurred = op.apply(u0);  // A applied to the running sum, for the mean residual

  StageReport report;
  report.lambda = cfg.lambda;
  report.rho = cfg.rho;
  report.support_count = cfg.regularizer == Regularizer::trunc_l0 ? mask.support_count() : 0;

  auto update_mean = [&](int count) {
    const double inv = 1.0 / count;
    auto s = sum_u.pixels();
    auto m = mean.pixels();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = s[i] * inv;
  };

  for (int k = 1; k <= cfg.max_inner_iters; ++k) {
    // u^{k} from the normal equation
    proximal_rhs(sys, alpha, b, u, cfg.mu, cfg.gamma, scratch, rhs);
    normal.solve(rhs, u_next, &blurred);
    if (opts.check_residual && k % 10 == 0) {
      const double res = normal_equation_residual(u_next, f, op, sys, alpha, b, u, cfg.mu, cfg.gamma);
      if (!(res <= 1e-8)) throw std::runtime_error("u-step normal equation residual too large at iteration " +
                                                   std::to_string(k) + ": " + std::to_string(res));
    }
    if (!u_next.all_finite()) throw DivergenceError("non-finite image iterate", k);

    // alpha^{k} = prox(W u^{k} + b^{k-1}, alpha^{k-1}); b^{k} = b^{k-1} + W u^{k} - alpha^{k}
    sys.analyze_into(u_next, wu);
    {
      auto xv = x.values();
      auto wv = wu.values();
      auto bv = b.values();
      const auto n = static_cast<std::ptrdiff_t>(xv.size());
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i) xv[i] = wv[i] + bv[i];
    }
    if (cfg.regularizer == Regularizer::l1) {
      soft_threshold_kernel(x.values(), alpha.values(), x.highpass_size(), cfg.lambda, cfg.mu, cfg.gamma,
                            scratch.values());
    } else {
      hard_threshold_kernel(x.values(), alpha.values(), keep->flags(), cfg.lambda, cfg.mu, cfg.gamma,
                            scratch.values());
    }
    std::swap(alpha, scratch);
    {
      auto xv = x.values();
      auto av = alpha.values();
      auto bv = b.values();
      const auto n = static_cast<std::ptrdiff_t>(xv.size());
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i) bv[i] = xv[i] - av[i];
    }

    par::axpy_inplace(1.0, u_next.pixels(), sum_u.pixels());
    par::axpy_inplace(1.0, alpha.values(), sum_alpha.values());
    update_mean(k + 1);
    if (!mean.all_finite()) throw DivergenceError("non-finite mean iterate", k);

    if (opts.truth != nullptr) {
      report.psnr.push_back(psnr(mean, *opts.truth));
      if (opts.track_ssim) report.ssim.push_back(ssim(mean, *opts.truth));
    }
    if (opts.trace && opts.trace_every > 0 && k % opts.trace_every == 0) opts.trace(k, mean);

    double change = 0.0;
    double residual = 0.0;
    if (cfg.stop_on == StopSequence::iterate) {
      change = std::sqrt(par::sum_squared_diff(u_next.pixels(), u.pixels())) /
               std::max(norm2(u_next), std::numeric_limits<double>::min());
      residual = std::sqrt(par::sum_squared_diff(blurred.pixels(), f.pixels())) / f_norm;
    } else {
      par::axpy_inplace(1.0, blurred.pixels(), sum_blurred.pixels());
      change = std::sqrt(par::sum_squared_diff(mean.pixels(), prev_mean.pixels())) /
               std::max(norm2(mean), std::numeric_limits<double>::min());
      const double inv = 1.0 / (k + 1);
      double acc = 0.0;
      auto sb = sum_blurred.pixels();
      auto fv = f.pixels();
      for (std::size_t i = 0; i < sb.size(); ++i) {
        const double d = sb[i] * inv - fv[i];
        acc += d * d;
      }
      residual = std::sqrt(acc) / f_norm;
      std::copy(mean.pixels().begin(), mean.pixels().end(), prev_mean.pixels().begin());
    }
    std::swap(u, u_next);
    report.iterations = k;
    if (std::min(change, residual) < cfg.tol) {
      report.stop = StopReason::tolerance;
      break;
    }
  }

  SolveResult result;
  result.u = mean;
  result.alpha = scale(1.0 / (report.iterations + 1), sum_alpha);
  if (opts.truth != nullptr) {
    report.final_psnr = psnr(mean, *opts.truth);
    report.final_ssim = ssim(mean, *opts.truth);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.report = std::move(report);
  return result;
}

SolveResult l1_solve(const Image& f, const BlurOperator& op, const SolverConfig& cfg, const Image& u0,
                     const SolveOptions& opts) {
  SolverConfig c = cfg;
  c.regularizer = Regularizer::l1;
  return mdal_solve(f, op, SupportMask(c.levels, f.height(), f.width(), false), c, u0, opts);
}

std::vector<double> lambda_grid(double sigma) {
  std::vector<double> grid;
  double base = 1e-4;
  for (int j = 0; j <= 8; ++j, base *= 4.0) grid.push_back(base * sigma * sigma);
  return grid;
}

SolveResult tune_lambda(const std::vector<double>& grid, const std::function<SolveResult(double)>& solve) {
  if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
  std::optional<SolveResult> best;
  for (double lambda : grid) {
    SolveResult r = solve(lambda);
    if (!r.report.final_psnr) throw std::invalid_argument("lambda tuning needs ground truth");
    if (!best || *r.report.final_psnr > *best->report.final_psnr) best = std::move(r);
  }
  return std::move(*best);
}

// ---------------------------------------------------------------------------
// Multi-stage driver

SdsrResult sdsr_run(const Image& f, const BlurOperator& op, const SolverConfig& cfg, const Image& init_ref,
                    const SdsrOptions& opts) {
  cfg.validate();
  require_same_shape(f, init_ref, "sdsr_run");
  if (opts.support == SupportSource::oracle && opts.truth == nullptr)
    throw std::invalid_argument("oracle support needs the ground truth image");
  if (!opts.lambda_grid.empty() && opts.truth == nullptr)
    throw std::invalid_argument("lambda grid search needs the ground truth image");

  const FrameletSystem sys(cfg.levels);
  std::optional<SupportMask> oracle_mask;
  if (opts.truth != nullptr) oracle_mask = detect_support(*opts.truth, sys, cfg.rho, cfg.threshold_includes_lowpass);

  SdsrResult out;
  Image reference = init_ref;
  for (int s = 1; s <= cfg.stages; ++s) {
    SupportMask mask =
        opts.support == SupportSource::oracle ? *oracle_mask
                                              : detect_support(reference, sys, cfg.rho, cfg.threshold_includes_lowpass);
    SolveOptions so;
    so.truth = opts.truth;
    so.track_ssim = opts.track_ssim;
    if (opts.trace && opts.trace_every > 0) {
      so.trace_every = opts.trace_every;
      so.trace = [&opts, s](int k, const Image& mean) { opts.trace(s, k, mean); };
    }
    auto solve = [&](double lambda) {
      SolverConfig c = cfg;
      c.lambda = lambda;
      return mdal_solve(f, op, mask, c, reference, so);
    };
    SolveResult r = opts.lambda_grid.empty() ? solve(cfg.lambda) : tune_lambda(opts.lambda_grid, solve);
    r.report.stage = s;
    if (oracle_mask) r.report.accuracy = accuracy_rate(mask, *oracle_mask);
    out.stages.push_back(std::move(r.report));
    out.masks.push_back(std::move(mask));
    out.stage_images.push_back(r.u);
    reference = std::move(r.u);
  }
  out.u = std::move(reference);
  return out;
}

}  // namespace sdsr
