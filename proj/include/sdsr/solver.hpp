#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdsr/degradation.hpp"
#include "sdsr/framelet.hpp"
#include "sdsr/image.hpp"
#include "sdsr/support.hpp"

namespace sdsr {

enum class Regularizer {
  trunc_l0,  ///< lambda * ||(W u)_T||_0 with T the complement of the detected support
  plain_l0,  ///< lambda * ||W u||_0 over all high-pass coefficients
  l1,        ///< lambda * ||W u||_1 over all high-pass coefficients (soft thresholding)
};

std::string to_string(Regularizer r);
Regularizer parse_regularizer(const std::string& name);

/// The hard-thresholded iterates of the splitting typically keep oscillating
/// and then only reach the iteration cap; their running mean (the returned
/// image) settles much earlier.
enum class StopSequence { iterate, mean };

struct SolverConfig {
  double lambda = 0.0;
  double mu = 0.01;
  double gamma = 0.003;
  double rho = 200.0;  ///< support threshold ratio; 250 is the usual choice for 4 levels
  int levels = 1;
  int stages = 2;
  int max_inner_iters = 300;
  double tol = 5e-4;
  Regularizer regularizer = Regularizer::trunc_l0;
  /// Sequence the stopping rule is evaluated on.
  StopSequence stop_on = StopSequence::iterate;
  /// Whether the support threshold ||W u||_inf / rho also scans the low-pass band.
  bool threshold_includes_lowpass = true;

  /// Defaults with rho = 200 for one level and 250 otherwise.
  static SolverConfig for_levels(int levels);
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

enum class StopReason { tolerance, max_iters };
std::string to_string(StopReason r);

struct StageReport {
  int stage = 1;
  double lambda = 0.0;
  double rho = 0.0;
  int iterations = 0;
  StopReason stop = StopReason::max_iters;
  double seconds = 0.0;
  std::size_t support_count = 0;
  /// Quality of the running mean after each inner iteration (empty without ground truth).
  std::vector<double> psnr;
  std::vector<double> ssim;
  std::optional<double> final_psnr;
  std::optional<double> final_ssim;
  std::optional<double> accuracy;  ///< vs. the support detected on the ground truth
};

struct SolveOptions {
  const Image* truth = nullptr;  ///< enables PSNR/SSIM trajectories
  bool track_ssim = true;
  /// Called with (iteration, running mean) every `trace_every` iterations when set.
  int trace_every = 0;
  std::function<void(int, const Image&)> trace;
  /// Re-checks the u-step normal equation every 10th iteration.
  bool check_residual = false;
};

struct SolveResult {
  Image u;                   ///< arithmetic mean of u^0..u^k
  CoefficientPyramid alpha;  ///< arithmetic mean of alpha^0..alpha^k
  StageReport report;
};

/// z_i = (mu x_i + gamma y_i)/(mu + gamma); zero where i is in T and |z_i| < sqrt(2 lambda/(mu+gamma)).
CoefficientPyramid selective_hard_threshold(const CoefficientPyramid& x, const CoefficientPyramid& y,
                                            const SupportMask& mask, double lambda, double mu, double gamma);

/// sign(z) max(|z| - t, 0)
double soft_threshold(double z, double t) noexcept;

/// Soft-thresholds the weighted average z at lambda/(mu+gamma) on the high-pass bands.
CoefficientPyramid weighted_soft_threshold(const CoefficientPyramid& x, const CoefficientPyramid& y, double lambda,
                                           double mu, double gamma);

/// Solves (A^T A + (mu+gamma) I) u = A^T f + gamma u_prev + mu W^T(alpha - b) in the Fourier domain.
Image u_step(const Image& f, const BlurOperator& op, const FrameletSystem& sys, const CoefficientPyramid& alpha,
             const CoefficientPyramid& b, const Image& u_prev, double mu, double gamma);

/// ||(A^T A + (mu+gamma) I) u - rhs|| / ||rhs|| for the u-step normal equation.
double normal_equation_residual(const Image& u, const Image& f, const BlurOperator& op, const FrameletSystem& sys,
                                const CoefficientPyramid& alpha, const CoefficientPyramid& b, const Image& u_prev,
                                double mu, double gamma);

/// Mean doubly augmented Lagrangian iteration for the (truncated) l0 or l1
/// analysis model. Starts from u^0 = u0, alpha^0 = W u0, b^0 = 0 and returns the
/// running means. Throws DivergenceError on a non-finite iterate.
SolveResult mdal_solve(const Image& f, const BlurOperator& op, const SupportMask& mask, const SolverConfig& cfg,
                       const Image& u0, const SolveOptions& opts = {});

/// mdal_solve with the l1 (soft-threshold) regularizer.
SolveResult l1_solve(const Image& f, const BlurOperator& op, const SolverConfig& cfg, const Image& u0,
                     const SolveOptions& opts = {});

/// lambda_j = 1e-4 * 4^j * sigma^2, j = 0..8.
std::vector<double> lambda_grid(double sigma);

/// Runs `solve` for each lambda and keeps the result with the highest final PSNR
/// (ties go to the earlier lambda). Every candidate must report a final PSNR.
SolveResult tune_lambda(const std::vector<double>& grid, const std::function<SolveResult(double)>& solve);

enum class SupportSource {
  reference,  ///< detect on the current reference image (self-learning)
  oracle,     ///< detect on the ground truth at every stage
};

struct SdsrOptions {
  SupportSource support = SupportSource::reference;
  const Image* truth = nullptr;  ///< ground truth for metrics, accuracy and oracle mode
  /// Non-empty: pick lambda per stage from this grid by PSNR (needs truth).
  std::vector<double> lambda_grid;
  bool track_ssim = true;
  /// Forwarded to every stage's solve as (stage, iteration, running mean).
  int trace_every = 0;
  std::function<void(int, int, const Image&)> trace;
};

struct SdsrResult {
  Image u;
  std::vector<Image> stage_images;
  std::vector<StageReport> stages;
  std::vector<SupportMask> masks;
};

/// Multi-stage support-driven restoration: at each stage detect the support on
/// the reference, solve the truncated model warm-started from the reference,
/// and use the result as the next reference.
SdsrResult sdsr_run(const Image& f, const BlurOperator& op, const SolverConfig& cfg, const Image& init_ref,
                    const SdsrOptions& opts = {});

}  // namespace sdsr
