#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <limits>

#include "sdsr/metrics.hpp"
#include "sdsr/solver.hpp"
#include "support/test_util.hpp"

using namespace sdsr;

namespace {

Image crop(const Image& u, int r0, int c0, int h, int w) {
  Image out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out(r, c) = u(r0 + r, c0 + c);
  return out;
}

Image cameraman64() { return crop(load_image(test::data_path("cameraman.pgm")), 60, 90, 64, 64); }

// Spatial circular convolution (A) and correlation (A^T).
Image spatial_blur(const Psf& psf, const Image& u, bool adjoint) {
  const int h = u.height(), w = u.width();
  Image out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int a = 0; a < psf.height; ++a)
        for (int b = 0; b < psf.width; ++b) {
          const int dr = a - psf.center_row(), dc = b - psf.center_col();
          const int rr = (((adjoint ? r + dr : r - dr) % h) + h) % h;
          const int cc = (((adjoint ? c + dc : c - dc) % w) + w) % w;
          s += psf.at(a, b) * u(rr, cc);
        }
      out(r, c) = s;
    }
  return out;
}

CoefficientPyramid single_pixel(std::initializer_list<double> values) {
  CoefficientPyramid c(1, 1, 1);
  std::copy(values.begin(), values.end(), c.values().begin());
  return c;
}

SolverConfig quick_config(double lambda, int iters = 60) {
  SolverConfig cfg;
  cfg.lambda = lambda;
  cfg.max_inner_iters = iters;
  return cfg;
}

}  // namespace

TEST_CASE("selective hard threshold: worked example") {
  // mu=1, gamma=0, lambda=0.5 gives threshold sqrt(2*0.5/1) = 1
  const auto x = single_pixel({0.9, 1.1, 0.9, -0.9, -1.1, 1.0, 0.0, 0.3, 0.5});
  const auto y = single_pixel({5, 5, 5, 5, 5, 5, 5, 5, 5});
  SupportMask mask(1, 1, 1, false);
  mask.flags()[2] = 1;
  const auto out = selective_hard_threshold(x, y, mask, 0.5, 1.0, 0.0);
  CHECK(out.values()[0] == 0.0);
  CHECK(out.values()[1] == 1.1);
  CHECK(out.values()[2] == 0.9);   // index in I is kept
  CHECK(out.values()[3] == 0.0);
  CHECK(out.values()[4] == -1.1);
  CHECK(out.values()[5] == 1.0);   // strict <: a tie keeps z
  CHECK(out.values()[7] == 0.0);
  CHECK(out.values()[8] == 0.5);   // low-pass is never thresholded
}

TEST_CASE("selective hard threshold: lambda = 0 and all-true masks give the weighted average") {
  const auto x = test::random_pyramid(2, 5, 6, 1);
  const auto y = test::random_pyramid(2, 5, 6, 2);
  const SupportMask none(2, 5, 6, false);
  const SupportMask all(2, 5, 6, true);
  const double mu = 0.01, gamma = 0.003;
  const auto avg = lincomb(mu / (mu + gamma), x, gamma / (mu + gamma), y);
  auto close = [&](const CoefficientPyramid& a) {
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == doctest::Approx(avg.values()[i]).epsilon(1e-14));
  };
  close(selective_hard_threshold(x, y, none, 0.0, mu, gamma));
  close(selective_hard_threshold(x, y, all, 0.0, mu, gamma));
  close(selective_hard_threshold(x, y, all, 123.0, mu, gamma));
  CHECK_THROWS_AS(selective_hard_threshold(x, CoefficientPyramid(1, 5, 6), none, 0.0, mu, gamma), ShapeError);
}

TEST_CASE("selective hard threshold is idempotent once x and y agree") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = test::random_pyramid(1, 8, 8, rng());
    const auto y = test::random_pyramid(1, 8, 8, rng());
    SupportMask mask(1, 8, 8, false);
    for (std::size_t i = 0; i < mask.highpass_size(); ++i) mask.flags()[i] = rng() % 4 == 0;
    const double lambda = 0.002 * (trial + 1), mu = 0.01, gamma = 0.003;
    const auto once = selective_hard_threshold(x, y, mask, lambda, mu, gamma);
    const auto twice = selective_hard_threshold(once, once, mask, lambda, mu, gamma);
    for (std::size_t i = 0; i < once.size(); ++i)
      CHECK(twice.values()[i] == doctest::Approx(once.values()[i]).epsilon(1e-15));
  }
}

TEST_CASE("soft thresholding") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-4.0, 1.5) == -2.5);
  CHECK(soft_threshold(1.0, 1.0) == 0.0);

  const auto x = single_pixel({3, -3, 0.5, 0, 0, 0, 0, 0, 7});
  const auto out = weighted_soft_threshold(x, x, 1.0, 1.0, 0.0);
  CHECK(out.values()[0] == 2.0);
  CHECK(out.values()[1] == -2.0);
  CHECK(out.values()[2] == 0.0);
  CHECK(out.values()[8] == 7.0);  // low-pass untouched
}

TEST_CASE("u-step with identity blur and mu+gamma=1 halves f") {
  const Image f = test::random_image(12, 10, 4);
  const BlurOperator op(delta_psf(), 12, 10);
  const FrameletSystem sys(1);
  const CoefficientPyramid zero(1, 12, 10);
  const Image u = u_step(f, op, sys, zero, zero, Image(12, 10), 0.5, 0.5);
  CHECK(test::max_abs_diff(u, scale(0.5, f)) <= 1e-12);
}

TEST_CASE("u-step reproduces the true image from consistent data") {
  const Image truth = cameraman64();
  const BlurOperator op(make_psf(PsfKind::gaussian_25_sigma1p6), 64, 64);
  const FrameletSystem sys(2);
  const Image f = op.apply(truth);
  const Image u = u_step(f, op, sys, sys.analyze(truth), CoefficientPyramid(2, 64, 64), truth, 0.01, 0.003);
  CHECK(test::max_abs_diff(u, truth) <= 1e-8 * 255.0);
}

TEST_CASE("u-step solves the normal equation (spatial-domain oracle)") {
  std::mt19937_64 rng(21);
  for (auto kind : {PsfKind::inverse_quadratic_15, PsfKind::gaussian_25_sigma1p6, PsfKind::motion_15_angle30}) {
    const int h = 24, w = 20;
    const Psf psf = make_psf(kind);
    const BlurOperator op(psf, h, w);
    const FrameletSystem sys(1);
    const Image f = test::random_image(h, w, rng());
    const Image u_prev = test::random_image(h, w, rng());
    const auto alpha = test::random_pyramid(1, h, w, rng());
    const auto b = test::random_pyramid(1, h, w, rng());
    const double mu = 0.01, gamma = 0.003;
    const Image u = u_step(f, op, sys, alpha, b, u_prev, mu, gamma);

    const Image lhs = axpy(mu + gamma, u, spatial_blur(psf, spatial_blur(psf, u, false), true));
    const Image rhs = add(add(spatial_blur(psf, f, true), scale(gamma, u_prev)),
                          scale(mu, sys.synthesize(subtract(alpha, b))));
    CHECK(norm2(subtract(lhs, rhs)) <= 1e-8 * norm2(rhs));
    CHECK(normal_equation_residual(u, f, op, sys, alpha, b, u_prev, mu, gamma) <= 1e-8);
  }
}

TEST_CASE("unregularized identity problem converges to f") {
  const Image f = cameraman64();
  const BlurOperator op(delta_psf(), 64, 64);
  SolverConfig cfg = quick_config(0.0, 300);
  cfg.regularizer = Regularizer::plain_l0;
  const Image start(64, 64, 100.0);
  const SolveResult r = mdal_solve(f, op, SupportMask(1, 64, 64, false), cfg, start);
  CHECK(r.report.stop == StopReason::tolerance);
  CHECK(r.report.iterations <= 10);
  // the returned mean still carries the start with weight 1/(K+1); the iterates themselves contract geometrically
  const double k1 = r.report.iterations + 1.0;
  CHECK(norm2(subtract(r.u, f)) <= 2.0 * norm2(subtract(start, f)) / k1);
  CHECK(norm2(subtract(r.u, f)) < norm2(subtract(start, f)) / 2.0);
}

TEST_CASE("output is the running mean including the starting point") {
  const Image truth = cameraman64();
  const BlurOperator op(make_psf(PsfKind::uniform_9), 64, 64);
  const Image f = degrade(truth, op, 2.0, 5);
  const FrameletSystem sys(1);
  const SupportMask mask = detect_support(truth, sys, 200.0);
  SolverConfig cfg = quick_config(0.5, 1);
  const SolveResult r = mdal_solve(f, op, mask, cfg, f);
  const Image u1 = u_step(f, op, sys, sys.analyze(f), CoefficientPyramid(1, 64, 64), f, cfg.mu, cfg.gamma);
  CHECK(test::max_abs_diff(r.u, scale(0.5, add(f, u1))) <= 1e-10);
  CHECK(r.report.iterations == 1);
}

TEST_CASE("l1 and l0 iterations coincide at lambda = 0") {
  const Image truth = cameraman64();
  const BlurOperator op(make_psf(PsfKind::gaussian_25_sigma1p6), 64, 64);
  const Image f = degrade(truth, op, std::sqrt(2.0), 9);
  SolverConfig cfg = quick_config(0.0, 30);
  SolveOptions so;
  so.truth = &truth;
  const SolveResult a = l1_solve(f, op, cfg, f, so);
  cfg.regularizer = Regularizer::plain_l0;
  const SolveResult b = mdal_solve(f, op, SupportMask(1, 64, 64, false), cfg, f, so);
  CHECK(a.u == b.u);
  CHECK(a.report.psnr == b.report.psnr);
}

TEST_CASE("solver report and data-fidelity sanity") {
  const Image truth = cameraman64();
  const BlurOperator op(make_psf(PsfKind::uniform_9), 64, 64);
  const Image f = degrade(truth, op, std::sqrt(2.0), 3);
  const FrameletSystem sys(1);
  SolveOptions so;
  so.truth = &truth;
  so.check_residual = true;
  for (auto reg : {Regularizer::trunc_l0, Regularizer::plain_l0, Regularizer::l1}) {
    SolverConfig cfg = quick_config(reg == Regularizer::l1 ? 0.05 : 0.8, 40);
    cfg.regularizer = reg;
    const SolveResult r = mdal_solve(f, op, detect_support(f, sys, 200.0), cfg, f, so);
    CHECK(r.report.psnr.size() == static_cast<std::size_t>(r.report.iterations));
    CHECK(r.report.ssim.size() == static_cast<std::size_t>(r.report.iterations));
    CHECK(r.report.final_psnr.has_value());
    CHECK(*r.report.final_psnr == psnr(r.u, truth));
    CHECK(*r.report.final_psnr > psnr(f, truth));
    CHECK(r.u.all_finite());
    CHECK(r.alpha.same_shape(CoefficientPyramid(1, 64, 64)));
    // 0.5 ||A u - f||^2 at the output does not exceed its value at the start
    const double start = norm2(subtract(op.apply(f), f));
    const double end = norm2(subtract(op.apply(r.u), f));
    CHECK(end <= start);
  }
}

TEST_CASE("mean-sequence stopping rule stops earlier than the iterate rule") {
  const Image truth = cameraman64();
  const BlurOperator op(make_psf(PsfKind::uniform_9), 64, 64);
  const Image f = degrade(truth, op, std::sqrt(2.0), 3);
  SolverConfig cfg = quick_config(0.8, 300);
  cfg.regularizer = Regularizer::plain_l0;
  const SupportMask none(1, 64, 64, false);
  const SolveResult it = mdal_solve(f, op, none, cfg, f);
  cfg.stop_on = StopSequence::mean;
  const SolveResult mean = mdal_solve(f, op, none, cfg, f);
  CHECK(mean.report.stop == StopReason::tolerance);
  CHECK(mean.report.iterations < it.report.iterations);
}

TEST_CASE("non-finite data is reported as divergence with its iteration") {
  Image f = cameraman64();
  f(10, 10) = std::numeric_limits<double>::quiet_NaN();
  const BlurOperator op(make_psf(PsfKind::uniform_9), 64, 64);
  try {
    mdal_solve(f, op, SupportMask(1, 64, 64, false), quick_config(0.1), Image(64, 64));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.iteration() == 1);
  }
}

TEST_CASE("solver configuration validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(SolverConfig::for_levels(1).rho == 200.0);
  CHECK(SolverConfig::for_levels(4).rho == 250.0);
  CHECK(cfg.mu == 0.01);
  CHECK(cfg.gamma == 0.003);
  CHECK(cfg.stages == 2);
  CHECK(cfg.tol == 5e-4);
  CHECK(cfg.max_inner_iters == 300);
  auto bad = [](auto mutate) {
    SolverConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  };
  bad([](SolverConfig& c) { c.mu = 0.0; });
  bad([](SolverConfig& c) { c.gamma = -1.0; });
  bad([](SolverConfig& c) { c.tol = 0.0; });
  bad([](SolverConfig& c) { c.stages = 0; });
  bad([](SolverConfig& c) { c.lambda = -1.0; });
  bad([](SolverConfig& c) { c.rho = 0.5; });
  bad([](SolverConfig& c) { c.max_inner_iters = 0; });
  CHECK(parse_regularizer("l1") == Regularizer::l1);
  CHECK_THROWS(parse_regularizer("tv"));
}

TEST_CASE("lambda grid and selection") {
  const auto grid = lambda_grid(2.0);
  REQUIRE(grid.size() == 9);
  for (int j = 0; j < 9; ++j) CHECK(grid[j] == doctest::Approx(1e-4 * std::pow(4.0, j) * 4.0).epsilon(1e-14));

  const std::vector<double> scores = {20.0, 25.0, 25.0, 24.0};
  int calls = 0;
  const SolveResult best = tune_lambda({0.0, 1.0, 2.0, 3.0}, [&](double lambda) {
    ++calls;
    SolveResult r;
    r.report.lambda = lambda;
    r.report.final_psnr = scores[static_cast<std::size_t>(lambda)];
    return r;
  });
  CHECK(calls == 4);
  CHECK(best.report.lambda == 1.0);
  CHECK_THROWS(tune_lambda({}, [](double) { return SolveResult{}; }));
  CHECK_THROWS(tune_lambda({1.0}, [](double) { return SolveResult{}; }));
}

TEST_CASE("multi-stage driver") {
  const Image truth = cameraman64();
  const BlurOperator op(make_psf(PsfKind::uniform_9), 64, 64);
  const Image f = degrade(truth, op, std::sqrt(2.0), 3);
  SolverConfig cfg = quick_config(0.8, 30);

  SUBCASE("a single oracle stage is the oracle-mask solve") {
    cfg.stages = 1;
    SdsrOptions o;
    o.support = SupportSource::oracle;
    o.truth = &truth;
    const SdsrResult r = sdsr_run(f, op, cfg, f, o);
    SolveOptions so;
    so.truth = &truth;
    const SolveResult direct = mdal_solve(f, op, detect_support(truth, FrameletSystem(1), cfg.rho), cfg, f, so);
    CHECK(r.u == direct.u);
    REQUIRE(r.stages.size() == 1);
    CHECK(*r.stages[0].accuracy == 1.0);
  }
  SUBCASE("self-learning stages report accuracy and keep every stage image") {
    SdsrOptions o;
    o.truth = &truth;
    const SdsrResult r = sdsr_run(f, op, cfg, f, o);
    REQUIRE(r.stages.size() == 2);
    CHECK(r.stage_images.size() == 2);
    CHECK(r.masks.size() == 2);
    CHECK(r.stages[0].stage == 1);
    CHECK(r.stages[1].stage == 2);
    CHECK(r.stages[0].accuracy.has_value());
    CHECK(r.u == r.stage_images.back());
  }
  SUBCASE("oracle mode and grid search need the ground truth") {
    SdsrOptions o;
    o.support = SupportSource::oracle;
    CHECK_THROWS_AS(sdsr_run(f, op, cfg, f, o), std::invalid_argument);
    SdsrOptions g;
    g.lambda_grid = {0.1, 1.0};
    CHECK_THROWS_AS(sdsr_run(f, op, cfg, f, g), std::invalid_argument);
  }
  SUBCASE("without ground truth no metrics are reported") {
    const SdsrResult r = sdsr_run(f, op, cfg, f, {});
    CHECK_FALSE(r.stages[0].final_psnr.has_value());
    CHECK_FALSE(r.stages[0].accuracy.has_value());
    CHECK(r.stages[0].psnr.empty());
  }
}

TEST_CASE("identical inputs give bit-identical outputs") {
  const Image truth = cameraman64();
  const BlurOperator op(make_psf(PsfKind::motion_15_angle30), 64, 64);
  const Image f = degrade(truth, op, 2.0, 1);
  SolverConfig cfg = quick_config(0.5, 25);
  cfg.levels = 2;
  const SupportMask mask = detect_support(f, FrameletSystem(2), 250.0);
  const SolveResult a = mdal_solve(f, op, mask, cfg, f);
  const SolveResult b = mdal_solve(f, op, mask, cfg, f);
  CHECK(a.u == b.u);
  CHECK(a.alpha == b.alpha);
}
