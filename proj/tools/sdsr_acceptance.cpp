// sdsr_acceptance: end-to-end checks of the restoration pipeline on the Cameraman image.
//
// Prints one PASS/FAIL line per criterion. The exit status is the number of
// failing criteria that were not declared with --known-failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdsr/degradation.hpp"
#include "sdsr/framelet.hpp"
#include "sdsr/harness.hpp"
#include "sdsr/metrics.hpp"
#include "sdsr/parallel.hpp"
#include "sdsr/solver.hpp"

namespace fs = std::filesystem;
using namespace sdsr;
using namespace sdsr::harness;

namespace {

// Every gate in one place.
constexpr double kTightFrameTol = 1e-10;
constexpr double kTightFrameSeconds = 10.0;
constexpr double kBlurOracleTol = 1e-10;
constexpr double kAdjointRelTol = 1e-8;
constexpr double kNormalEqRelTol = 1e-8;
constexpr double kOperatorSeconds = 30.0;
constexpr double kBaselinePsnr = 27.64;
constexpr double kBaselinePsnrTol = 0.5;
constexpr double kBaselineSsim = 0.8545;
constexpr double kBaselineSsimTol = 0.02;
constexpr double kBaselineSeconds = 120.0;
constexpr double kOracleMinPsnr = 34.0;
constexpr double kOracleMinGain = 5.0;
constexpr double kOracleSeconds = 180.0;
constexpr double kTruncationMinGain = 0.4;
constexpr double kStagePsnrSlack = 0.05;
constexpr double kRhoSpread = 0.5;
constexpr double kFlatRange = 0.05;
constexpr int kFlatWindow = 10;
constexpr double kShiftPsnr = 48.1308;
constexpr double kShiftPsnrTol = 1e-4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

Image random_image(int h, int w, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Image u(h, w);
  for (double& v : u.pixels()) v = d(rng);
  return u;
}

double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.pixels()[i] - b.pixels()[i]));
  return m;
}

Outcome tight_frame() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 1 + static_cast<int>(rng() % 64);
    const int w = 1 + static_cast<int>(rng() % 64);
    const FrameletSystem sys(trial % 2 == 0 ? 1 : 4);
    const Image u = random_image(h, w, rng, 0.0, 255.0);
    worst = std::max(worst, max_abs_diff(sys.synthesize(sys.analyze(u)), u));
  }
  const double t = seconds_since(t0);
  return {worst <= kTightFrameTol && t < kTightFrameSeconds, format("max error %.3g, %.2f s", worst, t)};
}

Outcome operator_oracles() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  double blur_err = 0.0;
  for (PsfKind kind : {PsfKind::inverse_quadratic_15, PsfKind::uniform_9, PsfKind::gaussian_25_sigma1p6,
                       PsfKind::motion_15_angle30}) {
    const Psf psf = make_psf(kind);
    const Image u = random_image(8, 8, rng, 0.0, 255.0);
    const Image fast = BlurOperator(psf, 8, 8).apply(u);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        double s = 0.0;
        for (int a = 0; a < psf.height; ++a)
          for (int b = 0; b < psf.width; ++b)
            s += psf.at(a, b) * u(((r - a + psf.center_row()) % 8 + 8) % 8, ((c - b + psf.center_col()) % 8 + 8) % 8);
        blur_err = std::max(blur_err, std::abs(fast(r, c) - s));
      }
  }

  double adjoint_err = 0.0;
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int levels = 1 + trial % 4;
    const int h = 8 + static_cast<int>(rng() % 57), w = 8 + static_cast<int>(rng() % 57);
    const FrameletSystem sys(levels);
    const Image u = random_image(h, w, rng, -1.0, 1.0);
    CoefficientPyramid c(levels, h, w);
    for (double& v : c.values()) v = n01(rng);
    const CoefficientPyramid wu = sys.analyze(u);
    const double scale = std::sqrt(inner(wu, wu) * inner(c, c));
    adjoint_err = std::max(adjoint_err, std::abs(inner(wu, c) - inner(u, sys.synthesize(c))) / scale);
  }

  double residual = 0.0;
  for (PsfKind kind : {PsfKind::uniform_9, PsfKind::motion_15_angle30}) {
    const int h = 48, w = 40;
    const BlurOperator op(make_psf(kind), h, w);
    const FrameletSystem sys(2);
    const Image f = random_image(h, w, rng, 0.0, 255.0);
    const Image prev = random_image(h, w, rng, 0.0, 255.0);
    CoefficientPyramid alpha(2, h, w), b(2, h, w);
    for (double& v : alpha.values()) v = 50.0 * n01(rng);
    for (double& v : b.values()) v = 5.0 * n01(rng);
    const Image u = u_step(f, op, sys, alpha, b, prev, 0.01, 0.003);
    residual = std::max(residual, normal_equation_residual(u, f, op, sys, alpha, b, prev, 0.01, 0.003));
  }
  const double t = seconds_since(t0);
  const bool pass = blur_err <= kBlurOracleTol && adjoint_err <= kAdjointRelTol && residual <= kNormalEqRelTol &&
                    t < kOperatorSeconds;
  return {pass, format("blur %.3g, adjoint %.3g rel, normal equation %.3g rel, %.2f s", blur_err, adjoint_err,
                       residual, t)};
}

Outcome metric_units() {
  std::mt19937_64 rng(9);
  const Image ref = random_image(20, 30, rng, 0.0, 255.0);
  Image shifted = ref;
  for (double& v : shifted.pixels()) v -= 1.0;
  const double p_shift = psnr(shifted, ref);
  const double p_same = psnr(ref, ref);
  const double p_full = psnr(Image(4, 4, 0.0), Image(4, 4, 255.0));
  const double s_same = ssim(ref, ref);
  const bool pass = std::abs(p_shift - kShiftPsnr) <= kShiftPsnrTol && std::isinf(p_same) && p_same > 0 &&
                    std::abs(p_full) <= 1e-12 && std::abs(s_same - 1.0) <= 1e-12;
  return {pass, format("unit shift %.6f dB, identical %g dB, full-scale %.3g dB, SSIM(u,u) %.15f", p_shift, p_same,
                       p_full, s_same)};
}

const ResultRow* find_row(const std::vector<ResultRow>& rows, int sc, const std::string& method, int stage) {
  for (const auto& r : rows)
    if (r.scenario == sc && r.method == method && r.stage == stage) return &r;
  return nullptr;
}

struct Flatness {
  int runs = 0;
  double worst = 0.0;
  std::string worst_run;
};

void scan_trajectories(const fs::path& dir, Flatness& out) {
  if (!fs::is_directory(dir)) return;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || !name.ends_with("_trajectory.csv")) continue;
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);
    std::vector<double> p;
    while (std::getline(in, line))
      if (!line.empty()) p.push_back(std::stod(line.substr(line.find(',') + 1)));
    if (p.empty()) continue;
    const std::size_t from = p.size() > kFlatWindow ? p.size() - kFlatWindow : 0;
    const auto [lo, hi] = std::minmax_element(p.begin() + static_cast<std::ptrdiff_t>(from), p.end());
    ++out.runs;
    if (*hi - *lo > out.worst) {
      out.worst = *hi - *lo;
      out.worst_run = fs::relative(entry.path(), dir.parent_path()).string();
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the support-driven deblurring pipeline"};
  std::string image = std::string(SDSR_DATA_DIR) + "/cameraman.pgm";
  std::string out_dir = "acceptance";
  std::vector<int> known;
  std::vector<int> only;
  app.add_option("--image", image, "Cameraman ground truth");
  app.add_option("-o,--output-dir", out_dir, "Directory for run outputs and the report");
  app.add_option("--known-failure", known, "Criteria whose failure does not affect the exit status")->delimiter(',');
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  try {
    par::configure_threads_from_env();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  const std::set<int> known_set(known.begin(), known.end());
  const std::set<int> only_set(only.begin(), only.end());
  auto wanted = [&](std::initializer_list<int> ids) {
    if (only_set.empty()) return true;
    for (int id : ids)
      if (only_set.count(id)) return true;
    return false;
  };

  std::map<int, Outcome> results;
  auto guarded = [&](int id, const std::function<Outcome()>& fn) {
    try {
      results[id] = fn();
    } catch (const std::exception& e) {
      results[id] = {false, std::string("error: ") + e.what()};
    }
    std::printf("  criterion %d finished\n", id);
    std::fflush(stdout);
  };

  if (wanted({1})) guarded(1, tight_frame);
  if (wanted({2})) guarded(2, operator_oracles);
  if (wanted({9})) guarded(9, metric_units);

  const fs::path root(out_dir);
  ExperimentConfig base;
  base.images = {image};
  base.seed = 7;

  // Self-referenced S=2 runs on all eight scenarios at L=1; scenario 3 stage 0 is the plain-l0 baseline.
  std::vector<ResultRow> multi;
  double baseline_psnr = std::numeric_limits<double>::quiet_NaN();
  if (wanted({3, 4, 6, 8})) {
    ExperimentConfig cfg = base;
    cfg.scenarios = only_set.empty() || only_set.count(6) || only_set.count(8) ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8}
                                                                               : std::vector<int>{3};
    cfg.levels = {1};
    cfg.stages = 2;
    cfg.output_dir = (root / "multistage").string();
    fs::remove_all(cfg.output_dir);
    try {
      multi = cmd_deblur(cfg);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "multi-stage runs failed: %s\n", e.what());
    }
    if (const ResultRow* r = find_row(multi, 3, "plain_l0", 0)) baseline_psnr = r->psnr;
  }

  if (wanted({3}))
    guarded(3, [&] {
      const ResultRow* r = find_row(multi, 3, "plain_l0", 0);
      if (!r) return Outcome{false, "no plain-l0 result for scenario 3"};
      const bool pass = std::abs(r->psnr - kBaselinePsnr) <= kBaselinePsnrTol &&
                        std::abs(r->ssim - kBaselineSsim) <= kBaselineSsimTol && r->seconds <= kBaselineSeconds;
      return Outcome{pass, format("PSNR %.2f dB (target %.2f +- %.1f), SSIM %.4f (target %.4f +- %.2f), lambda %.4g, "
                                  "%.1f s per run",
                                  r->psnr, kBaselinePsnr, kBaselinePsnrTol, r->ssim, kBaselineSsim, kBaselineSsimTol,
                                  r->lambda, r->seconds)};
    });

  if (wanted({4, 8}))
    guarded(4, [&] {
      ExperimentConfig cfg = base;
      cfg.scenarios = {3};
      cfg.levels = {4};
      cfg.stages = 1;
      cfg.reference = ReferenceSource::oracle;
      cfg.output_dir = (root / "oracle").string();
      fs::remove_all(cfg.output_dir);
      const auto t0 = Clock::now();
      const auto rows = cmd_deblur(cfg);
      const double t = seconds_since(t0);
      const ResultRow* r = find_row(rows, 3, "oracle", 1);
      if (!r || r->status != "ok") return Outcome{false, "oracle run failed"};
      const double gain = r->psnr - baseline_psnr;
      const bool pass = r->psnr >= kOracleMinPsnr && gain >= kOracleMinGain && t <= kOracleSeconds;
      return Outcome{pass, format("ORACLE L=4 PSNR %.2f dB / SSIM %.4f at lambda %.4g, gain over plain l0 %.2f dB, "
                                  "%.1f s",
                                  r->psnr, r->ssim, r->lambda, gain, t)};
    });

  if (wanted({5}))
    guarded(5, [&] {
      ExperimentConfig cfg = base;
      cfg.scenarios = {3, 5};
      cfg.levels = {4};
      cfg.rho_grid = {1, 250};
      cfg.output_dir = (root / "truncation").string();
      fs::remove_all(cfg.output_dir);
      const auto rows = cmd_sweep_rho(cfg);
      bool pass = true;
      std::string detail;
      for (int sc : {3, 5}) {
        const ResultRow *full = nullptr, *trunc = nullptr;
        for (const auto& r : rows) {
          if (r.scenario != sc || r.status != "ok") continue;
          if (r.rho == 1.0) full = &r;
          if (r.rho == 250.0) trunc = &r;
        }
        if (!full || !trunc) return Outcome{false, format("missing run for scenario %d", sc)};
        const double gain = trunc->psnr - full->psnr;
        pass = pass && gain >= kTruncationMinGain;
        detail += format("%ss%d: rho=1 %.2f dB, rho=250 %.2f dB, gain %+.2f dB", detail.empty() ? "" : "; ", sc,
                         full->psnr, trunc->psnr, gain);
      }
      return Outcome{pass, detail};
    });

  if (wanted({6}))
    guarded(6, [&] {
      bool pass = true;
      std::string detail;
      for (int sc = 1; sc <= 8; ++sc) {
        const ResultRow* s1 = find_row(multi, sc, "sdsr", 1);
        const ResultRow* s2 = find_row(multi, sc, "sdsr", 2);
        if (!s1 || !s2 || s1->status != "ok" || s2->status != "ok")
          return Outcome{false, format("missing stage result for scenario %d", sc)};
        const bool psnr_ok = s2->psnr >= s1->psnr - kStagePsnrSlack;
        const bool ar_ok = !s1->ar || !s2->ar || *s2->ar >= *s1->ar;
        pass = pass && psnr_ok && ar_ok;
        detail += format("%ss%d %+.2f dB AR %.2f->%.2f%%%s", sc == 1 ? "" : ", ", sc, s2->psnr - s1->psnr,
                         s1->ar ? 100.0 * *s1->ar : 0.0, s2->ar ? 100.0 * *s2->ar : 0.0,
                         psnr_ok && ar_ok ? "" : " (x)");
      }
      return Outcome{pass, detail};
    });

  if (wanted({7}))
    guarded(7, [&] {
      ExperimentConfig cfg = base;
      cfg.scenarios = {3};
      cfg.levels = {1};
      cfg.rho_grid = {50, 100, 200, 400, 800};
      cfg.output_dir = (root / "rho_sweep").string();
      fs::remove_all(cfg.output_dir);
      const auto rows = cmd_sweep_rho(cfg);
      if (rows.size() != 5) return Outcome{false, "expected five sweep rows"};
      double lo = 1e300, hi = -1e300;
      std::string detail;
      for (const auto& r : rows) {
        if (r.status != "ok") return Outcome{false, "sweep run failed: " + r.status};
        lo = std::min(lo, r.psnr);
        hi = std::max(hi, r.psnr);
        detail += format("%g:%.2f ", r.rho, r.psnr);
      }
      return Outcome{hi - lo <= kRhoSpread, detail + format("spread %.3f dB", hi - lo)};
    });

  if (wanted({8}))
    guarded(8, [&] {
      Flatness f;
      for (const char* sub : {"multistage", "oracle"}) scan_trajectories(root / sub, f);
      if (f.runs == 0) return Outcome{false, "no trajectories found"};
      return Outcome{f.worst <= kFlatRange, format("%d runs, worst last-%d range %.4f dB (%s)", f.runs, kFlatWindow,
                                                   f.worst, f.worst_run.c_str())};
    });

  for (const char* sub : {"multistage", "oracle", "truncation", "rho_sweep"}) {
    const fs::path dir = root / sub;
    if (fs::is_directory(dir)) {
      try {
        cmd_report(dir);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "report for %s failed: %s\n", sub, e.what());
      }
    }
  }

  int unexpected = 0;
  std::printf("\n");
  for (const auto& [id, o] : results) {
    const bool tolerated = !o.pass && known_set.count(id);
    if (!o.pass && !tolerated) ++unexpected;
    std::printf("criterion %d: %s  %s%s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                tolerated ? "  [known failure]" : "");
  }
  return unexpected;
}
