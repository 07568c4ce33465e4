// sdsr: command-line front end for the support-driven deblurring experiments.
//
// Exit codes: 0 success, 1 invalid arguments or configuration, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "sdsr/error.hpp"
#include "sdsr/harness.hpp"
#include "sdsr/parallel.hpp"

namespace fs = std::filesystem;
using namespace sdsr;
using namespace sdsr::harness;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

struct CliState {
  ExperimentConfig cfg;
  std::string regularizer = "trunc_l0";
  std::string reference = "internal-l0";
  std::string stop_on = "iterate";
  bool exclude_lowpass = false;
  bool no_ssim = false;
};

void add_common(CLI::App* sub, CliState& st) {
  sub->add_option("-i,--image", st.cfg.images, "Ground-truth image(s), 8-bit PGM or PNG")->required();
  sub->add_option("-s,--scenarios", st.cfg.scenarios, "Scenario ids 1..8")->delimiter(',');
  sub->add_option("--seed", st.cfg.seed, "Noise seed");
  sub->add_option("-o,--output-dir", st.cfg.output_dir, "Output directory");
}

void add_solver(CLI::App* sub, CliState& st) {
  sub->add_option("-L,--levels", st.cfg.levels, "Framelet decomposition levels")->delimiter(',');
  sub->add_option("--regularizer", st.regularizer, "trunc_l0, plain_l0 or l1")
      ->check(CLI::IsMember({"trunc_l0", "plain_l0", "l1"}));
  sub->add_option("--rho", st.cfg.rho, "Support threshold ratio (default 200 for L=1, 250 otherwise)");
  sub->add_option("--stages", st.cfg.stages, "Outer stages S");
  sub->add_option("--lambda", st.cfg.lambda, "Fixed lambda (default: grid search on PSNR)");
  sub->add_option("--reference", st.reference, "Stage-1 reference: file, internal-l0 or oracle")
      ->check(CLI::IsMember({"file", "internal-l0", "oracle"}));
  sub->add_option("--reference-file", st.cfg.reference_file, "Reference image when --reference=file");
  sub->add_option("--mu", st.cfg.mu, "Quadratic penalty weight");
  sub->add_option("--gamma", st.cfg.gamma, "Proximal weight");
  sub->add_option("--max-iters", st.cfg.max_inner_iters, "Inner iteration cap K");
  sub->add_option("--tol", st.cfg.tol, "Stopping tolerance");
  sub->add_option("--stop-on", st.stop_on, "Sequence tested by the stopping rule: iterate or mean")
      ->check(CLI::IsMember({"iterate", "mean"}));
  sub->add_flag("--exclude-lowpass", st.exclude_lowpass, "Leave the low-pass band out of the support threshold");
  sub->add_flag("--no-ssim-trace", st.no_ssim, "Skip the per-iteration SSIM trajectory");
  sub->add_option("-j,--jobs", st.cfg.jobs, "Concurrent (image, scenario, level) tasks");
}

void finish(CliState& st) {
  st.cfg.regularizer = parse_regularizer(st.regularizer);
  st.cfg.reference = parse_reference_source(st.reference);
  st.cfg.stop_on = st.stop_on == "mean" ? StopSequence::mean : StopSequence::iterate;
  st.cfg.threshold_includes_lowpass = !st.exclude_lowpass;
  st.cfg.track_ssim = !st.no_ssim;
}

/// Writes every option of `sub` (defaults included) as a re-loadable config section.
void write_resolved_config(const CLI::App* sub, const fs::path& dir) {
  fs::create_directories(dir);
  std::istringstream raw(sub->config_to_str(true, false));
  std::ostringstream out;
  out << "# resolved configuration; reload with --config\n[" << sub->get_name() << "]\n";
  std::string line;
  while (std::getline(raw, line)) {
    if (line.empty() || line.ends_with("=\"\"") || line.rfind("config=", 0) == 0) continue;
    out << line << '\n';
  }
  const fs::path path = dir / (sub->get_name() + ".resolved.ini");
  std::ofstream f(path);
  if (!f) throw IoError("unwritable path: " + path.string());
  f << out.str();
}

void print_rows(const std::vector<ResultRow>& rows) {
  for (const auto& r : rows) {
    std::printf("%-12s s%d L%d %-9s stage %d  rho %-6g lambda %-10.4g PSNR %7.3f SSIM %.4f", r.image.c_str(),
                r.scenario, r.levels, r.method.c_str(), r.stage, r.rho, r.lambda, r.psnr, r.ssim);
    if (r.ar) std::printf("  AR %.2f%%", 100.0 * *r.ar);
    std::printf("  iters %d (%s)", r.iterations, r.stop.c_str());
    if (r.status != "ok") std::printf("  [%s]", r.status.c_str());
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet-frame deblurring with support-driven sparse regularization"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; options go under a [subcommand] section");
  app.option_defaults()->always_capture_default();

  CliState st;
  auto* degrade = app.add_subcommand("degrade", "Simulate observed images f = Au + noise");
  add_common(degrade, st);

  auto* deblur = app.add_subcommand("deblur", "Run plain-l0, l1 or multi-stage SDSR restorations");
  add_common(deblur, st);
  add_solver(deblur, st);
  deblur->add_option("--trace", st.cfg.trace_every, "Dump the running mean every N iterations (fixed lambda only)");

  auto* sweep = app.add_subcommand("sweep-rho", "Single-stage runs over a grid of rho values");
  add_common(sweep, st);
  add_solver(sweep, st);
  sweep->add_option("--rho-grid", st.cfg.rho_grid, "Comma-separated rho values")->delimiter(',');

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Aggregate result CSVs into report.md and trajectories.csv");
  report->add_option("dir", report_dir, "Results directory")->required();

  std::string psf_name;
  int psf_scenario = 0;
  std::string psf_out;
  auto* psf = app.add_subcommand("psf-dump", "Print a blur kernel as a text grid");
  auto* psf_kind_opt = psf->add_option("--psf", psf_name, "inverse_quadratic_15, uniform_9, gaussian_25_sigma1p6 or motion_15_angle30");
  psf->add_option("--scenario", psf_scenario, "Scenario id whose PSF to print")->excludes(psf_kind_opt);
  psf->add_option("-o,--output", psf_out, "Output file (default stdout)");

  std::string map_image;
  std::string map_out = "support_map";
  int map_levels = 1;
  std::optional<double> map_rho;
  bool map_exclude_lowpass = false;
  auto* support = app.add_subcommand("support-map", "Detect the support of an image and export the mask");
  support->add_option("-i,--image", map_image, "Reference image")->required();
  support->add_option("-L,--levels", map_levels, "Framelet decomposition levels");
  support->add_option("--rho", map_rho, "Threshold ratio (default 200 for L=1, 250 otherwise)");
  support->add_flag("--exclude-lowpass", map_exclude_lowpass, "Leave the low-pass band out of the threshold");
  support->add_option("-o,--output-dir", map_out, "Output directory");

  for (auto* sub : {degrade, deblur, sweep, report, psf, support}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    par::configure_threads_from_env();

    if (*degrade) {
      finish(st);
      st.cfg.validate();
      write_resolved_config(degrade, st.cfg.output_dir);
      for (const auto& dir : cmd_degrade(st.cfg)) std::printf("%s\n", dir.string().c_str());
    } else if (*deblur) {
      finish(st);
      st.cfg.validate();
      write_resolved_config(deblur, st.cfg.output_dir);
      print_rows(cmd_deblur(st.cfg));
    } else if (*sweep) {
      finish(st);
      st.cfg.validate();
      write_resolved_config(sweep, st.cfg.output_dir);
      print_rows(cmd_sweep_rho(st.cfg));
    } else if (*report) {
      cmd_report(report_dir);
      std::printf("%s\n", (fs::path(report_dir) / "report.md").string().c_str());
    } else if (*psf) {
      PsfKind kind;
      if (psf_scenario != 0) {
        if (psf_scenario < 1 || psf_scenario > 8) throw ConfigError("scenario ids must be in 1..8");
        kind = scenario(psf_scenario).psf;
      } else if (!psf_name.empty()) {
        kind = parse_psf_kind(psf_name);
      } else {
        throw ConfigError("psf-dump needs --psf or --scenario");
      }
      const std::string text = cmd_psf_dump(kind);
      if (psf_out.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        std::ofstream f(psf_out);
        if (!f) throw IoError("unwritable path: " + psf_out);
        f << text;
      }
    } else if (*support) {
      const double rho = map_rho.value_or(SolverConfig::for_levels(map_levels).rho);
      const SupportMask mask = cmd_support_map(map_image, map_levels, rho, !map_exclude_lowpass, map_out);
      std::printf("support %zu of %zu high-pass coefficients (%.2f%%)\n", mask.support_count(), mask.highpass_size(),
                  100.0 * static_cast<double>(mask.support_count()) / static_cast<double>(mask.highpass_size()));
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kOk;
}
