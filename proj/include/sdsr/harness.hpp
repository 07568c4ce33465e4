#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdsr/degradation.hpp"
#include "sdsr/solver.hpp"

namespace sdsr::harness {

/// Raised for configuration problems detected before any output is written.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Where the stage-1 reference image of a truncated run comes from.
enum class ReferenceSource {
  file,         ///< an externally produced restoration
  internal_l0,  ///< the plain-l0 MDAL restoration computed here
  oracle,       ///< support detected on the ground truth at every stage
};

std::string to_string(ReferenceSource r);
ReferenceSource parse_reference_source(const std::string& name);

struct ExperimentConfig {
  std::vector<std::string> images;  ///< ground-truth images
  std::vector<int> scenarios{3};
  std::vector<int> levels{1};
  Regularizer regularizer = Regularizer::trunc_l0;
  std::optional<double> rho;  ///< unset: 200 for one level, 250 otherwise
  int stages = 2;
  std::uint64_t seed = 7;
  std::optional<double> lambda;  ///< unset: grid search on PSNR
  ReferenceSource reference = ReferenceSource::internal_l0;
  std::string reference_file;
  std::string output_dir = "results";
  double mu = 0.01;
  double gamma = 0.003;
  int max_inner_iters = 300;
  double tol = 5e-4;
  StopSequence stop_on = StopSequence::iterate;
  bool threshold_includes_lowpass = true;
  std::vector<double> rho_grid{50, 100, 200, 400, 800};
  int trace_every = 0;
  int jobs = 1;
  bool track_ssim = true;

  /// Checks ranges and that every referenced input file exists.
  void validate() const;
  SolverConfig solver_config(int levels) const;
  double rho_for(int levels) const;
};

inline constexpr const char* kResultsSchema = "sdsr-results/1";

struct ResultRow {
  std::string image;
  int scenario = 0;
  std::string method;
  int stage = 0;
  int levels = 1;
  double rho = 0.0;
  double lambda = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> ar;
  int iterations = 0;
  double seconds = 0.0;
  std::string stop;
  std::string status = "ok";
};

std::string csv_header();
std::string to_csv(const ResultRow& row);
ResultRow parse_csv_row(const std::string& line);

/// Reads a results file; throws IoError when the schema line or a row is malformed.
std::vector<ResultRow> read_results(const std::filesystem::path& path);

/// Append-only CSV writer shared by concurrent tasks.
class ResultsWriter {
public:
  explicit ResultsWriter(std::filesystem::path path);
  void append(const ResultRow& row);
  const std::filesystem::path& path() const noexcept { return path_; }

private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

/// File stem used to name outputs for an input image.
std::string image_stem(const std::string& path);

/// Writes observed.pgm, observed.f64, psf.txt and manifest.json for every
/// (image, scenario) pair; returns the directories written.
std::vector<std::filesystem::path> cmd_degrade(const ExperimentConfig& cfg);

/// Runs every (image, scenario, level) combination and appends to results.csv.
std::vector<ResultRow> cmd_deblur(const ExperimentConfig& cfg);

/// Single-stage runs over cfg.rho_grid (ascending) written to rho_sweep.csv.
std::vector<ResultRow> cmd_sweep_rho(const ExperimentConfig& cfg);

/// Markdown summary of every results CSV under `dir`.
std::string render_report(const std::filesystem::path& dir);

/// Writes report.md and trajectories.csv into `dir`.
void cmd_report(const std::filesystem::path& dir);

/// Text grid (row-major decimals) of the PSF of `kind`.
std::string cmd_psf_dump(PsfKind kind);

/// Detects the support of `image` and writes the mask bands plus support_map.pgm into `out_dir`.
SupportMask cmd_support_map(const std::string& image, int levels, double rho, bool include_lowpass,
                            const std::filesystem::path& out_dir);

}  // namespace sdsr::harness
