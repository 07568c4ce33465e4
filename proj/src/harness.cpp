#include "sdsr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "sdsr/metrics.hpp"
#include "sdsr/raw_io.hpp"
#include "sdsr/support.hpp"

namespace fs = std::filesystem;

namespace sdsr::harness {

std::string to_string(ReferenceSource r) {
  switch (r) {
    case ReferenceSource::file: return "file";
    case ReferenceSource::internal_l0: return "internal-l0";
    case ReferenceSource::oracle: return "oracle";
  }
  return "unknown";
}

ReferenceSource parse_reference_source(const std::string& name) {
  for (auto r : {ReferenceSource::file, ReferenceSource::internal_l0, ReferenceSource::oracle})
    if (to_string(r) == name) return r;
  throw ConfigError("unknown reference source: " + name + " (expected file, internal-l0 or oracle)");
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (images.empty()) throw ConfigError("no input images given");
  for (const auto& path : images) {
    if (!fs::is_regular_file(path)) throw ConfigError("input image not found: " + path);
    if (image_stem(path).find(',') != std::string::npos) throw ConfigError("image names may not contain commas: " + path);
  }
  if (scenarios.empty()) throw ConfigError("no scenarios given");
  for (int id : scenarios)
    if (id < 1 || id > 8) throw ConfigError("scenario ids must be in 1..8, got " + std::to_string(id));
  if (levels.empty()) throw ConfigError("no decomposition levels given");
  for (int l : levels)
    if (l < 1) throw ConfigError("levels must be >= 1");
  if (rho && !(*rho >= 1.0)) throw ConfigError("rho must be >= 1");
  if (lambda && !(*lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (stages < 1) throw ConfigError("stages must be >= 1");
  if (!(mu > 0.0)) throw ConfigError("mu must be > 0");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (max_inner_iters < 1) throw ConfigError("max-iters must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (trace_every < 0) throw ConfigError("trace must be >= 0");
  if (trace_every > 0 && !lambda) throw ConfigError("tracing needs a fixed lambda");
  if (rho_grid.empty()) throw ConfigError("rho grid is empty");
  for (double r : rho_grid)
    if (!(r >= 1.0)) throw ConfigError("rho grid values must be >= 1");
  if (output_dir.empty()) throw ConfigError("output directory is empty");
  if (reference == ReferenceSource::file) {
    if (reference_file.empty()) throw ConfigError("reference source 'file' needs --reference-file");
    if (!fs::is_regular_file(reference_file)) throw ConfigError("reference file not found: " + reference_file);
    if (images.size() != 1 || scenarios.size() != 1)
      throw ConfigError("a reference file belongs to exactly one image and scenario");
  }
}

double ExperimentConfig::rho_for(int l) const { return rho ? *rho : SolverConfig::for_levels(l).rho; }

SolverConfig ExperimentConfig::solver_config(int l) const {
  SolverConfig c = SolverConfig::for_levels(l);
  c.rho = rho_for(l);
  c.lambda = lambda.value_or(0.0);
  c.mu = mu;
  c.gamma = gamma;
  c.stages = stages;
  c.max_inner_iters = max_inner_iters;
  c.tol = tol;
  c.regularizer = regularizer;
  c.stop_on = stop_on;
  c.threshold_includes_lowpass = threshold_includes_lowpass;
  return c;
}

std::string image_stem(const std::string& path) { return fs::path(path).stem().string(); }

// ---------------------------------------------------------------------------
// Results CSV

namespace {

constexpr const char* kColumns = "image,scenario,method,stage,L,rho,lambda,psnr,ssim,ar,iters,seconds,stop,status";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw IoError(std::string("corrupt results row: bad ") + what + " '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const char* what) {
  const double v = parse_double(s, what);
  if (v != std::floor(v)) throw IoError(std::string("corrupt results row: bad ") + what + " '" + s + "'");
  return static_cast<int>(v);
}

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::string csv_header() { return std::string("# schema: ") + kResultsSchema + "\n" + kColumns + "\n"; }

std::string to_csv(const ResultRow& r) {
  std::ostringstream out;
  out << r.image << ',' << r.scenario << ',' << r.method << ',' << r.stage << ',' << r.levels << ',' << fmt(r.rho)
      << ',' << fmt(r.lambda) << ',' << fmt(r.psnr) << ',' << fmt(r.ssim) << ',' << (r.ar ? fmt(*r.ar) : "") << ','
      << r.iterations << ',' << fmt(r.seconds) << ',' << r.stop << ',' << sanitize(r.status);
  return out.str();
}

ResultRow parse_csv_row(const std::string& line) {
  const auto f = split(line, ',');
  if (f.size() != 14) throw IoError("corrupt results row: expected 14 fields, got " + std::to_string(f.size()));
  ResultRow r;
  r.image = f[0];
  r.scenario = parse_int(f[1], "scenario");
  r.method = f[2];
  r.stage = parse_int(f[3], "stage");
  r.levels = parse_int(f[4], "L");
  r.rho = parse_double(f[5], "rho");
  r.lambda = parse_double(f[6], "lambda");
  r.psnr = parse_double(f[7], "psnr");
  r.ssim = parse_double(f[8], "ssim");
  if (!f[9].empty()) r.ar = parse_double(f[9], "ar");
  r.iterations = parse_int(f[10], "iters");
  r.seconds = parse_double(f[11], "seconds");
  r.stop = f[12];
  r.status = f[13];
  return r;
}

std::vector<ResultRow> read_results(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read results file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != std::string("# schema: ") + kResultsSchema)
    throw IoError("missing or unsupported schema line in " + path.string());
  if (!std::getline(in, line) || line != kColumns) throw IoError("unexpected column header in " + path.string());
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      rows.push_back(parse_csv_row(line));
    } catch (const IoError& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }
  return rows;
}

ResultsWriter::ResultsWriter(fs::path path) : path_(std::move(path)) {
  const bool fresh = !fs::exists(path_) || fs::file_size(path_) == 0;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("unwritable path: " + path_.string());
  if (fresh) out << csv_header();
}

void ResultsWriter::append(const ResultRow& row) {
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("unwritable path: " + path_.string());
  out << to_csv(row) << '\n';
}

// ---------------------------------------------------------------------------
// degrade

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("unwritable path: " + path.string());
  out << text;
}

fs::path case_dir(const ExperimentConfig& cfg, const std::string& image, int sc) {
  return fs::path(cfg.output_dir) / (image_stem(image) + "_s" + std::to_string(sc));
}

}  // namespace

std::vector<fs::path> cmd_degrade(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<fs::path> written;
  for (const auto& path : cfg.images) {
    const Image u = load_image(path);
    for (int id : cfg.scenarios) {
      const Scenario sc = scenario(id);
      const fs::path dir = case_dir(cfg, path, id);
      ensure_dir(dir);
      const Image f = degrade(u, sc, cfg.seed);
      save_image(f, (dir / "observed.pgm").string());
      save_raw(f, (dir / "observed.f64").string());
      const Psf psf = make_psf(sc.psf);
      write_text(dir / "psf.txt", psf_to_text(psf));
      nlohmann::ordered_json m;
      m["format"] = "sdsr-degrade";
      m["version"] = 1;
      m["image"] = fs::path(path).filename().string();
      m["height"] = u.height();
      m["width"] = u.width();
      m["scenario"] = id;
      m["psf"] = to_string(sc.psf);
      m["psf_height"] = psf.height;
      m["psf_width"] = psf.width;
      m["sigma"] = sc.sigma;
      m["seed"] = cfg.seed;
      m["rng"] = "mt19937_64 + Box-Muller";
      m["blurred_psnr"] = psnr(f, u);
      write_text(dir / "manifest.json", m.dump(2) + "\n");
      written.push_back(dir);
    }
  }
  return written;
}

// ---------------------------------------------------------------------------
// deblur / sweep-rho

namespace {

struct Case {
  std::string image;
  int scenario;
  int levels;
};

std::vector<Case> expand(const ExperimentConfig& cfg) {
  std::vector<Case> cases;
  for (const auto& img : cfg.images)
    for (int sc : cfg.scenarios)
      for (int l : cfg.levels) cases.push_back({img, sc, l});
  return cases;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <class Fn>
void run_pool(std::size_t n, int jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), n));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

struct CaseContext {
  const ExperimentConfig& cfg;
  Case c;
  Image truth;
  Scenario sc;
  BlurOperator op;
  Image f;
  fs::path dir;
  std::string run_prefix;

  CaseContext(const ExperimentConfig& config, const Case& cs)
      : cfg(config),
        c(cs),
        truth(load_image(cs.image)),
        sc(scenario(cs.scenario)),
        op(make_psf(sc.psf), truth.height(), truth.width()),
        f(degrade(truth, sc, config.seed)),
        dir(case_dir(config, cs.image, cs.scenario)),
        run_prefix("L" + std::to_string(cs.levels) + "_") {}

  ResultRow row(const std::string& method, int stage) const {
    ResultRow r;
    r.image = image_stem(c.image);
    r.scenario = c.scenario;
    r.method = method;
    r.stage = stage;
    r.levels = c.levels;
    return r;
  }

  std::vector<double> grid() const {
    return cfg.lambda ? std::vector<double>{*cfg.lambda} : lambda_grid(sc.sigma);
  }
};

void fill_from_report(ResultRow& r, const StageReport& rep) {
  r.rho = rep.rho;
  r.lambda = rep.lambda;
  r.psnr = rep.final_psnr.value_or(std::numeric_limits<double>::quiet_NaN());
  r.ssim = rep.final_ssim.value_or(std::numeric_limits<double>::quiet_NaN());
  r.ar = rep.accuracy;
  r.iterations = rep.iterations;
  r.seconds = rep.seconds;
  r.stop = to_string(rep.stop);
}

ResultRow failed_row(ResultRow r, const std::exception& e) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.psnr = r.ssim = nan;
  r.stop = "error";
  if (const auto* d = dynamic_cast<const DivergenceError*>(&e))
    r.status = "diverged at iteration " + std::to_string(d->iteration());
  else
    r.status = std::string("failed: ") + e.what();
  return r;
}

void write_trajectory(const fs::path& path, const StageReport& rep) {
  std::ostringstream out;
  out << "iter,psnr,ssim\n";
  for (std::size_t k = 0; k < rep.psnr.size(); ++k)
    out << k + 1 << ',' << fmt(rep.psnr[k]) << ',' << (k < rep.ssim.size() ? fmt(rep.ssim[k]) : "") << '\n';
  write_text(path, out.str());
}

void write_stage_outputs(const CaseContext& ctx, const std::string& name, const Image& u, const StageReport& rep) {
  save_image(u, (ctx.dir / (name + ".pgm")).string());
  save_raw(u, (ctx.dir / (name + ".f64")).string());
  write_trajectory(ctx.dir / (name + "_trajectory.csv"), rep);
}

/// Plain-l0 (or l1) restoration with lambda chosen on the grid; divergent
/// grid points are skipped.
SolveResult tuned_solve(const CaseContext& ctx, Regularizer reg, std::string* status) {
  SolverConfig base = ctx.cfg.solver_config(ctx.c.levels);
  base.regularizer = reg;
  base.rho = 1.0;
  const SupportMask empty(base.levels, ctx.f.height(), ctx.f.width(), false);
  SolveOptions so;
  so.truth = &ctx.truth;
  so.track_ssim = ctx.cfg.track_ssim;
  std::optional<SolveResult> best;
  std::string last_failure;
  for (double lambda : ctx.grid()) {
    SolverConfig c = base;
    c.lambda = lambda;
    try {
      SolveResult r = mdal_solve(ctx.f, ctx.op, empty, c, ctx.f, so);
      if (!best || *r.report.final_psnr > *best->report.final_psnr) best = std::move(r);
    } catch (const DivergenceError& e) {
      last_failure = "diverged at iteration " + std::to_string(e.iteration()) + " for lambda " + fmt(lambda);
    }
  }
  if (!best) throw DivergenceError(last_failure, -1);
  if (status && !last_failure.empty()) *status = "ok (" + last_failure + ")";
  return std::move(*best);
}

struct Reference {
  Image image;
  SupportSource support = SupportSource::reference;
  std::optional<ResultRow> row;
};

Reference make_reference(const CaseContext& ctx, ResultsWriter* writer) {
  Reference ref;
  switch (ctx.cfg.reference) {
    case ReferenceSource::oracle:
      ref.image = ctx.f;
      ref.support = SupportSource::oracle;
      return ref;
    case ReferenceSource::file: {
      ref.image = load_image(ctx.cfg.reference_file);
      require_same_shape(ref.image, ctx.truth, "reference file");
      ResultRow r = ctx.row("reference", 0);
      r.psnr = psnr(ref.image, ctx.truth);
      r.ssim = ssim(ref.image, ctx.truth);
      r.stop = "none";
      ref.row = r;
      break;
    }
    case ReferenceSource::internal_l0: {
      ResultRow r = ctx.row("plain_l0", 0);
      SolveResult s = tuned_solve(ctx, Regularizer::plain_l0, &r.status);
      fill_from_report(r, s.report);
      r.rho = 1.0;
      write_stage_outputs(ctx, ctx.run_prefix + "plain_l0", s.u, s.report);
      ref.image = std::move(s.u);
      ref.row = r;
      break;
    }
  }
  if (writer && ref.row) writer->append(*ref.row);
  return ref;
}

SdsrOptions sdsr_options(const CaseContext& ctx, SupportSource support, const std::string& method) {
  SdsrOptions o;
  o.support = support;
  o.truth = &ctx.truth;
  o.track_ssim = ctx.cfg.track_ssim;
  if (!ctx.cfg.lambda) o.lambda_grid = ctx.grid();
  if (ctx.cfg.trace_every > 0) {
    const fs::path trace_dir = ctx.dir / "trace";
    ensure_dir(trace_dir);
    const std::string prefix = ctx.run_prefix + method;
    o.trace_every = ctx.cfg.trace_every;
    o.trace = [trace_dir, prefix](int stage, int k, const Image& mean) {
      char name[64];
      std::snprintf(name, sizeof(name), "_stage%d_iter%04d.pgm", stage, k);
      save_image(mean, (trace_dir / (prefix + name)).string());
    };
  }
  return o;
}

std::vector<ResultRow> deblur_case(const ExperimentConfig& cfg, const Case& c, ResultsWriter& writer) {
  CaseContext ctx(cfg, c);
  ensure_dir(ctx.dir);
  save_image(ctx.f, (ctx.dir / "observed.pgm").string());
  std::vector<ResultRow> rows;

  if (cfg.regularizer != Regularizer::trunc_l0) {
    const std::string method = to_string(cfg.regularizer);
    ResultRow r = ctx.row(method, 1);
    try {
      SolveResult s = tuned_solve(ctx, cfg.regularizer, &r.status);
      fill_from_report(r, s.report);
      write_stage_outputs(ctx, ctx.run_prefix + method, s.u, s.report);
    } catch (const DivergenceError& e) {
      r = failed_row(r, e);
    }
    writer.append(r);
    return {r};
  }

  Reference ref;
  try {
    ref = make_reference(ctx, &writer);
  } catch (const DivergenceError& e) {
    ResultRow r = failed_row(ctx.row("plain_l0", 0), e);
    writer.append(r);
    return {r};
  }
  if (ref.row) rows.push_back(*ref.row);

  const std::string method = ref.support == SupportSource::oracle ? "oracle" : "sdsr";
  try {
    SdsrResult res = sdsr_run(ctx.f, ctx.op, cfg.solver_config(c.levels), ref.image,
                              sdsr_options(ctx, ref.support, method));
    const FrameletSystem sys(c.levels);
    for (std::size_t s = 0; s < res.stages.size(); ++s) {
      const auto& rep = res.stages[s];
      ResultRow r = ctx.row(method, rep.stage);
      fill_from_report(r, rep);
      const std::string name = ctx.run_prefix + method + "_stage" + std::to_string(rep.stage);
      write_stage_outputs(ctx, name, res.stage_images[s], rep);
      save_image(support_map_image(res.masks[s], sys), (ctx.dir / (name + "_support.pgm")).string());
      writer.append(r);
      rows.push_back(r);
    }
  } catch (const DivergenceError& e) {
    ResultRow r = failed_row(ctx.row(method, 1), e);
    writer.append(r);
    rows.push_back(r);
  }
  return rows;
}

std::vector<ResultRow> sweep_case(const ExperimentConfig& cfg, const Case& c, ResultsWriter& writer) {
  CaseContext ctx(cfg, c);
  ensure_dir(ctx.dir);
  std::vector<double> grid = cfg.rho_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<ResultRow> rows;
  Reference ref;
  try {
    ref = make_reference(ctx, nullptr);
  } catch (const DivergenceError& e) {
    for (double rho : grid) {
      ResultRow r = failed_row(ctx.row("sweep", 1), e);
      r.rho = rho;
      writer.append(r);
      rows.push_back(r);
    }
    return rows;
  }
  for (double rho : grid) {
    SolverConfig sc = cfg.solver_config(c.levels);
    sc.rho = rho;
    sc.stages = 1;
    ResultRow r = ctx.row("sweep", 1);
    r.rho = rho;
    try {
      SdsrOptions o = sdsr_options(ctx, ref.support, "sweep");
      o.trace = nullptr;
      o.trace_every = 0;
      SdsrResult res = sdsr_run(ctx.f, ctx.op, sc, ref.image, o);
      fill_from_report(r, res.stages.front());
    } catch (const DivergenceError& e) {
      r = failed_row(r, e);
    }
    writer.append(r);
    rows.push_back(r);
  }
  return rows;
}

template <class Fn>
std::vector<ResultRow> run_cases(const ExperimentConfig& cfg, const std::string& csv_name, Fn fn) {
  const auto cases = expand(cfg);
  ensure_dir(cfg.output_dir);
  ResultsWriter writer(fs::path(cfg.output_dir) / csv_name);
  std::vector<std::vector<ResultRow>> per_case(cases.size());
  run_pool(cases.size(), cfg.jobs, [&](std::size_t i) { per_case[i] = fn(cfg, cases[i], writer); });
  std::vector<ResultRow> rows;
  for (auto& v : per_case) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

}  // namespace

std::vector<ResultRow> cmd_deblur(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_cases(cfg, "results.csv", deblur_case);
}

std::vector<ResultRow> cmd_sweep_rho(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_cases(cfg, "rho_sweep.csv", sweep_case);
}

// ---------------------------------------------------------------------------
// report

namespace {

struct Trajectory {
  std::string run;
  std::vector<std::tuple<int, double, std::string>> points;  // iter, psnr, raw ssim field
};

std::vector<Trajectory> read_trajectories(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& sub : fs::directory_iterator(dir)) {
    if (!sub.is_directory()) continue;
    for (const auto& e : fs::directory_iterator(sub.path())) {
      const std::string name = e.path().filename().string();
      if (e.is_regular_file() && name.ends_with("_trajectory.csv")) files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Trajectory> out;
  for (const auto& path : files) {
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line) || line != "iter,psnr,ssim") throw IoError("corrupt trajectory file: " + path.string());
    Trajectory t;
    const std::string stem = path.filename().string();
    t.run = path.parent_path().filename().string() + "/" + stem.substr(0, stem.size() - std::string("_trajectory.csv").size());
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line, ',');
      if (f.size() != 3) throw IoError("corrupt trajectory file: " + path.string());
      t.points.emplace_back(parse_int(f[0], "iter"), parse_double(f[1], "psnr"), f[2]);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string general(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string render_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("results directory not found: " + dir.string());

  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv" && e.path().filename() != "trajectories.csv")
      csvs.push_back(e.path());
  std::sort(csvs.begin(), csvs.end());

  std::vector<ResultRow> rows;
  for (const auto& p : csvs) {
    auto r = read_results(p);
    rows.insert(rows.end(), r.begin(), r.end());
  }

  std::ostringstream md;
  md << "# SDSR results\n\n";
  md << "Schema " << kResultsSchema << ". PSNR in dB against the ground truth, SSIM as mean local SSIM, "
     << "AR as the support accuracy against the oracle mask. Wall times are left out so the report is reproducible.\n\n";
  if (rows.empty()) {
    md << "No result rows found.\n";
    return md.str();
  }
  md << "Sources:";
  for (const auto& p : csvs) md << ' ' << p.filename().string();
  md << "\n";

  auto key = [](const ResultRow& r) {
    return std::make_tuple(r.scenario, r.image, r.levels, r.method, r.rho, r.stage, r.lambda);
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) { return key(a) < key(b); });

  int current = -1;
  for (const auto& r : rows) {
    if (r.scenario != current) {
      current = r.scenario;
      const Scenario sc = scenario(current);
      md << "\n## Scenario " << current << ": " << to_string(sc.psf) << ", sigma " << fixed(sc.sigma, 4) << "\n\n";
      md << "| image | method | L | stage | rho | lambda | PSNR/SSIM | AR | iters | stop | status |\n";
      md << "|---|---|---|---|---|---|---|---|---|---|---|\n";
    }
    md << "| " << r.image << " | " << r.method << " | " << r.levels << " | " << r.stage << " | " << general(r.rho)
       << " | " << general(r.lambda) << " | " << fixed(r.psnr, 2) << "/" << fixed(r.ssim, 4) << " | "
       << (r.ar ? fixed(100.0 * *r.ar, 2) + "%" : std::string("-")) << " | " << r.iterations << " | " << r.stop
       << " | " << r.status << " |\n";
  }

  const auto traj = read_trajectories(dir);
  if (!traj.empty()) {
    md << "\n## PSNR trajectories\n\nPer-iteration series are in trajectories.csv.\n\n";
    md << "| run | iters | PSNR at 1 | final PSNR | range over last 10 |\n|---|---|---|---|---|\n";
    for (const auto& t : traj) {
      if (t.points.empty()) {
        md << "| " << t.run << " | 0 | - | - | - |\n";
        continue;
      }
      const std::size_t n = t.points.size();
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t k = n > 10 ? n - 10 : 0; k < n; ++k) {
        lo = std::min(lo, std::get<1>(t.points[k]));
        hi = std::max(hi, std::get<1>(t.points[k]));
      }
      md << "| " << t.run << " | " << n << " | " << fixed(std::get<1>(t.points.front()), 2) << " | "
         << fixed(std::get<1>(t.points.back()), 2) << " | " << fixed(hi - lo, 4) << " |\n";
    }
  }
  return md.str();
}

void cmd_report(const fs::path& dir) {
  const std::string md = render_report(dir);
  std::ostringstream series;
  series << "run,iter,psnr,ssim\n";
  for (const auto& t : read_trajectories(dir))
    for (const auto& [k, p, s] : t.points) series << t.run << ',' << k << ',' << fmt(p) << ',' << s << '\n';
  write_text(dir / "report.md", md);
  write_text(dir / "trajectories.csv", series.str());
}

// ---------------------------------------------------------------------------
// psf-dump / support-map

std::string cmd_psf_dump(PsfKind kind) { return psf_to_text(make_psf(kind)); }

SupportMask cmd_support_map(const std::string& image, int levels, double rho, bool include_lowpass,
                            const fs::path& out_dir) {
  if (!fs::is_regular_file(image)) throw ConfigError("input image not found: " + image);
  if (levels < 1) throw ConfigError("levels must be >= 1");
  if (!(rho >= 1.0)) throw ConfigError("rho must be >= 1");
  const Image u = load_image(image);
  const FrameletSystem sys(levels);
  SupportMask mask = detect_support(u, sys, rho, include_lowpass);
  ensure_dir(out_dir);
  dump_mask(mask, out_dir.string());
  save_image(support_map_image(mask, sys), (out_dir / "support_map.pgm").string());
  return mask;
}

}  // namespace sdsr::harness
