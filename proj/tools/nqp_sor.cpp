// nqp_sor: generate problems, run the solvers, scan fixed omega against the
// adaptive variants, and run the deblurring demo.
//
// Exit status: 0 when every requested run converged, 1 when some run did
// not, 2 on bad input or I/O failure. The last line on stdout is a JSON
// summary in every case.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "nqpsor/nqpsor.hpp"

namespace fs = std::filesystem;
using namespace nqpsor;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Collects output paths so that nothing is written when any of them
/// exists and --force was not given.
class Outputs {
 public:
  Outputs(fs::path dir, bool force) : dir_(std::move(dir)), force_(force) {}

  fs::path claim(const fs::path& relative) {
    fs::path p = dir_ / relative;
    paths_.push_back(p);
    return p;
  }

  void check() const {
    if (force_) return;
    for (const auto& p : paths_) {
      if (fs::exists(p)) throw UsageError("refusing to overwrite " + p.string() + " (use --force)");
    }
  }

  void prepare() const {
    check();
    for (const auto& p : paths_) fs::create_directories(p.parent_path());
  }

 private:
  fs::path dir_;
  bool force_;
  std::vector<fs::path> paths_;
};

struct ProblemSource {
  std::string preset;
  std::optional<Index> n;
  std::optional<double> density;
  std::uint64_t seed = 1;
  std::optional<std::size_t> index;
  std::string matrix;
  std::string rhs;
  std::string lower;
  std::string upper;

  void add_options(CLI::App* app) {
    app->add_option("--preset", preset, "Generated problem family (toy-spd, toy-spd-k4, toy-spsd-large, toy-spsd-small)");
    app->add_option("--n", n, "Dimension override for the preset");
    app->add_option("--density", density, "Density override for the preset");
    app->add_option("--seed", seed, "Generator seed");
    app->add_option("--index", index, "Use only this member of the preset (0-based)");
    app->add_option("--matrix", matrix, "Matrix Market file (coordinate real symmetric)");
    app->add_option("--rhs", rhs, "Right-hand side vector file");
    app->add_option("--lower", lower, "Lower bound vector file (default 0)");
    app->add_option("--upper", upper, "Upper bound vector file (default +inf)");
  }

  std::vector<std::pair<std::string, NqpProblem>> load() const {
    std::vector<std::pair<std::string, NqpProblem>> out;
    if (!preset.empty()) {
      if (!matrix.empty() || !rhs.empty()) throw UsageError("give either --preset or --matrix/--rhs, not both");
      SuiteOptions opt;
      opt.n = n;
      opt.density = density;
      opt.seed = seed;
      auto suite = gen_suite(preset, opt);
      if (index) {
        if (*index >= suite.size()) throw UsageError("--index out of range for preset " + preset);
        out.emplace_back(suite[*index].name, std::move(suite[*index].problem));
      } else {
        for (auto& g : suite) out.emplace_back(g.name, std::move(g.problem));
      }
      return out;
    }
    if (matrix.empty() || rhs.empty()) throw UsageError("a problem needs --preset or both --matrix and --rhs");
    Vector lo = lower.empty() ? Vector{} : read_vector(lower);
    Vector hi = upper.empty() ? Vector{} : read_vector(upper);
    out.emplace_back(fs::path(matrix).stem().string(),
                     NqpProblem(read_matrix_market(matrix), read_vector(rhs), std::move(lo), std::move(hi)));
    return out;
  }
};

struct ConfigOptions {
  std::string file;
  std::optional<double> tolerance;
  std::optional<std::size_t> max_iterations;
  std::optional<std::string> sigma;
  std::optional<std::size_t> freeze_m;
  std::size_t kkt_every = 10;

  void add_options(CLI::App* app) {
    app->add_option("--config", file, "JSON solver configuration");
    app->add_option("--tol", tolerance, "Stopping tolerance on ||x(k+1) - x(k)||");
    app->add_option("--max-iter", max_iterations, "Iteration cap");
    app->add_option("--sigma", sigma, "Shift for apsor-shift: a positive number or 'auto'");
    app->add_option("--freeze-m", freeze_m, "Window length for apsor-freeze");
    app->add_option("--kkt-every", kkt_every, "Trace sampling period of the KKT residual (0 disables)");
  }

  SolverConfig build() const {
    SolverConfig cfg;
    if (!file.empty()) cfg = load_solver_config(file);
    if (tolerance) cfg.tolerance = *tolerance;
    if (max_iterations) cfg.max_iterations = *max_iterations;
    if (freeze_m) cfg.freeze_m = *freeze_m;
    if (sigma) {
      if (*sigma == "auto") cfg.shift_sigma.reset();
      else cfg.shift_sigma = parse_real(*sigma);
    }
    cfg.kkt_every = kkt_every;
    cfg.record_trace = true;
    cfg.validate();
    return cfg;
  }
};

std::size_t thread_budget() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NQP_SOR_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v < 1) throw std::invalid_argument(env);
      n = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw UsageError(std::string("NQP_SOR_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  return n;
}

/// Runs jobs on up to `threads` workers; results land at their own index.
template <class Job>
void run_parallel(std::size_t count, std::size_t threads, Job job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min(threads, count);
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::string omega_label(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", w);
  return buf;
}

std::string seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", s);
  return buf;
}

struct RunRow {
  std::string problem;
  std::string method;
  std::string omega;  // number or "adaptive"
  SolveResult result;
  double wall = 0.0;
};

template <class F>
RunRow timed(std::string problem, std::string method, std::string omega, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult r = f();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(problem), std::move(method), std::move(omega), std::move(r), wall};
}

constexpr const char* kSummaryHeader = "problem,method,omega,iterations,status,kkt_residual,wall_time_s";

void write_summary(const fs::path& path, const std::vector<RunRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.problem << ',' << r.method << ',' << r.omega << ',' << r.result.iterations << ','
        << (r.result.cycle_detected ? "cycle" : to_string(r.result.status)) << ','
        << format_real(r.result.final_kkt_residual) << ',' << seconds(r.wall) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---- gen ----

struct GenArgs {
  ProblemSource src;
  std::string out = ".";
  bool force = false;
};

int cmd_gen(const GenArgs& a) {
  if (a.src.preset.empty()) throw UsageError("gen requires --preset");
  SuiteOptions opt;
  opt.n = a.src.n;
  opt.density = a.src.density;
  opt.seed = a.src.seed;
  const auto suite = gen_suite(a.src.preset, opt);
  Outputs outputs(a.out, a.force);
  struct Files {
    fs::path a, b, x, y;
  };
  std::vector<Files> files;
  for (const auto& g : suite) {
    files.push_back({outputs.claim(g.name + ".A.mtx"), outputs.claim(g.name + ".b.txt"),
                     outputs.claim(g.name + ".x_true.txt"), outputs.claim(g.name + ".y_true.txt")});
  }
  outputs.prepare();
  json list = json::array();
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto& g = suite[i];
    write_matrix_market(g.problem.matrix(), files[i].a.string());
    write_vector(g.problem.rhs(), files[i].b.string());
    write_vector(g.x_true, files[i].x.string());
    write_vector(g.y_true, files[i].y.string());
    list.push_back({{"name", g.name}, {"n", g.problem.n()}, {"nnz", g.problem.matrix().nnz()}});
  }
  std::cout << json{{"command", "gen"}, {"ok", true}, {"problems", list}}.dump() << '\n';
  return 0;
}

// ---- solve ----

struct SolveArgs {
  ProblemSource src;
  ConfigOptions cfg;
  std::string solver = "apsor";
  std::optional<double> omega;
  std::string mode = "wolfe";
  std::string op;
  std::string data;
  std::string out = ".";
  bool force = false;
};

SolveResult run_nqp_solver(const std::string& solver, const NqpProblem& p, std::optional<double> omega,
                           const SolverConfig& cfg) {
  const bool needs_omega = solver == "psor" || solver == "naive";
  if (needs_omega != omega.has_value()) {
    throw UsageError(needs_omega ? "--omega is required for " + solver : "--omega is only valid for psor and naive");
  }
  if (solver == "psor") return psor_solve(p, *omega, cfg);
  if (solver == "naive") return naive_psor_solve(p, *omega, cfg);
  if (solver == "apsor") return apsor_wolfe_solve(p, cfg);
  if (solver == "apsor-freeze") return apsor_freeze_solve(p, cfg);
  if (solver == "apsor-shift") return apsor_shift_solve(p, cfg);
  throw UsageError("unknown solver '" + solver + "'");
}

int cmd_solve(const SolveArgs& a) {
  const SolverConfig cfg = a.cfg.build();
  std::vector<RunRow> rows;
  Outputs outputs(a.out, a.force);
  const fs::path summary = outputs.claim("summary.csv");

  if (a.solver == "normal") {
    if (a.op.empty() || a.data.empty()) throw UsageError("normal solver needs --operator and --data");
    RelaxationMode mode;
    if (a.mode == "fixed") {
      if (!a.omega) throw UsageError("--omega is required for --mode fixed");
      mode = RelaxationMode::fixed(*a.omega);
    } else if (a.omega) {
      throw UsageError("--omega is only valid with --mode fixed");
    } else if (a.mode == "wolfe") {
      mode = RelaxationMode::wolfe();
    } else if (a.mode == "freeze") {
      mode = RelaxationMode::freeze();
    } else {
      throw UsageError("--mode must be fixed, wolfe or freeze");
    }
    Vector lo = a.src.lower.empty() ? Vector{} : read_vector(a.src.lower);
    Vector hi = a.src.upper.empty() ? Vector{} : read_vector(a.src.upper);
    const NnlsProblem q(read_matrix_market_operator(a.op), read_vector(a.data), std::move(lo), std::move(hi));
    const fs::path trace = outputs.claim("trace.csv");
    const fs::path xfile = outputs.claim("x.txt");
    outputs.prepare();
    rows.push_back(timed(fs::path(a.op).stem().string(), "normal-" + a.mode,
                         a.omega ? omega_label(*a.omega) : "adaptive",
                         [&] { return normal_psor_solve(q, mode, cfg); }));
    write_trace_csv(*rows.back().result.trace, trace.string());
    write_vector(rows.back().result.x, xfile.string());
  } else {
    auto problems = a.src.load();
    std::vector<std::pair<fs::path, fs::path>> files;
    for (const auto& [name, p] : problems) {
      const fs::path sub = problems.size() == 1 ? fs::path() : fs::path(name);
      files.emplace_back(outputs.claim(sub / "trace.csv"), outputs.claim(sub / "x.txt"));
    }
    outputs.prepare();
    for (std::size_t i = 0; i < problems.size(); ++i) {
      const auto& [name, p] = problems[i];
      rows.push_back(timed(name, a.solver, a.omega ? omega_label(*a.omega) : "adaptive",
                           [&] { return run_nqp_solver(a.solver, p, a.omega, cfg); }));
      write_trace_csv(*rows.back().result.trace, files[i].first.string());
      write_vector(rows.back().result.x, files[i].second.string());
    }
  }
  write_summary(summary, rows);

  bool ok = true;
  json runs = json::array();
  for (const auto& r : rows) {
    ok = ok && r.result.status == Status::Converged;
    json j{{"problem", r.problem},
           {"method", r.method},
           {"status", to_string(r.result.status)},
           {"iterations", r.result.iterations},
           {"kkt_residual", r.result.final_kkt_residual},
           {"cycle", r.result.cycle_detected}};
    if (r.result.frozen_omega) j["frozen_omega"] = *r.result.frozen_omega;
    if (r.result.shift_iterations) j["shift_iterations"] = *r.result.shift_iterations;
    runs.push_back(j);
  }
  std::cout << json{{"command", "solve"}, {"ok", ok}, {"runs", runs}}.dump() << '\n';
  return ok ? 0 : 1;
}

// ---- compare ----

struct CompareArgs {
  ProblemSource src;
  ConfigOptions cfg;
  double step = 0.1;
  std::string out = ".";
  bool force = false;
};

std::vector<double> omega_grid(double step) {
  const double count = 2.0 / step;
  const long k_max = std::lround(count);
  if (!(step > 0.0) || std::abs(count - static_cast<double>(k_max)) > 1e-9 || k_max < 2) {
    throw UsageError("--step must divide 2 (for example 0.1 or 0.05)");
  }
  std::vector<double> grid;
  for (long k = 1; k < k_max; ++k) grid.push_back(static_cast<double>(k) * step);
  return grid;
}

int cmd_compare(const CompareArgs& a) {
  const SolverConfig cfg = a.cfg.build();
  const auto problems = a.src.load();
  const auto grid = omega_grid(a.step);
  Outputs outputs(a.out, a.force);
  const fs::path summary = outputs.claim("summary.csv");

  struct Job {
    std::size_t problem;
    std::string method;
    std::optional<double> omega;
    fs::path trace;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const fs::path sub = problems.size() == 1 ? fs::path() : fs::path(problems[i].first);
    for (const double w : grid) jobs.push_back({i, "psor", w, outputs.claim(sub / ("trace_psor_w" + omega_label(w) + ".csv"))});
    jobs.push_back({i, "apsor", std::nullopt, outputs.claim(sub / "trace_apsor.csv")});
    jobs.push_back({i, "apsor-freeze", std::nullopt, outputs.claim(sub / "trace_apsor-freeze.csv")});
  }
  outputs.prepare();

  std::vector<RunRow> rows(jobs.size());
  run_parallel(jobs.size(), thread_budget(), [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto& [name, p] = problems[job.problem];
    rows[j] = timed(name, job.method, job.omega ? omega_label(*job.omega) : "adaptive",
                    [&] { return run_nqp_solver(job.method, p, job.omega, cfg); });
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) write_trace_csv(*rows[j].result.trace, jobs[j].trace.string());
  write_summary(summary, rows);

  bool ok = true;
  json per_problem = json::array();
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const RunRow* best = nullptr;
    json adaptive = json::object();
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].problem != i) continue;
      const RunRow& r = rows[j];
      ok = ok && r.result.status == Status::Converged;
      if (jobs[j].omega) {
        if (r.result.status != Status::Converged) continue;
        if (!best || r.result.iterations < best->result.iterations ||
            (r.result.iterations == best->result.iterations &&
             r.result.final_kkt_residual < best->result.final_kkt_residual)) {
          best = &r;
        }
      } else {
        adaptive[r.method] = r.result.iterations;
        if (r.result.frozen_omega) adaptive["frozen_omega"] = *r.result.frozen_omega;
      }
    }
    json entry{{"problem", problems[i].first}, {"adaptive_iterations", adaptive}};
    if (best) {
      entry["best_omega"] = parse_real(best->omega);
      entry["best_iterations"] = best->result.iterations;
    }
    per_problem.push_back(entry);
  }
  std::cout << json{{"command", "compare"}, {"ok", ok}, {"runs", rows.size()}, {"problems", per_problem}}.dump()
            << '\n';
  return ok ? 0 : 1;
}

// ---- denoise ----

struct DenoiseArgs {
  std::string input;
  std::optional<Index> synthetic;
  std::string truth_file;
  double blur_sigma = 2.0;
  double noise = 0.1;
  std::uint64_t seed = 1;
  std::size_t iters = 50;
  std::string mode = "wolfe";
  std::optional<double> omega;
  std::string out = ".";
  bool force = false;
};

int cmd_denoise(const DenoiseArgs& a) {
  if (a.input.empty() == !a.synthetic.has_value()) throw UsageError("denoise needs exactly one of --input or --synthetic");
  if (a.iters == 0) throw UsageError("--iters must be positive");
  RelaxationMode mode;
  if (a.mode == "fixed") {
    if (!a.omega) throw UsageError("--omega is required for --mode fixed");
    mode = RelaxationMode::fixed(*a.omega);
  } else if (a.omega) {
    throw UsageError("--omega is only valid with --mode fixed");
  } else if (a.mode == "wolfe") {
    mode = RelaxationMode::wolfe();
  } else if (a.mode == "freeze") {
    mode = RelaxationMode::freeze();
  } else {
    throw UsageError("--mode must be fixed, wolfe or freeze");
  }

  std::optional<GrayImage> truth;
  GrayImage observed;
  Outputs outputs(a.out, a.force);
  const auto op_for = [&](const GrayImage& img) { return BlurOperator::gaussian(img.width, img.height, a.blur_sigma); };
  if (a.synthetic && !a.truth_file.empty()) throw UsageError("--truth only applies to --input");
  std::optional<BlurOperator> op;
  if (a.synthetic) {
    truth = synthetic_image(*a.synthetic);
    op.emplace(op_for(*truth));
    observed = add_noise(blur_apply(*op, *truth), a.noise, a.seed);
  } else {
    // A given input is treated as already degraded.
    observed = read_pgm(a.input);
    op.emplace(op_for(observed));
    if (!a.truth_file.empty()) {
      truth = read_pgm(a.truth_file);
      if (truth->width != observed.width || truth->height != observed.height) {
        throw UsageError("--truth size differs from --input");
      }
    }
  }
  const std::optional<fs::path> truth_out = a.synthetic ? std::optional(outputs.claim("truth.pgm")) : std::nullopt;
  const fs::path observed_out = outputs.claim("observed.pgm");
  const fs::path restored_out = outputs.claim("restored.pgm");
  const fs::path trace_out = outputs.claim("trace.csv");
  const fs::path errors_out = outputs.claim("errors.csv");
  outputs.prepare();

  SolverConfig cfg;
  cfg.tolerance = 1e-300;
  cfg.max_iterations = a.iters;
  cfg.record_trace = true;
  std::vector<double> errors;
  if (truth) {
    cfg.observer = [&](std::size_t, std::span<const double> x) { errors.push_back(relative_error(x, truth->pixels)); };
  }
  const auto t0 = std::chrono::steady_clock::now();
  const DeblurResult res = deblur(observed, *op, cfg, mode);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (truth_out) write_pgm(*truth, truth_out->string());
  write_pgm(observed, observed_out.string());
  write_pgm(res.image, restored_out.string());
  write_trace_csv(*res.solve.trace, trace_out.string());
  {
    std::ofstream out(errors_out);
    if (!out) throw std::runtime_error("cannot write " + errors_out.string());
    out << "iter,relative_error\n";
    if (truth) {
      out << 0 << ',' << format_real(relative_error(observed.pixels, truth->pixels)) << '\n';
      for (std::size_t k = 0; k < errors.size(); ++k) out << k + 1 << ',' << format_real(errors[k]) << '\n';
    }
  }

  // The iteration budget is the request here, so using all of it is success.
  const bool ok = res.solve.iterations == a.iters || res.solve.status == Status::Converged;
  json j{{"command", "denoise"},
         {"ok", ok},
         {"iterations", res.solve.iterations},
         {"status", to_string(res.solve.status)},
         {"residual_norm", residual_norm(BlurProblem(*op, observed.pixels), res.image.pixels)},
         {"wall_time_s", wall}};
  if (truth) {
    j["input_relative_error"] = relative_error(observed.pixels, truth->pixels);
    j["restored_relative_error"] = relative_error(res.image.pixels, truth->pixels);
  }
  std::cout << j.dump() << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected SOR solvers for nonnegative quadratic programs"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a generated problem family as Matrix Market and vector files");
  gen.src.add_options(gen_cmd);
  gen_cmd->add_option("--out", gen.out, "Output directory");
  gen_cmd->add_flag("--force", gen.force, "Overwrite existing files");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run one solver");
  solve.src.add_options(solve_cmd);
  solve.cfg.add_options(solve_cmd);
  solve_cmd->add_option("--solver", solve.solver, "psor, naive, apsor, apsor-freeze, apsor-shift or normal")
      ->check(CLI::IsMember({"psor", "naive", "apsor", "apsor-freeze", "apsor-shift", "normal"}));
  solve_cmd->add_option("--omega", solve.omega, "Relaxation parameter in (0, 2)");
  solve_cmd->add_option("--mode", solve.mode, "Normal solver relaxation: fixed, wolfe or freeze");
  solve_cmd->add_option("--operator", solve.op, "Least squares operator C (Matrix Market, general)");
  solve_cmd->add_option("--data", solve.data, "Least squares data vector d");
  solve_cmd->add_option("--out", solve.out, "Output directory");
  solve_cmd->add_flag("--force", solve.force, "Overwrite existing files");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Fixed-omega grid against the adaptive solvers");
  cmp.src.add_options(cmp_cmd);
  cmp.cfg.add_options(cmp_cmd);
  cmp_cmd->add_option("--step", cmp.step, "Grid step for omega (0.1 or 0.05)");
  cmp_cmd->add_option("--out", cmp.out, "Output directory");
  cmp_cmd->add_flag("--force", cmp.force, "Overwrite existing files");

  DenoiseArgs den;
  auto* den_cmd = app.add_subcommand("denoise", "Deblur a noisy image with box constraints [0, 1]");
  den_cmd->add_option("--input", den.input, "Degraded PGM image");
  den_cmd->add_option("--truth", den.truth_file, "Clean PGM image, for error reporting");
  den_cmd->add_option("--synthetic", den.synthetic, "Use a synthetic test pattern of this size");
  den_cmd->add_option("--blur-sigma", den.blur_sigma, "Gaussian blur standard deviation");
  den_cmd->add_option("--noise", den.noise, "Noise standard deviation");
  den_cmd->add_option("--seed", den.seed, "Noise seed");
  den_cmd->add_option("--iters", den.iters, "Number of sweeps");
  den_cmd->add_option("--mode", den.mode, "fixed, wolfe or freeze");
  den_cmd->add_option("--omega", den.omega, "Relaxation parameter for --mode fixed");
  den_cmd->add_option("--out", den.out, "Output directory");
  den_cmd->add_flag("--force", den.force, "Overwrite existing files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cout << json{{"ok", false}, {"error", e.what()}}.dump() << '\n';
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*solve_cmd) return cmd_solve(solve);
    if (*cmp_cmd) return cmd_compare(cmp);
    if (*den_cmd) return cmd_denoise(den);
  } catch (const std::exception& e) {
    std::cerr << "nqp_sor: " << e.what() << '\n';
    std::cout << json{{"ok", false}, {"error", e.what()}}.dump() << '\n';
    return 2;
  }
  return 2;
}
