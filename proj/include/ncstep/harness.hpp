#pragma once

// Experiment harness: resolves flat configs into runs, executes them
// (optionally in parallel), and persists traces, config snapshots, summaries,
// and aggregate reports. File formats are deterministic: identical configs
// produce byte-identical traces.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ncstep/config.hpp"
#include "ncstep/oracles.hpp"
#include "ncstep/problems.hpp"
#include "ncstep/solver.hpp"
#include "ncstep/theory.hpp"
#include "ncstep/trace.hpp"

namespace ncstep {
namespace harness {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Method { SS2NCG, SSG, SSNCCG };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::SS2NCG: return "ss2-nc-g";
    case Method::SSG: return "ss-g";
    case Method::SSNCCG: return "ss-nc-cg";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "ss2-nc-g" || t == "ss2ncg") return Method::SS2NCG;
  if (t == "ss-g" || t == "ssg") return Method::SSG;
  if (t == "ss-nc-cg" || t == "ssnccg") return Method::SSNCCG;
  throw ConfigError("unknown method '" + s + "'");
}

/// One fully resolved run: everything execute_run needs, no file I/O.
struct RunPlan {
  ProblemSpec problem;
  Eigen::VectorXd x0;
  OracleConfig oracle;
  SolverParams solver;
  Method method = Method::SS2NCG;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::string label;  // artifact basename
};

/// Parsed experiment: base config plus methods, seeds, and sweep axes.
struct ExperimentConfig {
  FlatConfig raw;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
  theory::TailInputs tails;

  struct SweepAxis {
    std::string path;                 // config key the axis overrides
    std::vector<std::string> values;
  };
  std::vector<SweepAxis> sweep_axes;
};

namespace detail {

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "problem.name", "problem.dim", "problem.x0",
      "oracle.zeroth_model", "oracle.eps_f", "oracle.subexp_a", "oracle.p_g",
      "oracle.eps_g", "oracle.kappa_g", "oracle.p_H", "oracle.eps_H",
      "oracle.kappa_H", "oracle.eps_lambda", "oracle.kappa_lambda",
      "oracle.failure_scale", "oracle.derive_from_eps_f",
      "solver.alpha0", "solver.beta0", "solver.tau", "solver.c_d", "solver.c_p",
      "solver.c_g", "solver.c_H", "solver.e_f", "solver.e_f_factor",
      "solver.epsbar_g", "solver.epsbar_H", "solver.epsbar_lambda",
      "solver.gamma", "solver.delta", "solver.eta", "solver.eps_cap",
      "budget.max_iters", "budget.max_fevals",
      "method", "methods", "seeds", "output_dir", "rng.stream_id",
      "theory.pbar_g", "theory.pbar_H", "theory.s"};
  return keys;
}

inline void check_keys(const FlatConfig& cfg) {
  const auto& known = known_keys();
  for (const auto& [key, value] : cfg.entries()) {
    if (key.rfind("sweep.", 0) == 0) {
      const std::string target = key.substr(6);
      if (std::find(known.begin(), known.end(), target) == known.end())
        throw ConfigError("sweep over unknown config key '" + target + "'");
      continue;
    }
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key '" + key + "'");
  }
}

inline std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ||
        c == '=' || c == '+')
      out += c;
    else
      out += '_';
  }
  return out;
}

}  // namespace detail

/// Resolve the scalar (non-sweep) portion of a flat config into a RunPlan.
/// Derivation switches: oracle.derive_from_eps_f sets eps_g = eps_f^(1/2)
/// and eps_H = eps_lambda = eps_f^(1/3); solver.e_f_factor sets
/// e_f = factor * eps_f.
inline RunPlan resolve_run(const FlatConfig& cfg, Method method, std::uint64_t seed) {
  RunPlan plan;
  plan.method = method;
  plan.seed = seed;
  plan.stream_id = static_cast<std::uint64_t>(cfg.get_long("rng.stream_id", 0));

  const std::string pname = cfg.get_string("problem.name", "rosenbrock2");
  const long dim = cfg.get_long("problem.dim", 2);
  plan.problem = make_problem(pname, dim);
  const auto x0_list = cfg.get_double_list("problem.x0");
  if (x0_list.empty()) {
    plan.x0 = plan.problem.default_start;
  } else {
    if (static_cast<Eigen::Index>(x0_list.size()) != plan.problem.dim)
      throw ConfigError("problem.x0 has wrong dimension");
    plan.x0 = Eigen::Map<const Eigen::VectorXd>(x0_list.data(),
                                                static_cast<Eigen::Index>(x0_list.size()));
  }

  OracleConfig& o = plan.oracle;
  const std::string model = cfg.get_string("oracle.zeroth_model", "bounded");
  if (model == "bounded")
    o.zeroth_model = ZerothOrderModel::Bounded;
  else if (model == "subexponential")
    o.zeroth_model = ZerothOrderModel::Subexponential;
  else
    throw ConfigError("oracle.zeroth_model must be 'bounded' or 'subexponential'");
  o.eps_f = cfg.get_double("oracle.eps_f", 0.0);
  o.subexp_a = cfg.get_double("oracle.subexp_a", 1.0);
  o.p_g = cfg.get_double("oracle.p_g", 1.0);
  o.eps_g = cfg.get_double("oracle.eps_g", 0.0);
  o.kappa_g = cfg.get_double("oracle.kappa_g", 0.0);
  o.p_H = cfg.get_double("oracle.p_H", 1.0);
  o.eps_H = cfg.get_double("oracle.eps_H", 0.0);
  o.kappa_H = cfg.get_double("oracle.kappa_H", 0.0);
  o.eps_lambda = cfg.get_double("oracle.eps_lambda", 0.0);
  o.kappa_lambda = cfg.get_double("oracle.kappa_lambda", 0.0);
  o.failure_scale = cfg.get_double("oracle.failure_scale", 10.0);
  if (cfg.get_bool("oracle.derive_from_eps_f", false)) {
    o.eps_g = std::sqrt(o.eps_f);
    o.eps_H = std::cbrt(o.eps_f);
    o.eps_lambda = o.eps_H;
  }

  SolverParams& s = plan.solver;
  s.alpha0 = cfg.get_double("solver.alpha0", 1.0);
  s.beta0 = cfg.get_double("solver.beta0", 1.0);
  s.tau = cfg.get_double("solver.tau", 0.5);
  s.c_d = cfg.get_double("solver.c_d", 0.2);
  s.c_p = cfg.get_double("solver.c_p", 0.2);
  s.c_g = cfg.get_double("solver.c_g", 0.0);
  s.c_H = cfg.get_double("solver.c_H", 0.5);
  s.e_f = cfg.get_double("solver.e_f", 0.0);
  if (cfg.has("solver.e_f_factor"))
    s.e_f = cfg.get_double("solver.e_f_factor", 0.0) * o.eps_f;
  s.epsbar_g = cfg.get_double("solver.epsbar_g", 0.0);
  s.epsbar_H = cfg.get_double("solver.epsbar_H", 0.0);
  s.epsbar_lambda = cfg.get_double("solver.epsbar_lambda", 0.0);
  s.gamma = cfg.get_double("solver.gamma", 1.0);
  s.delta = cfg.get_double("solver.delta", 1.0);
  s.eta = cfg.get_double("solver.eta", 0.5);
  s.eps_cap = cfg.get_double("solver.eps_cap", 0.1);
  s.max_iters = cfg.get_long("budget.max_iters", 1000);
  s.max_fevals = cfg.get_long("budget.max_fevals", std::numeric_limits<long>::max());

  try {
    plan.oracle.validate();
    plan.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  plan.label = method_name(method) + "_seed" + std::to_string(seed);
  return plan;
}

inline ExperimentConfig load_experiment(const FlatConfig& cfg) {
  detail::check_keys(cfg);
  ExperimentConfig exp;
  exp.raw = cfg;
  if (cfg.has("methods")) {
    for (const auto& name : cfg.get_string_list("methods"))
      exp.methods.push_back(parse_method(name));
  } else {
    exp.methods.push_back(parse_method(cfg.get_string("method", "ss2-nc-g")));
  }
  exp.seeds = cfg.get_seed_list("seeds");
  if (exp.seeds.empty()) exp.seeds = {0};
  for (size_t i = 0; i < exp.seeds.size(); ++i)
    for (size_t j = i + 1; j < exp.seeds.size(); ++j)
      if (exp.seeds[i] == exp.seeds[j])
        throw ConfigError("seeds must be distinct (repeated " +
                          std::to_string(exp.seeds[i]) + ")");
  exp.output_dir = cfg.get_string("output_dir", "out");
  exp.tails.pbar_g = cfg.get_double("theory.pbar_g", cfg.get_double("oracle.p_g", 1.0));
  exp.tails.pbar_H = cfg.get_double("theory.pbar_H", cfg.get_double("oracle.p_H", 1.0));
  exp.tails.s = cfg.get_double("theory.s", 0.0);
  for (const auto& key : cfg.sweep_keys()) {
    ExperimentConfig::SweepAxis axis;
    axis.path = key.substr(6);
    axis.values = cfg.get_string_list(key);
    if (axis.values.empty()) throw ConfigError("sweep axis '" + key + "' is empty");
    exp.sweep_axes.push_back(std::move(axis));
  }
  return exp;
}

inline ExperimentConfig load_experiment_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  return load_experiment(FlatConfig::parse(is, path));
}

inline RunResult execute_run(const RunPlan& plan) {
  const RngStream rng(plan.seed, plan.stream_id);
  switch (plan.method) {
    case Method::SS2NCG:
      return run_ss2_nc_g(plan.problem, plan.oracle, plan.solver, plan.x0, rng);
    case Method::SSG:
      return run_ss_g(plan.problem, plan.oracle, plan.solver, plan.x0, rng);
    case Method::SSNCCG:
      return run_ss_nc_cg(plan.problem, plan.oracle, plan.solver, plan.x0, rng);
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Summaries and aggregation

struct RunSummary {
  std::string label;
  Method method = Method::SS2NCG;
  std::uint64_t seed = 0;
  long iterations = 0;
  long fevals = 0, gevals = 0, hevals = 0;
  std::string status;
  std::optional<long> stopping_time;
  double final_f_true = 0.0;
  double best_f_true = 0.0;
  double best_grad_norm = 0.0;
  double max_lambda_true = 0.0;
  double terminal_f_median = 0.0;  // median f_true over the last 100 records
  double alpha_at_100 = 0.0;       // step size in effect at iteration 100
  long audit_violations = 0;
};

inline std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::HitStoppingTime: return "hit_stopping_time";
    case RunStatus::BudgetExhausted: return "budget_exhausted";
    case RunStatus::Diverged: return "diverged";
  }
  return "?";
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

inline RunSummary summarize_run(const RunPlan& plan, const RunResult& run,
                                const theory::AuditCounts* audit = nullptr) {
  RunSummary s;
  s.label = plan.label;
  s.method = plan.method;
  s.seed = plan.seed;
  s.iterations = static_cast<long>(run.records.size());
  s.fevals = run.feval_count;
  s.gevals = run.geval_count;
  s.hevals = run.heval_count;
  s.status = status_name(run.status);
  s.stopping_time = run.stopping_time;
  s.final_f_true = run.final_f_true;
  s.best_f_true = std::numeric_limits<double>::infinity();
  s.best_grad_norm = std::numeric_limits<double>::infinity();
  s.max_lambda_true = -std::numeric_limits<double>::infinity();
  std::vector<double> tail_f;
  for (const auto& rec : run.records) {
    s.best_f_true = std::min(s.best_f_true, rec.f_true);
    s.best_grad_norm = std::min(s.best_grad_norm, rec.grad_true_norm);
    s.max_lambda_true = std::max(s.max_lambda_true, rec.lambda_true);
  }
  const size_t n = run.records.size();
  for (size_t i = n > 100 ? n - 100 : 0; i < n; ++i)
    tail_f.push_back(run.records[i].f_true);
  s.terminal_f_median = median_of(std::move(tail_f));
  if (!run.records.empty()) {
    const size_t idx = std::min<size_t>(100, n - 1);
    s.alpha_at_100 = run.records[idx].alpha_k;
  }
  if (audit) s.audit_violations = audit->total_violations();
  return s;
}

/// Best-so-far metric curves sampled at power-of-two checkpoints, used to
/// align methods with different per-iteration evaluation costs.
struct CheckpointCurve {
  std::vector<long> grid;          // checkpoint positions
  std::vector<double> best_f;
  std::vector<double> best_grad;
  std::vector<double> max_lambda;
};

inline std::vector<long> power_grid(long limit) {
  std::vector<long> grid;
  for (long v = 1; v <= limit; v *= 2) {
    grid.push_back(v);
    if (v > limit / 2) break;
  }
  if (grid.empty() || grid.back() != limit) grid.push_back(limit);
  return grid;
}

/// Piecewise-constant interpolation of the running optima onto `grid`,
/// indexed by iteration (axis_fevals = false) or cumulative function
/// evaluations (axis_fevals = true).
inline CheckpointCurve checkpoint_curve(const RunResult& run,
                                        const std::vector<long>& grid,
                                        bool axis_fevals) {
  CheckpointCurve c;
  c.grid = grid;
  double bf = std::numeric_limits<double>::infinity();
  double bg = std::numeric_limits<double>::infinity();
  double ml = -std::numeric_limits<double>::infinity();
  size_t idx = 0;
  for (long cp : grid) {
    while (idx < run.records.size()) {
      const auto& rec = run.records[idx];
      const long pos = axis_fevals ? rec.fevals_so_far : rec.k + 1;
      if (pos > cp) break;
      bf = std::min(bf, rec.f_true);
      bg = std::min(bg, rec.grad_true_norm);
      ml = std::max(ml, rec.lambda_true);
      ++idx;
    }
    c.best_f.push_back(bf);
    c.best_grad.push_back(bg);
    c.max_lambda.push_back(ml);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Artifact persistence

struct RunArtifact {
  std::string trace_path;
  std::string config_path;
  std::string summary_path;
};

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << text;
  if (!os) throw IoError("write failed: " + path);
}

inline nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j;
  j["label"] = s.label;
  j["method"] = method_name(s.method);
  j["seed"] = s.seed;
  j["iterations"] = s.iterations;
  j["fevals"] = s.fevals;
  j["gevals"] = s.gevals;
  j["hevals"] = s.hevals;
  j["status"] = s.status;
  if (s.stopping_time)
    j["stopping_time"] = *s.stopping_time;
  else
    j["stopping_time"] = nullptr;
  j["final_f_true"] = s.final_f_true;
  j["best_f_true"] = s.best_f_true;
  j["best_grad_norm"] = s.best_grad_norm;
  j["max_lambda_true"] = s.max_lambda_true;
  j["terminal_f_median"] = s.terminal_f_median;
  j["alpha_at_100"] = s.alpha_at_100;
  j["audit_violations"] = s.audit_violations;
  return j;
}

/// Snapshot of the fully resolved scalar config for one run (provenance).
inline std::string snapshot_config(const FlatConfig& base, Method method,
                                   std::uint64_t seed) {
  FlatConfig snap = base;
  // sweeps are already folded into `base`; pin the per-run identity
  snap.set("method", method_name(method));
  snap.set("seeds", std::to_string(seed));
  return snap.serialize();
}

inline RunArtifact persist_run(const std::string& dir, const RunPlan& plan,
                               const FlatConfig& resolved_cfg, const RunResult& run,
                               const RunSummary& summary) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output dir: " + dir);
  RunArtifact art;
  const std::string base = dir + "/" + detail::sanitize(plan.label);
  art.trace_path = base + ".trace.csv";
  art.config_path = base + ".config.txt";
  art.summary_path = base + ".summary.json";
  trace::write_trace_file(art.trace_path, run.records);
  write_text_file(art.config_path, snapshot_config(resolved_cfg, plan.method, plan.seed));
  write_text_file(art.summary_path, summary_to_json(summary).dump(2) + "\n");
  return art;
}

/// Recompute a summary from a persisted trace and check it against the stored
/// summary file (used by loaders to detect drift).
inline bool summary_consistent(const RunArtifact& art) {
  const auto records = trace::read_trace_file(art.trace_path);
  std::ifstream is(art.summary_path);
  if (!is) throw IoError("cannot open summary: " + art.summary_path);
  nlohmann::json j;
  is >> j;
  double best_f = std::numeric_limits<double>::infinity();
  double best_g = std::numeric_limits<double>::infinity();
  for (const auto& rec : records) {
    best_f = std::min(best_f, rec.f_true);
    best_g = std::min(best_g, rec.grad_true_norm);
  }
  const long iters = static_cast<long>(records.size());
  if (j["iterations"].get<long>() != iters) return false;
  if (iters == 0) return true;
  const double tol = 1e-12;
  return std::abs(j["best_f_true"].get<double>() - best_f) <=
             tol * std::max(1.0, std::abs(best_f)) &&
         std::abs(j["best_grad_norm"].get<double>() - best_g) <=
             tol * std::max(1.0, std::abs(best_g)) &&
         j["fevals"].get<long>() == records.back().fevals_so_far;
}

// ---------------------------------------------------------------------------
// Commands

struct CompletedRun {
  RunPlan plan;
  FlatConfig resolved_cfg;
  RunResult result;
  RunSummary summary;
  RunArtifact artifact;
};

/// Sweep cell: one assignment of values to the sweep axes.
struct SweepCell {
  std::vector<std::pair<std::string, std::string>> assignment;  // path -> value
  std::string label() const {
    if (assignment.empty()) return "base";
    std::string out;
    for (const auto& [path, value] : assignment) {
      if (!out.empty()) out += "_";
      out += path + "=" + value;
    }
    return out;
  }
};

inline std::vector<SweepCell> enumerate_cells(const ExperimentConfig& exp) {
  std::vector<SweepCell> cells;
  cells.push_back(SweepCell{});
  for (const auto& axis : exp.sweep_axes) {
    std::vector<SweepCell> next;
    for (const auto& cell : cells) {
      for (const auto& value : axis.values) {
        SweepCell extended = cell;
        extended.assignment.emplace_back(axis.path, value);
        next.push_back(std::move(extended));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

inline FlatConfig apply_cell(const FlatConfig& base, const SweepCell& cell) {
  FlatConfig out = base;
  for (const auto& [path, value] : cell.assignment) out.set(path, value);
  return out;
}

/// Run a list of plans, at most `jobs` at a time. Results come back in input
/// order regardless of scheduling, and each run owns its RNG streams, so
/// concurrency cannot change any output.
inline std::vector<CompletedRun> run_plans(
    const std::vector<std::pair<RunPlan, FlatConfig>>& plans, const std::string& dir,
    int jobs) {
  std::vector<CompletedRun> completed(plans.size());
  std::atomic<size_t> cursor{0};
  std::vector<std::string> errors;
  std::mutex errors_mu;
  auto worker = [&]() {
    while (true) {
      const size_t i = cursor.fetch_add(1);
      if (i >= plans.size()) return;
      try {
        CompletedRun c;
        c.plan = plans[i].first;
        c.resolved_cfg = plans[i].second;
        c.result = execute_run(c.plan);
        const theory::TheoryConstants tc =
            theory::compute_constants(c.plan.problem, c.plan.oracle, c.plan.solver);
        const theory::AuditCounts audit =
            theory::lemma_audit_run(c.result, tc, c.plan.solver);
        c.summary = summarize_run(c.plan, c.result, &audit);
        c.artifact = persist_run(dir, c.plan, c.resolved_cfg, c.result, c.summary);
        completed[i] = std::move(c);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(errors_mu);
        errors.emplace_back(plans[i].first.label + ": " + e.what());
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(plans.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (!errors.empty()) {
    std::string msg = "run failures:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::runtime_error(msg);
  }
  return completed;
}

/// `run`: execute methods x seeds for the base config (sweep axes ignored).
/// Writes per-run artifacts plus an aggregate summary of all runs.
inline std::vector<CompletedRun> cmd_run(const ExperimentConfig& exp, int jobs = 1) {
  std::vector<std::pair<RunPlan, FlatConfig>> plans;
  for (Method m : exp.methods) {
    for (std::uint64_t seed : exp.seeds) {
      RunPlan plan = resolve_run(exp.raw, m, seed);
      plans.emplace_back(std::move(plan), exp.raw);
    }
  }
  auto completed = run_plans(plans, exp.output_dir, jobs);
  nlohmann::json agg;
  agg["runs"] = nlohmann::json::array();
  std::vector<double> final_f, best_grad;
  for (const auto& c : completed) {
    agg["runs"].push_back(summary_to_json(c.summary));
    final_f.push_back(c.summary.final_f_true);
    best_grad.push_back(c.summary.best_grad_norm);
  }
  agg["median_final_f"] = median_of(final_f);
  agg["median_best_grad"] = median_of(best_grad);
  write_text_file(exp.output_dir + "/run_summary.json", agg.dump(2) + "\n");
  return completed;
}

struct SweepCellReport {
  SweepCell cell;
  std::vector<RunSummary> run_summaries;
  // medians across seeds
  double median_best_f = 0.0;
  double median_best_grad = 0.0;
  double median_final_f = 0.0;
  double median_terminal_f = 0.0;
  double median_alpha_at_100 = 0.0;
  std::vector<theory::TailPoint> tail;
};

struct SweepReport {
  std::vector<SweepCellReport> cells;
};

inline std::vector<long> default_tail_grid(long max_iters) {
  std::vector<long> grid;
  for (long t = 1; t < max_iters; t *= 2) grid.push_back(t);
  grid.push_back(max_iters);
  return grid;
}

/// `sweep`: cross-product of the sweep axes, seeds repeated per cell.
/// Writes per-cell aggregates plus best-so-far checkpoint curves.
inline SweepReport cmd_sweep(const ExperimentConfig& exp, int jobs = 1) {
  const auto cells = enumerate_cells(exp);
  SweepReport report;
  nlohmann::json agg_json = nlohmann::json::array();
  std::ostringstream agg_csv;
  agg_csv << "cell,metric,axis,checkpoint,median,q25,q75\n";
  std::ostringstream summary_csv;
  summary_csv << "cell,method,seed,status,iterations,fevals,stopping_time,final_f,"
                 "best_f,best_grad,terminal_f_median,alpha_at_100\n";

  for (const auto& cell : cells) {
    const FlatConfig cell_cfg = apply_cell(exp.raw, cell);
    std::vector<std::pair<RunPlan, FlatConfig>> plans;
    for (Method m : exp.methods) {
      for (std::uint64_t seed : exp.seeds) {
        RunPlan plan = resolve_run(cell_cfg, m, seed);
        plan.label = cell.label() + "_" + plan.label;
        plans.emplace_back(std::move(plan), cell_cfg);
      }
    }
    auto completed = run_plans(plans, exp.output_dir, jobs);

    SweepCellReport cr;
    cr.cell = cell;
    std::vector<double> best_f, best_g, final_f, term_f, a100;
    std::vector<RunResult> results;
    const long max_iters = completed.empty() ? 1 : completed[0].plan.solver.max_iters;
    const std::vector<long> iter_grid = power_grid(max_iters);
    std::vector<std::vector<double>> curve_f(iter_grid.size()),
        curve_g(iter_grid.size()), curve_l(iter_grid.size());
    for (auto& c : completed) {
      summary_csv << cell.label() << ',' << method_name(c.summary.method) << ','
                  << c.summary.seed << ',' << c.summary.status << ','
                  << c.summary.iterations << ',' << c.summary.fevals << ','
                  << (c.summary.stopping_time ? std::to_string(*c.summary.stopping_time)
                                              : "")
                  << ',' << trace::format_double(c.summary.final_f_true) << ','
                  << trace::format_double(c.summary.best_f_true) << ','
                  << trace::format_double(c.summary.best_grad_norm) << ','
                  << trace::format_double(c.summary.terminal_f_median) << ','
                  << trace::format_double(c.summary.alpha_at_100) << '\n';
      cr.run_summaries.push_back(c.summary);
      best_f.push_back(c.summary.best_f_true);
      best_g.push_back(c.summary.best_grad_norm);
      final_f.push_back(c.summary.final_f_true);
      term_f.push_back(c.summary.terminal_f_median);
      a100.push_back(c.summary.alpha_at_100);
      const CheckpointCurve curve = checkpoint_curve(c.result, iter_grid, false);
      for (size_t i = 0; i < iter_grid.size(); ++i) {
        curve_f[i].push_back(curve.best_f[i]);
        curve_g[i].push_back(curve.best_grad[i]);
        curve_l[i].push_back(curve.max_lambda[i]);
      }
      results.push_back(std::move(c.result));
    }
    cr.median_best_f = median_of(best_f);
    cr.median_best_grad = median_of(best_g);
    cr.median_final_f = median_of(final_f);
    cr.median_terminal_f = median_of(term_f);
    cr.median_alpha_at_100 = median_of(a100);
    if (results.size() >= 2)
      cr.tail = theory::tail_estimate(results, default_tail_grid(max_iters));

    for (size_t i = 0; i < iter_grid.size(); ++i) {
      auto emit = [&](const char* metric, std::vector<double>& vals) {
        agg_csv << cell.label() << ',' << metric << ",iter," << iter_grid[i] << ','
                << trace::format_double(median_of(vals)) << ','
                << trace::format_double(quantile_of(vals, 0.25)) << ','
                << trace::format_double(quantile_of(vals, 0.75)) << '\n';
      };
      emit("best_f", curve_f[i]);
      emit("best_grad", curve_g[i]);
      emit("max_lambda", curve_l[i]);
    }

    nlohmann::json jc;
    jc["cell"] = cell.label();
    for (const auto& [path, value] : cell.assignment) jc["assignment"][path] = value;
    jc["median_best_f"] = cr.median_best_f;
    jc["median_best_grad"] = cr.median_best_grad;
    jc["median_final_f"] = cr.median_final_f;
    jc["median_terminal_f"] = cr.median_terminal_f;
    jc["median_alpha_at_100"] = cr.median_alpha_at_100;
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& pt : cr.tail)
      jt.push_back({{"t", pt.t},
                    {"fraction_exceeding", pt.fraction_exceeding},
                    {"std_error", pt.std_error}});
    jc["tail"] = jt;
    agg_json.push_back(jc);
    report.cells.push_back(std::move(cr));
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(exp.output_dir, ec);
  if (ec) throw IoError("cannot create output dir: " + exp.output_dir);
  write_text_file(exp.output_dir + "/sweep_summary.csv", summary_csv.str());
  write_text_file(exp.output_dir + "/sweep_aggregate.csv", agg_csv.str());
  write_text_file(exp.output_dir + "/sweep_aggregate.json", agg_json.dump(2) + "\n");
  return report;
}

struct CompareMethodReport {
  Method method = Method::SS2NCG;
  std::vector<long> feval_grid;
  std::vector<double> median_best_f;
  std::vector<double> median_best_grad;
  std::vector<double> median_max_lambda;
  double median_final_f = 0.0;
  double median_best_f_total = 0.0;
};

struct CompareReport {
  std::vector<CompareMethodReport> methods;
};

/// `compare`: all listed methods on identical seeds and budgets, metrics
/// aligned on a shared function-evaluation grid.
inline CompareReport cmd_compare(const ExperimentConfig& exp, int jobs = 1) {
  if (exp.methods.size() < 2)
    throw ConfigError("compare needs at least two methods");
  CompareReport report;
  std::ostringstream csv;
  csv << "method,metric,fevals,median,q25,q75\n";
  const long max_fevals_cfg = exp.raw.get_long("budget.max_fevals", 0);
  std::vector<std::pair<RunPlan, FlatConfig>> plans;
  for (Method m : exp.methods)
    for (std::uint64_t seed : exp.seeds)
      plans.emplace_back(resolve_run(exp.raw, m, seed), exp.raw);
  auto completed = run_plans(plans, exp.output_dir, jobs);

  for (Method m : exp.methods) {
    long grid_limit = max_fevals_cfg;
    if (grid_limit <= 0) {
      for (const auto& c : completed)
        if (c.plan.method == m) grid_limit = std::max(grid_limit, c.summary.fevals);
      grid_limit = std::max<long>(grid_limit, 1);
    }
    const std::vector<long> grid = power_grid(grid_limit);
    std::vector<std::vector<double>> cf(grid.size()), cg(grid.size()), cl(grid.size());
    std::vector<double> final_f, best_f;
    for (const auto& c : completed) {
      if (c.plan.method != m) continue;
      const CheckpointCurve curve = checkpoint_curve(c.result, grid, true);
      for (size_t i = 0; i < grid.size(); ++i) {
        cf[i].push_back(curve.best_f[i]);
        cg[i].push_back(curve.best_grad[i]);
        cl[i].push_back(curve.max_lambda[i]);
      }
      final_f.push_back(c.summary.final_f_true);
      best_f.push_back(c.summary.best_f_true);
    }
    CompareMethodReport mr;
    mr.method = m;
    mr.feval_grid = grid;
    for (size_t i = 0; i < grid.size(); ++i) {
      mr.median_best_f.push_back(median_of(cf[i]));
      mr.median_best_grad.push_back(median_of(cg[i]));
      mr.median_max_lambda.push_back(median_of(cl[i]));
      auto emit = [&](const char* metric, std::vector<double>& vals) {
        csv << method_name(m) << ',' << metric << ',' << grid[i] << ','
            << trace::format_double(median_of(vals)) << ','
            << trace::format_double(quantile_of(vals, 0.25)) << ','
            << trace::format_double(quantile_of(vals, 0.75)) << '\n';
      };
      emit("best_f", cf[i]);
      emit("best_grad", cg[i]);
      emit("max_lambda", cl[i]);
    }
    mr.median_final_f = median_of(final_f);
    mr.median_best_f_total = median_of(best_f);
    report.methods.push_back(std::move(mr));
  }
  write_text_file(exp.output_dir + "/compare_curves.csv", csv.str());
  nlohmann::json j = nlohmann::json::array();
  for (const auto& mr : report.methods)
    j.push_back({{"method", method_name(mr.method)},
                 {"median_final_f", mr.median_final_f},
                 {"median_best_f", mr.median_best_f_total}});
  write_text_file(exp.output_dir + "/compare_summary.json", j.dump(2) + "\n");
  return report;
}

/// `audit`: reload every trace under a directory, recompute the theory
/// constants from each run's config snapshot, and total the lemma violation
/// counts.
struct AuditReport {
  theory::AuditCounts counts;
  long runs_audited = 0;
};

inline AuditReport cmd_audit(const std::string& artifact_dir) {
  namespace fs = std::filesystem;
  AuditReport report;
  std::vector<fs::path> traces;
  if (!fs::exists(artifact_dir)) throw IoError("no such directory: " + artifact_dir);
  for (const auto& entry : fs::recursive_directory_iterator(artifact_dir)) {
    if (entry.is_regular_file()) {
      const std::string name = entry.path().string();
      if (name.size() > 10 && name.substr(name.size() - 10) == ".trace.csv")
        traces.push_back(entry.path());
    }
  }
  std::sort(traces.begin(), traces.end());
  for (const auto& trace_path : traces) {
    std::string base = trace_path.string();
    base.erase(base.size() - 10);
    std::ifstream cfg_is(base + ".config.txt");
    if (!cfg_is) throw IoError("missing config snapshot for " + trace_path.string());
    const FlatConfig cfg = FlatConfig::parse(cfg_is, base + ".config.txt");
    const Method method = parse_method(cfg.get_string("method", "ss2-nc-g"));
    const auto seeds = cfg.get_seed_list("seeds");
    const RunPlan plan = resolve_run(cfg, method, seeds.empty() ? 0 : seeds[0]);
    const theory::TheoryConstants tc =
        theory::compute_constants(plan.problem, plan.oracle, plan.solver);
    RunResult run;
    run.records = trace::read_trace_file(trace_path.string());
    run.stopping_time = theory::stopping_time(run.records, plan.solver.epsbar_g,
                                              plan.solver.epsbar_H,
                                              plan.solver.epsbar_lambda);
    if (!run.records.empty()) {
      // the trace does not carry f(x_{N}); close the audit window at the
      // last recorded iterate instead
      run.final_f_true = run.records.back().f_true;
      run.records.pop_back();
    }
    report.counts.merge(theory::lemma_audit_run(run, tc, plan.solver));
    ++report.runs_audited;
  }
  return report;
}

}  // namespace harness
}  // namespace ncstep
