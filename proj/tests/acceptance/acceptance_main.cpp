// Acceptance suite. Each criterion runs at its stated tolerance and prints
// one [PASS]/[FAIL] line; the process exit code is the number of failures.
//
// Artifacts (traces, config snapshots, summaries) land under
// ./acceptance_artifacts so the replay and determinism criteria can audit
// exactly what the earlier criteria produced.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ncstep/directions.hpp"
#include "ncstep/harness.hpp"
#include "ncstep/oracles.hpp"
#include "ncstep/problems.hpp"
#include "ncstep/theory.hpp"
#include "ncstep/trace.hpp"
#include "support/eig_bisect_oracle.hpp"
#include "support/test_util.hpp"

namespace fs = std::filesystem;
using namespace ncstep;

namespace {

const std::string kRoot = "acceptance_artifacts";

struct Outcome {
  bool pass = true;
  std::string detail;
};

Outcome fail(std::string detail) { return {false, std::move(detail)}; }
Outcome pass(std::string detail = "") { return {true, std::move(detail)}; }

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string fmt(double v) { return trace::format_double(v); }

// --------------------------------------------------------------------------
// 1. Oracle contract suite

Outcome criterion_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemSpec prob = rosenbrock_2d();
  const Eigen::VectorXd x = prob.default_start;

  {  // bounded zeroth order: zero violations over 1e6 samples
    OracleConfig cfg;
    cfg.eps_f = 1e-3;
    RngStream rng(101, 0);
    long violations = 0;
    for (int i = 0; i < 1000000; ++i)
      if (sample_f(prob, x, cfg, rng).error > cfg.eps_f) ++violations;
    if (violations != 0)
      return fail("bounded oracle exceeded eps_f " + std::to_string(violations) +
                  " times");
  }

  {  // subexponential tail at five thresholds over 1e6 samples
    OracleConfig cfg;
    cfg.zeroth_model = ZerothOrderModel::Subexponential;
    cfg.subexp_a = 10.0;
    cfg.eps_f = 0.01;
    const int n = 1000000;
    RngStream rng(102, 0);
    std::vector<double> errs(n);
    for (int i = 0; i < n; ++i) errs[i] = sample_f(prob, x, cfg, rng).error;
    for (int k = 1; k <= 5; ++k) {
      const double s = cfg.eps_f + k / cfg.subexp_a;
      const double bound = std::exp(-cfg.subexp_a * (s - cfg.eps_f));
      long count = 0;
      for (double e : errs)
        if (e >= s) ++count;
      const double frac = static_cast<double>(count) / n;
      const double sigma = std::sqrt(bound * (1.0 - bound) / n);
      if (frac > bound + 3.0 * sigma)
        return fail("subexponential tail at s=" + fmt(s) + ": " + fmt(frac) + " > " +
                    fmt(bound) + " + 3sigma");
    }
  }

  {  // gradient ball containment, p_g = 1, over 1e5 samples
    OracleConfig cfg;
    cfg.eps_g = 0.05;
    RngStream rng(103, 0);
    for (int i = 0; i < 100000; ++i) {
      const auto s = sample_g(prob, x, cfg, rng);
      if (s.error_norm > cfg.eps_g) return fail("gradient sample left the ball");
    }
  }

  {  // Hessian spectral perturbation over 1e4 samples
    OracleConfig cfg;
    cfg.eps_H = 0.1;
    RngStream rng(104, 0);
    for (int i = 0; i < 10000; ++i) {
      const auto s = sample_H(prob, x, cfg, rng);
      if ((s.estimate - s.true_hess).operatorNorm() > cfg.eps_H * (1 + 1e-12))
        return fail("Hessian sample exceeded eps_H in spectral norm");
      if (s.estimate != s.estimate.transpose())
        return fail("Hessian sample not symmetric");
    }
  }

  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (dt > 60.0) return fail("runtime " + fmt(dt) + "s exceeds 60s");
  return pass("1e6+1e6+1e5+1e4 samples in " + fmt(dt) + "s");
}

// --------------------------------------------------------------------------
// 2. Negative curvature direction contract

Outcome criterion_nc_contract() {
  RngStream rng(201, 0);
  long violations = 0;
  int found = 0;
  while (found < 100) {
    const Eigen::MatrixXd h = ncstep_test::random_symmetric(rng, 5);
    const EigenResult eig = min_eigenpair(h);
    if (!(eig.lambda_min < 0.0)) continue;
    ++found;
    for (double gamma : {0.5, 0.9, 1.0}) {
      for (double delta : {0.5, 1.0, 2.0}) {
        const NCDirection d = nc_direction(h, eig, gamma, delta);
        const double qn2 = d.q.squaredNorm();
        const double scale = std::abs(eig.lambda_min);
        if (!(d.curvature <= gamma * eig.lambda_min * qn2 + 1e-10 * scale * qn2))
          ++violations;
        if (!(d.curvature < 0.0)) ++violations;
        if (std::abs(d.q.norm() - delta * scale) > 1e-10 * delta * scale)
          ++violations;
      }
    }
  }
  if (violations != 0)
    return fail(std::to_string(violations) + " violations over 900 checks");
  return pass("100 matrices x 9 (gamma, delta) pairs, zero violations");
}

// --------------------------------------------------------------------------
// 3. Eigensolver vs the bisection oracle

Outcome criterion_eigensolver() {
  RngStream rng(301, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd h = 3.0 * ncstep_test::random_symmetric(rng, 5);
    const double got = min_eigenpair(h).lambda_min;
    const double ref = ncstep_test::min_eigenvalue_bisect(h);
    worst = std::max(worst, std::abs(got - ref));
  }
  if (worst > 1e-9) return fail("max deviation " + fmt(worst) + " > 1e-9");
  return pass("max deviation " + fmt(worst));
}

// --------------------------------------------------------------------------
// 4. Lemma audit under bounded noise at the accuracy floors

FlatConfig lemma_audit_config() {
  OracleConfig o;
  o.eps_f = 1e-3;
  o.eps_g = std::sqrt(1e-3);
  o.eps_H = 0.1;
  o.eps_lambda = 0.1;
  SolverParams s;
  s.c_g = 0.5;
  s.c_H = 0.5;
  FlatConfig cfg = FlatConfig::parse_string(
      "problem.name = rosenbrock2\n"
      "oracle.eps_f = 1e-3\n"
      "oracle.eps_H = 0.1\n"
      "oracle.eps_lambda = 0.1\n"
      "solver.e_f = 2e-3\n"
      "solver.c_g = 0.5\n"
      "solver.c_H = 0.5\n"
      "budget.max_iters = 5000\n"
      "seeds = 1, 2, 3, 4, 5, 6, 7, 8, 9, 10\n");
  cfg.set("oracle.eps_g", fmt(o.eps_g));
  cfg.set("solver.epsbar_g", fmt(theory::floor_epsbar_g(o, s)));
  cfg.set("solver.epsbar_H", fmt(theory::floor_epsbar_H(o, s)));
  cfg.set("solver.epsbar_lambda", fmt(theory::floor_epsbar_lambda(o, s)));
  return cfg;
}

Outcome criterion_lemma_audit() {
  const auto t0 = std::chrono::steady_clock::now();
  FlatConfig cfg = lemma_audit_config();
  cfg.set("output_dir", kRoot + "/c4");
  const auto exp = harness::load_experiment(cfg);
  {
    const auto plan = harness::resolve_run(exp.raw, exp.methods[0], exp.seeds[0]);
    const auto report = theory::validate_params(plan.solver, plan.oracle);
    if (!report.all_pass())
      return fail("audit config raised warnings:\n" + report.to_string());
  }
  const auto completed = harness::cmd_run(exp);
  theory::AuditCounts counts;
  for (const auto& c : completed) {
    const auto tc =
        theory::compute_constants(c.plan.problem, c.plan.oracle, c.plan.solver);
    counts.merge(theory::lemma_audit_run(c.result, tc, c.plan.solver));
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream os;
  os << "(i)=" << counts.small_step_descent_failures
     << " (ii)=" << counts.small_step_nc_failures
     << " (iii)=" << counts.descent_decrease_violations
     << " (iv)=" << counts.nc_decrease_violations
     << " (v)=" << counts.both_skipped_before_stop << " over "
     << counts.iterations_audited << " iterations in " << fmt(dt) << "s";
  if (counts.total_violations() != 0) return fail(os.str());
  if (dt > 300.0) return fail("runtime " + fmt(dt) + "s exceeds 5 min");
  return pass(os.str());
}

// --------------------------------------------------------------------------
// 5. Deterministic reduction

Outcome criterion_deterministic() {
  FlatConfig cfg = FlatConfig::parse_string(
      "problem.name = rosenbrock2\n"
      "solver.c_H = 0.5\n"
      "solver.epsbar_g = 1e-6\n"
      "solver.epsbar_H = 2e-3\n"
      "budget.max_iters = 50000\n"
      "seeds = 1\n");
  cfg.set("output_dir", kRoot + "/c5");
  const auto completed = harness::cmd_run(harness::load_experiment(cfg));
  const RunResult& run = completed[0].result;
  if (run.status != RunStatus::HitStoppingTime)
    return fail("did not reach the gradient target in 50000 iterations (best " +
                fmt(completed[0].summary.best_grad_norm) + ")");
  long monotonicity_violations = 0;
  for (size_t i = 0; i + 1 < run.records.size(); ++i) {
    const auto& rec = run.records[i];
    if ((rec.theta_g || rec.theta_H) && run.records[i + 1].f_true > rec.f_true)
      ++monotonicity_violations;
  }
  if (monotonicity_violations != 0)
    return fail(std::to_string(monotonicity_violations) + " monotonicity violations");
  return pass("gradient norm " + fmt(run.records.back().grad_true_norm) + " at k=" +
              std::to_string(run.records.back().k) + ", monotone accepted steps");
}

// --------------------------------------------------------------------------
// 6. Function-noise sweep ordering

Outcome criterion_noise_sweep() {
  const auto t0 = std::chrono::steady_clock::now();
  FlatConfig cfg = FlatConfig::parse_string(
      "problem.name = rosenbrock2\n"
      "oracle.derive_from_eps_f = true\n"
      "solver.e_f_factor = 2\n"
      "solver.c_H = 0.5\n"
      "solver.epsbar_H = 2e-3\n"
      "budget.max_iters = 20000\n"
      "seeds = 1, 2, 3, 4, 5, 6, 7, 8, 9, 10\n"
      "sweep.oracle.eps_f = 0, 1e-8, 1e-5, 1e-3, 1e-2\n");
  cfg.set("output_dir", kRoot + "/c6");
  const auto report = harness::cmd_sweep(harness::load_experiment(cfg), 4);
  std::vector<double> medians;
  std::ostringstream os;
  for (const auto& cell : report.cells) {
    medians.push_back(cell.median_best_grad);
    os << cell.cell.label() << "=" << fmt(cell.median_best_grad) << " ";
  }
  if (medians.size() != 5) return fail("expected 5 sweep cells");
  for (size_t i = 1; i < medians.size(); ++i)
    if (medians[i - 1] > medians[i])
      return fail("median best gradient norm not nondecreasing: " + os.str());
  if (!(std::max(medians[0], medians[1]) < std::min(medians[3], medians[4])))
    return fail("low/high noise groups not strictly separated: " + os.str());
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (dt > 900.0) return fail("runtime " + fmt(dt) + "s exceeds 15 min");
  return pass(os.str() + "in " + fmt(dt) + "s");
}

// --------------------------------------------------------------------------
// 7. Armijo relaxation sweep ordering

Outcome criterion_ef_sweep() {
  FlatConfig cfg = FlatConfig::parse_string(
      "problem.name = rosenbrock2\n"
      "oracle.eps_f = 1e-3\n"
      "oracle.derive_from_eps_f = true\n"
      "solver.c_H = 0.5\n"
      "solver.epsbar_H = 2e-3\n"
      "budget.max_iters = 2000\n"
      "seeds = 1, 2, 3, 4, 5, 6, 7, 8, 9, 10\n"
      "sweep.solver.e_f_factor = 0.25, 2, 16, 128\n");
  cfg.set("output_dir", kRoot + "/c7");
  const auto report = harness::cmd_sweep(harness::load_experiment(cfg), 4);
  if (report.cells.size() != 4) return fail("expected 4 sweep cells");
  std::ostringstream os;
  for (const auto& cell : report.cells)
    os << cell.cell.label() << ": terminal_f=" << fmt(cell.median_terminal_f)
       << " alpha100=" << fmt(cell.median_alpha_at_100) << "  ";
  const double f_matched = report.cells[1].median_terminal_f;  // e_f = 2 eps_f
  const double f_largest = report.cells[3].median_terminal_f;  // e_f = 128 eps_f
  if (!(f_matched <= f_largest))
    return fail("terminal f not nondecreasing from 2eps_f to 128eps_f: " + os.str());
  for (size_t i = 1; i < 4; ++i)
    if (report.cells[i - 1].median_alpha_at_100 > report.cells[i].median_alpha_at_100)
      return fail("alpha at iteration 100 not nondecreasing in e_f: " + os.str());
  return pass(os.str());
}

// --------------------------------------------------------------------------
// 8. Saddle escape comparison

Outcome criterion_saddle_escape() {
  FlatConfig cfg = FlatConfig::parse_string(
      "problem.name = saddle_quartic\n"
      "problem.x0 = 0, 0\n"
      "oracle.eps_f = 1e-3\n"
      "oracle.eps_H = 0.1\n"
      "oracle.eps_lambda = 0.1\n"
      "solver.e_f = 2e-3\n"
      "solver.c_H = 0.5\n"
      "solver.epsbar_H = 2e-3\n"
      "solver.eps_cap = 0.1\n"
      "methods = ss2-nc-g, ss-g, ss-nc-cg\n"
      "budget.max_iters = 2000\n"
      "budget.max_fevals = 2000\n"
      "seeds = 1, 2, 3, 4, 5, 6, 7, 8, 9, 10\n");
  cfg.set("output_dir", kRoot + "/c8");
  const auto report = harness::cmd_compare(harness::load_experiment(cfg), 4);
  double f_ss2 = 0, f_ssg = 0, f_cg = 0;
  for (const auto& m : report.methods) {
    if (m.method == harness::Method::SS2NCG) f_ss2 = m.median_final_f;
    if (m.method == harness::Method::SSG) f_ssg = m.median_final_f;
    if (m.method == harness::Method::SSNCCG) f_cg = m.median_final_f;
  }
  std::ostringstream os;
  os << "ss2-nc-g=" << fmt(f_ss2) << " ss-nc-cg=" << fmt(f_cg)
     << " ss-g=" << fmt(f_ssg);
  if (!(f_ss2 <= -0.2)) return fail("ss2-nc-g did not escape: " + os.str());
  if (!(f_cg <= -0.2)) return fail("ss-nc-cg did not escape: " + os.str());
  if (!(f_ssg >= -1e-3)) return fail("ss-g left the saddle: " + os.str());
  return pass(os.str());
}

// --------------------------------------------------------------------------
// 9. Step size ledger replay over every persisted trace

Outcome criterion_replay() {
  long checked = 0;
  for (const auto& entry : fs::recursive_directory_iterator(kRoot)) {
    if (!entry.is_regular_file()) continue;
    const std::string path = entry.path().string();
    if (path.size() <= 10 || path.substr(path.size() - 10) != ".trace.csv") continue;
    std::string base = path.substr(0, path.size() - 10);
    std::ifstream cfg_is(base + ".config.txt");
    if (!cfg_is) return fail("missing config snapshot for " + path);
    const FlatConfig cfg = FlatConfig::parse(cfg_is);
    const double alpha0 = cfg.get_double("solver.alpha0", 1.0);
    const double beta0 = cfg.get_double("solver.beta0", 1.0);
    const double tau = cfg.get_double("solver.tau", 0.5);
    const bool shared =
        harness::parse_method(cfg.get_string("method", "ss2-nc-g")) ==
        harness::Method::SSNCCG;
    const auto records = trace::read_trace_file(path);
    if (!trace::replay_step_sizes(records, alpha0, beta0, tau, shared))
      return fail("replay mismatch in " + path);
    ++checked;
  }
  if (checked == 0) return fail("no traces found to replay");
  return pass(std::to_string(checked) + " traces replayed bit-exactly");
}

// --------------------------------------------------------------------------
// 10. Byte-identical determinism

Outcome criterion_determinism() {
  FlatConfig cfg = lemma_audit_config();
  cfg.set("seeds", "1");
  cfg.set("output_dir", kRoot + "/c10");
  const auto completed = harness::cmd_run(harness::load_experiment(cfg));
  const std::string repeat = slurp(completed[0].artifact.trace_path);
  const std::string original = slurp(kRoot + "/c4/ss2-nc-g_seed1.trace.csv");
  if (original.empty()) return fail("criterion 4 trace missing");
  if (repeat != original) return fail("repeated run differs from the original trace");
  return pass(std::to_string(original.size()) + " bytes identical");
}

}  // namespace

int main() {
  fs::remove_all(kRoot);
  fs::create_directories(kRoot);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "oracle contract suite", criterion_oracles},
      {2, "negative curvature direction contract", criterion_nc_contract},
      {3, "eigensolver matches the bisection oracle", criterion_eigensolver},
      {4, "per-iteration lemma audit (bounded noise)", criterion_lemma_audit},
      {5, "deterministic reduction on rosenbrock", criterion_deterministic},
      {6, "function-noise sweep ordering", criterion_noise_sweep},
      {7, "Armijo relaxation sweep ordering", criterion_ef_sweep},
      {8, "saddle escape comparison", criterion_saddle_escape},
      {9, "step size ledger replay", criterion_replay},
      {10, "byte-identical determinism", criterion_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = fail(std::string("exception: ") + e.what());
    }
    std::printf("[%s] criterion %d: %s%s%s\n", outcome.pass ? "PASS" : "FAIL", c.id,
                c.name, outcome.detail.empty() ? "" : " -- ", outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures;
}
