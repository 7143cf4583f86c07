#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ncstep/theory.hpp"

using namespace ncstep;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("kappa_g_prime closed form") {
  REQUIRE(theory::kappa_g_prime(0.5, 0.0) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  REQUIRE(theory::kappa_g_prime(0.5, 0.5) == Catch::Approx(5.0 / 7.0).epsilon(1e-12));
  // exact-oracle limit: both parameters to zero drives kappa' to zero
  REQUIRE(theory::kappa_g_prime(1e-9, 0.0) < 1e-8);
  REQUIRE_THROWS_AS(theory::kappa_g_prime(0.0, 0.0), std::domain_error);
  REQUIRE_THROWS_AS(theory::kappa_g_prime(0.5, 1.0), std::domain_error);
}

TEST_CASE("alpha_bar and beta_bar closed forms") {
  REQUIRE(theory::alpha_bar(1.0, 0.2, 1.0 / 3.0) == Catch::Approx(1.1).epsilon(1e-12));
  REQUIRE(theory::beta_bar(1.0, 1.0, 0.0, 0.2, 1.0) == Catch::Approx(0.9).epsilon(1e-12));
  // kappa_H at the gamma boundary makes the curvature step infeasible
  REQUIRE(theory::beta_bar(1.0, 1.0, 1.0, 0.2, 1.0) <= 0.0);
  REQUIRE_THROWS_AS(theory::alpha_bar(0.0, 0.2, 0.3), std::domain_error);
}

TEST_CASE("constants report feasibility flags") {
  const ProblemSpec p = rosenbrock_2d();
  OracleConfig o;
  SolverParams s;
  s.c_g = 0.5;
  s.c_H = 0.5;
  s.epsbar_g = 0.25;
  s.epsbar_H = 0.37;
  s.epsbar_lambda = 0.2;
  const auto tc = theory::compute_constants(p, o, s);
  REQUIRE(tc.alpha_bar_feasible);
  REQUIRE(tc.beta_bar_feasible);
  REQUIRE(tc.alpha_bar == Catch::Approx(2.0 * (0.75 - 0.2) / p.lipschitz_g));
  REQUIRE(tc.h_d_at_alpha_bar ==
          Catch::Approx(0.25 * 0.0625 * tc.alpha_bar).epsilon(1e-12));
  REQUIRE(tc.c_alpha_beta <= tc.c_alpha_beta_hform);  // c_d, gamma delta^2 factors
  REQUIRE(tc.c_tau >= 0.0);

  OracleConfig bad;
  bad.kappa_H = 1.0;  // kappa_H = gamma: infeasible curvature margin
  const auto tc2 = theory::compute_constants(p, bad, s);
  REQUIRE_FALSE(tc2.beta_bar_feasible);
}

TEST_CASE("validate_params matches the admissibility display") {
  SolverParams s;
  s.c_d = 0.2;
  s.c_p = 0.2;
  s.c_g = 0.5;
  s.c_H = 0.5;
  s.gamma = 1.0;

  SECTION("noise-free setting passes everything") {
    OracleConfig o;
    const auto rep = theory::validate_params(s, o);
    REQUIRE(rep.all_pass());
  }

  SECTION("relative gradient noise caps c_g") {
    OracleConfig o;
    o.kappa_g = 0.5;
    SolverParams s2 = s;
    s2.c_g = 0.6;  // violates c_g < 1 - kappa_g
    const auto rep = theory::validate_params(s2, o);
    REQUIRE_FALSE(rep.all_pass());
  }

  SECTION("underestimated e_f is flagged") {
    OracleConfig o;
    o.eps_f = 1e-3;
    SolverParams s2 = s;
    s2.e_f = 2.5e-4;
    const auto rep = theory::validate_params(s2, o);
    bool found = false;
    for (const auto& c : rep.checks)
      if (c.name.rfind("e_f >=", 0) == 0) {
        found = true;
        REQUIRE_FALSE(c.pass);
      }
    REQUIRE(found);
  }

  SECTION("subexponential bound includes the 5/a term") {
    OracleConfig o;
    o.zeroth_model = ZerothOrderModel::Subexponential;
    o.eps_f = 1e-3;
    o.subexp_a = 10.0;
    SolverParams s2 = s;
    s2.e_f = 0.3;  // 2e-3 + 0.5 needed
    const auto rep = theory::validate_params(s2, o);
    REQUIRE_FALSE(rep.all_pass());
    s2.e_f = 0.6;
    REQUIRE(theory::validate_params(s2, o).all_pass());
  }

  SECTION("baseline experiment config raises no warnings") {
    // eps_f = 1e-3 with e_f = 2 eps_f, c_g = 0, curvature threshold 1e-3
    OracleConfig o;
    o.eps_f = 1e-3;
    SolverParams s2;
    s2.alpha0 = 1.0;
    s2.beta0 = 1.0;
    s2.tau = 0.5;
    s2.c_d = 0.2;
    s2.c_p = 0.2;
    s2.c_g = 0.0;
    s2.c_H = 0.5;
    s2.e_f = 2e-3;
    s2.epsbar_H = 2e-3;
    const auto rep = theory::validate_params(s2, o);
    REQUIRE(rep.all_pass());
  }
}

TEST_CASE("stopping_time scans records") {
  IterationRecord stat;
  stat.k = 0;
  stat.grad_true_norm = 0.0;
  stat.lambda_true = 0.39;  // rosenbrock minimizer spectrum is positive
  IterationRecord saddle;
  saddle.k = 0;
  saddle.grad_true_norm = 0.0;
  saddle.lambda_true = -1.0;

  std::vector<IterationRecord> recs = {saddle, saddle, stat};
  recs[0].k = 0;
  recs[1].k = 1;
  recs[2].k = 2;
  const auto n = theory::stopping_time(recs, 1e-6, 1e-3, 0.0);
  REQUIRE(n.has_value());
  REQUIRE(*n == 2);

  // vacuous thresholds stop immediately
  const double inf = std::numeric_limits<double>::infinity();
  REQUIRE(theory::stopping_time(recs, inf, inf, 0.0) == 0);

  // a run stuck at the saddle never stops for eps_lambda < 1
  std::vector<IterationRecord> stuck = {saddle, saddle};
  stuck[1].k = 1;
  REQUIRE_FALSE(theory::stopping_time(stuck, 1e-6, 0.5, 0.5).has_value());
}

TEST_CASE("tail_estimate fractions and monotonicity") {
  auto with_stop = [](std::optional<long> n) {
    RunResult r;
    r.stopping_time = n;
    return r;
  };
  std::vector<RunResult> runs;
  for (int i = 0; i < 7; ++i) runs.push_back(with_stop(5));
  for (int i = 0; i < 3; ++i) runs.push_back(with_stop(std::nullopt));
  const auto curve = theory::tail_estimate(runs, {1, 5, 10, 100});
  REQUIRE(curve[0].fraction_exceeding == 1.0);  // all exceed t=1
  REQUIRE(curve[1].fraction_exceeding == Catch::Approx(0.3));
  REQUIRE(curve[1].std_error == Catch::Approx(std::sqrt(0.3 * 0.7 / 10)));
  REQUIRE(curve[3].fraction_exceeding == Catch::Approx(0.3));
  for (size_t i = 1; i < curve.size(); ++i)
    REQUIRE(curve[i].fraction_exceeding <= curve[i - 1].fraction_exceeding);
  std::vector<RunResult> one = {with_stop(1)};
  REQUIRE_THROWS_AS(theory::tail_estimate(one, {1}), std::invalid_argument);
}

TEST_CASE("audit is clean on a noise-free run") {
  const ProblemSpec p = rosenbrock_2d();
  OracleConfig o;
  SolverParams s;
  s.c_g = 0.0;
  s.c_H = 0.5;
  s.epsbar_H = 2e-3;
  s.max_iters = 1500;
  const RunResult run = run_ss2_nc_g(p, o, s, p.default_start, RngStream(31, 0));
  const auto tc = theory::compute_constants(p, o, s);
  const auto counts = theory::lemma_audit({run}, tc, s);
  REQUIRE(counts.total_violations() == 0);
  REQUIRE(counts.half_step_safety_violations == 0);
  REQUIRE(counts.iterations_audited == 1500);
  // noise-free oracles are always accurate
  REQUIRE(counts.ig_true == counts.ig_total);
  REQUIRE(counts.ih_true == counts.ih_total);
}

TEST_CASE("audit frequencies track the gradient success probability") {
  const ProblemSpec p = rosenbrock_2d();
  OracleConfig o;
  o.eps_g = 0.05;
  o.p_g = 0.8;
  SolverParams s;
  s.c_g = 0.0;
  s.c_H = 0.5;
  s.epsbar_H = 2e-3;
  s.max_iters = 4000;
  const RunResult run = run_ss2_nc_g(p, o, s, p.default_start, RngStream(32, 0));
  const auto tc = theory::compute_constants(p, o, s);
  const auto counts = theory::lemma_audit({run}, tc, s);
  const double freq = static_cast<double>(counts.ig_true) / counts.ig_total;
  const double sigma = std::sqrt(0.8 * 0.2 / counts.ig_total);
  REQUIRE(freq >= 0.8 - 3 * sigma);
  REQUIRE(freq <= 0.8 + 3 * sigma);
}

TEST_CASE("stopping time tails grow with the noise level") {
  // Two eps_f levels at fixed stationarity thresholds, matched seeds. The
  // noisier level should have stochastically larger stopping times: checked
  // with a one-sided rank-sum test at 5% plus a pointwise tail comparison.
  auto stops_at = [](double eps_f) {
    std::vector<double> stops;
    std::vector<RunResult> runs;
    for (int seed = 1; seed <= 20; ++seed) {
      const ProblemSpec p = rosenbrock_2d();
      OracleConfig o;
      o.eps_f = eps_f;
      o.eps_g = std::sqrt(eps_f);
      o.eps_H = std::cbrt(eps_f);
      o.eps_lambda = o.eps_H;
      SolverParams s;
      s.c_g = 0.5;
      s.c_H = 0.5;
      s.e_f = 2 * eps_f;
      s.epsbar_g = 0.25298221281347033;
      s.epsbar_H = 0.3651483716701107;
      s.epsbar_lambda = 0.2;
      s.max_iters = 20000;
      RunResult run = run_ss2_nc_g(p, o, s, p.default_start, RngStream(seed, 0));
      stops.push_back(static_cast<double>(run.stopping_time.value_or(s.max_iters)));
      runs.push_back(std::move(run));
    }
    return std::make_pair(stops, runs);
  };
  const auto [low, low_runs] = stops_at(1e-5);
  const auto [high, high_runs] = stops_at(1e-3);

  // Mann-Whitney U, one-sided: H1 = high level stochastically larger
  double wins = 0;
  for (double a : low)
    for (double b : high) wins += (b > a) ? 1.0 : (b == a ? 0.5 : 0.0);
  const double n = 20, m = 20;
  const double z = (wins - n * m / 2.0) / std::sqrt(n * m * (n + m + 1) / 12.0);
  REQUIRE(z > 1.645);  // significant at 5%

  const std::vector<long> grid = {128, 256, 512, 1024, 2048, 4096, 8192};
  const auto curve_low = theory::tail_estimate(low_runs, grid);
  const auto curve_high = theory::tail_estimate(high_runs, grid);
  for (size_t i = 0; i < grid.size(); ++i)
    REQUIRE(curve_high[i].fraction_exceeding >=
            curve_low[i].fraction_exceeding - 0.05);
}

TEST_CASE("floors are off when the matching noise is off") {
  OracleConfig o;
  SolverParams s;
  REQUIRE(theory::floor_epsbar_g(o, s) == 0.0);
  REQUIRE(theory::floor_epsbar_H(o, s) == 0.0);
  REQUIRE(theory::floor_epsbar_lambda(o, s) == 0.0);
  o.eps_g = 0.1;
  s.c_g = 0.0;  // disabled early termination: floor reports infeasible
  REQUIRE(theory::floor_epsbar_g(o, s) == theory::kInf);
  s.c_g = 0.5;
  s.eta = 0.5;
  REQUIRE(theory::floor_epsbar_g(o, s) ==
          Catch::Approx(2.0 * 0.1 / 0.25).epsilon(1e-12));
}
