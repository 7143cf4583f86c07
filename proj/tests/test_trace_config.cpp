#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "ncstep/config.hpp"
#include "ncstep/solver.hpp"
#include "ncstep/trace.hpp"

using namespace ncstep;

namespace {

RunResult small_noisy_run() {
  const ProblemSpec p = rosenbrock_2d();
  OracleConfig cfg;
  cfg.eps_f = 1e-3;
  cfg.eps_g = 0.05;
  cfg.eps_H = 0.1;
  cfg.eps_lambda = 0.1;
  SolverParams params;
  params.c_H = 0.5;
  params.epsbar_H = 2e-3;
  params.e_f = 2e-3;
  params.max_iters = 60;
  return run_ss2_nc_g(p, cfg, params, p.default_start, RngStream(14, 0));
}

bool records_equal(const IterationRecord& a, const IterationRecord& b) {
  auto same = [](double x, double y) {
    return (std::isnan(x) && std::isnan(y)) || x == y;
  };
  return a.k == b.k && a.fevals_so_far == b.fevals_so_far && a.x == b.x &&
         same(a.f_true, b.f_true) && same(a.fhat_true, b.fhat_true) &&
         same(a.F_est, b.F_est) && same(a.grad_true_norm, b.grad_true_norm) &&
         same(a.g_est_norm, b.g_est_norm) && same(a.lambda_true, b.lambda_true) &&
         same(a.lambda_hat_true, b.lambda_hat_true) &&
         same(a.lambda_est, b.lambda_est) && same(a.alpha_k, b.alpha_k) &&
         same(a.beta_k, b.beta_k) && same(a.alpha_next, b.alpha_next) &&
         same(a.beta_next, b.beta_next) && a.omega_g == b.omega_g &&
         a.omega_H == b.omega_H && a.theta_g == b.theta_g && a.theta_H == b.theta_H &&
         a.i_f == b.i_f && a.i_g == b.i_g && a.i_g_draw == b.i_g_draw &&
         a.ihat_f == b.ihat_f && a.i_H == b.i_H && a.i_H_lin == b.i_H_lin &&
         a.sign_choice == b.sign_choice;
}

}  // namespace

TEST_CASE("trace round-trips losslessly") {
  const RunResult run = small_noisy_run();
  std::ostringstream os;
  trace::write_trace(os, run.records);
  std::istringstream is(os.str());
  const auto loaded = trace::read_trace(is);
  REQUIRE(loaded.size() == run.records.size());
  for (size_t i = 0; i < loaded.size(); ++i)
    REQUIRE(records_equal(loaded[i], run.records[i]));
  // serialization is deterministic
  std::ostringstream os2;
  trace::write_trace(os2, loaded);
  REQUIRE(os.str() == os2.str());
}

TEST_CASE("trace rejects malformed input") {
  std::istringstream no_header("1,2,3\n");
  REQUIRE_THROWS(trace::read_trace(no_header));
  std::istringstream bad_header("k,wrong\n");
  REQUIRE_THROWS(trace::read_trace(bad_header));
  std::istringstream short_row(std::string(trace::kHeader) + "\n1,2,3\n");
  REQUIRE_THROWS(trace::read_trace(short_row));
}

TEST_CASE("shortest round-trip formatting") {
  REQUIRE(trace::format_double(0.1) == "0.1");
  REQUIRE(trace::format_double(24.2) == "24.2");
  REQUIRE(trace::parse_double(trace::format_double(1.0 / 3.0)) == 1.0 / 3.0);
  const double tiny = 5e-324;
  REQUIRE(trace::parse_double(trace::format_double(tiny)) == tiny);
  REQUIRE(std::isnan(trace::parse_double(
      trace::format_double(std::numeric_limits<double>::quiet_NaN()))));
}

TEST_CASE("step size replay flags tampered traces") {
  const RunResult run = small_noisy_run();
  REQUIRE(trace::replay_step_sizes(run.records, 1.0, 1.0, 0.5, false));
  auto tampered = run.records;
  for (auto& rec : tampered) {
    if (rec.omega_g) {
      rec.theta_g = !rec.theta_g;  // flip one success flag
      break;
    }
  }
  REQUIRE_FALSE(trace::replay_step_sizes(tampered, 1.0, 1.0, 0.5, false));
}

TEST_CASE("flat config parsing") {
  const std::string text =
      "# comment line\n"
      "problem.name = rosenbrock2   # trailing comment\n"
      "oracle.eps_f = 1e-3\n"
      "solver.tau=0.5\n"
      "seeds = 1, 2, 3\n"
      "oracle.derive_from_eps_f = true\n"
      "sweep.oracle.eps_f = 0, 1e-8, 1e-5\n";
  const FlatConfig cfg = FlatConfig::parse_string(text);
  REQUIRE(cfg.require_string("problem.name") == "rosenbrock2");
  REQUIRE(cfg.get_double("oracle.eps_f", 0) == 1e-3);
  REQUIRE(cfg.get_double("solver.tau", 0) == 0.5);
  REQUIRE(cfg.get_seed_list("seeds") == std::vector<std::uint64_t>{1, 2, 3});
  REQUIRE(cfg.get_bool("oracle.derive_from_eps_f", false));
  REQUIRE(cfg.sweep_keys() == std::vector<std::string>{"sweep.oracle.eps_f"});
  REQUIRE(cfg.get_string_list("sweep.oracle.eps_f").size() == 3);
  REQUIRE(cfg.get_double("missing.key", 7.5) == 7.5);
  REQUIRE_THROWS_AS(cfg.require_string("missing.key"), ConfigError);
}

TEST_CASE("flat config reports parse errors with location") {
  try {
    FlatConfig::parse_string("a = 1\nbroken line\n", "test.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).find("test.cfg:2") != std::string::npos);
  }
  REQUIRE_THROWS_AS(FlatConfig::parse_string("x = 1\nx = 2\n"), ConfigError);
  const FlatConfig cfg = FlatConfig::parse_string("a = abc\n");
  REQUIRE_THROWS_AS(cfg.get_double("a", 0), ConfigError);
  REQUIRE_THROWS_AS(cfg.get_bool("a", false), ConfigError);
}
