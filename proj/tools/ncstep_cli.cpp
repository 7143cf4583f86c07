// Command-line front end for the experiment harness.
//
// Subcommands:
//   run      execute method x seeds for a config, write per-run artifacts
//   sweep    cross-product over sweep.* axes, write aggregate reports
//   compare  run several methods on shared seeds, align metrics on fevals
//   plot     render SVG panels from an artifact directory
//   audit    per-iteration lemma audit over an artifact directory
//
// Exit codes: 0 success, 2 config error, 3 runtime/divergence, 4 I/O error.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ncstep/harness.hpp"
#include "ncstep/plot.hpp"
#include "ncstep/theory.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_override;
  std::string seeds_override;
  std::string method_override;
  int jobs = 1;
};

ncstep::harness::ExperimentConfig load(const CommonOpts& opts) {
  auto exp = ncstep::harness::load_experiment_file(opts.config_path);
  if (!opts.out_override.empty()) {
    exp.output_dir = opts.out_override;
    exp.raw.set("output_dir", opts.out_override);
  }
  if (!opts.seeds_override.empty()) {
    exp.raw.set("seeds", opts.seeds_override);
    exp.seeds = exp.raw.get_seed_list("seeds");
  }
  if (!opts.method_override.empty()) {
    exp.raw.set("method", opts.method_override);
    exp.methods = {ncstep::harness::parse_method(opts.method_override)};
  }
  return exp;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config = true) {
  if (needs_config)
    cmd->add_option("--config", opts.config_path, "experiment config file")
        ->required();
  cmd->add_option("--out", opts.out_override, "override output_dir");
  cmd->add_option("--seeds", opts.seeds_override, "override seed list (comma separated)");
  cmd->add_option("--method", opts.method_override, "override method");
  cmd->add_option("--jobs", opts.jobs, "parallel runs")->check(CLI::PositiveNumber);
}

void print_validation(const ncstep::harness::ExperimentConfig& exp) {
  using namespace ncstep;
  const harness::RunPlan plan =
      harness::resolve_run(exp.raw, exp.methods.front(), exp.seeds.front());
  const auto report = theory::validate_params(plan.solver, plan.oracle);
  std::cout << report.to_string();
  if (!report.all_pass())
    std::cout << "note: admissibility warnings above do not stop the run\n";
  const auto tc =
      theory::compute_constants(plan.problem, plan.oracle, plan.solver, exp.tails);
  std::cout << "constants: alpha_bar=" << tc.alpha_bar << " beta_bar=" << tc.beta_bar
            << " c_alpha_beta=" << tc.c_alpha_beta << " (h-form "
            << tc.c_alpha_beta_hform << ") c_tau=" << tc.c_tau
            << "\nneighborhood floors: epsbar_g>=" << tc.neighborhood_floor_g
            << " epsbar_H>=" << tc.neighborhood_floor_H
            << " epsbar_lambda>=" << tc.neighborhood_floor_lambda << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"step-search optimization under probabilistic oracles"};
  app.require_subcommand(1);

  CommonOpts run_opts, sweep_opts, compare_opts, audit_opts, plot_opts;
  std::string plot_out = "plots";
  std::string audit_dir, plot_dir;

  CLI::App* cmd_run = app.add_subcommand("run", "execute runs for a config");
  add_common(cmd_run, run_opts);
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "cross-product sweep");
  add_common(cmd_sweep, sweep_opts);
  CLI::App* cmd_compare = app.add_subcommand("compare", "compare methods");
  add_common(cmd_compare, compare_opts);
  CLI::App* cmd_plot = app.add_subcommand("plot", "render SVG panels");
  cmd_plot->add_option("--artifacts", plot_dir, "artifact directory")->required();
  cmd_plot->add_option("--out", plot_out, "plot output directory");
  CLI::App* cmd_audit = app.add_subcommand("audit", "lemma audit over artifacts");
  cmd_audit->add_option("--artifacts", audit_dir, "artifact directory")->required();

  CLI11_PARSE(app, argc, argv);

  using namespace ncstep;
  try {
    if (cmd_run->parsed()) {
      const auto exp = load(run_opts);
      print_validation(exp);
      const auto completed = harness::cmd_run(exp, run_opts.jobs);
      bool diverged = false;
      for (const auto& c : completed) {
        std::cout << c.plan.label << ": status=" << c.summary.status
                  << " iters=" << c.summary.iterations
                  << " fevals=" << c.summary.fevals
                  << " final_f=" << c.summary.final_f_true
                  << " best_grad=" << c.summary.best_grad_norm << '\n';
        diverged |= c.result.status == RunStatus::Diverged;
      }
      std::cout << "wrote " << completed.size() << " runs to " << exp.output_dir
                << '\n';
      if (diverged) {
        std::cerr << "error: at least one run diverged\n";
        return 3;
      }
    } else if (cmd_sweep->parsed()) {
      const auto exp = load(sweep_opts);
      const auto report = harness::cmd_sweep(exp, sweep_opts.jobs);
      for (const auto& cell : report.cells)
        std::cout << cell.cell.label() << ": median_best_f=" << cell.median_best_f
                  << " median_best_grad=" << cell.median_best_grad
                  << " median_terminal_f=" << cell.median_terminal_f << '\n';
      std::cout << "aggregates in " << exp.output_dir << '\n';
    } else if (cmd_compare->parsed()) {
      const auto exp = load(compare_opts);
      const auto report = harness::cmd_compare(exp, compare_opts.jobs);
      for (const auto& m : report.methods)
        std::cout << harness::method_name(m.method)
                  << ": median_final_f=" << m.median_final_f
                  << " median_best_f=" << m.median_best_f_total << '\n';
      std::cout << "curves in " << exp.output_dir << '\n';
    } else if (cmd_plot->parsed()) {
      const auto report = plot::cmd_plot(plot_dir, plot_out);
      for (const auto& n : report.notices) std::cout << "notice: " << n << '\n';
      std::cout << "wrote " << report.written.size() << " panels to " << plot_out
                << '\n';
    } else if (cmd_audit->parsed()) {
      const auto report = harness::cmd_audit(audit_dir);
      const auto& c = report.counts;
      std::cout << "runs audited: " << report.runs_audited << '\n'
                << "iterations audited: " << c.iterations_audited << '\n'
                << "(i)   small-step descent failures: "
                << c.small_step_descent_failures << '\n'
                << "(ii)  small-step curvature failures: " << c.small_step_nc_failures
                << '\n'
                << "(iii) descent decrease violations: "
                << c.descent_decrease_violations << " (c_d-scaled form: "
                << c.descent_decrease_violations_cd << ")\n"
                << "(iv)  curvature decrease violations: " << c.nc_decrease_violations
                << '\n'
                << "(v)   both-skipped-before-stop events: "
                << c.both_skipped_before_stop << '\n'
                << "half-step safety violations: " << c.half_step_safety_violations
                << '\n';
      if (c.if_total)
        std::cout << "freq i_f: " << static_cast<double>(c.if_true) / c.if_total
                  << " over " << c.if_total << '\n';
      if (c.ig_total)
        std::cout << "freq i_g: " << static_cast<double>(c.ig_true) / c.ig_total
                  << " over " << c.ig_total << '\n';
      if (c.ih_total)
        std::cout << "freq i_H: " << static_cast<double>(c.ih_true) / c.ih_total
                  << " over " << c.ih_total << '\n';
      if (c.total_violations() != 0) {
        std::cout << "audit found violations\n";
        return 3;
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const harness::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
