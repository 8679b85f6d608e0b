// Experiment driver: convergence tables, preconditioner sweeps, energy and
// inf-sup diagnostics. Exit codes: 0 success, 1 solver failure, 2 bad config.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "biot/experiments.hpp"

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> methods;
  std::string step_solver = "direct";
  bool no_timing = false;
};

void add_common(CLI::App& app, biot::ExperimentConfig& c, Flags& f) {
  app.add_option("--config", f.config, "flat key = value file; command-line flags win");
  app.add_option("--method", f.methods, "taylor-hood, brezzi-pitkaranta, p1-p0 (repeatable or comma separated)")
      ->delimiter(',');
  app.add_option("--N", c.meshes, "mesh sizes")->delimiter(',');
  app.add_option("--mu", c.mu, "shear modulus list")->delimiter(',');
  app.add_option("--lambda-ratio", c.lambda_ratio, "lambda / mu list (inf for incompressible)")->delimiter(',');
  app.add_option("--kappa", c.kappa, "conductivity list")->delimiter(',');
  app.add_option("--alpha", c.alpha, "Biot-Willis constant");
  app.add_option("--s0", c.s0, "storage coefficient");
  app.add_option("--gamma2", c.gamma2, "stabilization constant");
  app.add_option("--jump-h-power", c.jump_h_power, "edge-length exponent of the P1-P0 jump term");
  app.add_option("--dt", c.dt, "time step of the static problem");
  app.add_option("--rtol", c.rtol, "MinRes relative tolerance");
  app.add_option("--maxit", c.maxit, "iteration limit");
  app.add_option("--seed", c.seed, "random seed");
  app.add_option("--out", c.out_dir, "output directory");
  app.add_option("--displacement-boundary", c.boundary.displacement.essential, "Dirichlet sides for u, e.g. left|right");
  app.add_option("--pressure-boundary", c.boundary.pressure.essential, "Dirichlet sides for p_p, e.g. all or none");
  app.add_flag("--no-timing", f.no_timing, "omit wall-clock columns (byte-reproducible output)");
  app.add_flag("--quiet", c.quiet, "no progress lines on stderr");
}

/// Fills options not given on the command line from a flat key = value file.
void apply_config_file(CLI::App& app, const std::string& path) {
  for (const CLI::ConfigItem& item : CLI::ConfigTOML().from_file(path)) {
    if (!item.parents.empty()) throw biot::ConfigError("config: sections are not supported (" + item.name + ")");
    CLI::Option* opt = app.get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") throw biot::ConfigError("config: unknown key '" + item.name + "'");
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

int finish(const std::string& name, const biot::Table& t, const biot::ExperimentConfig& c, bool failed) {
  biot::write_outputs(c.out_dir, name, t);
  biot::write_markdown(std::cout, t);
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-field Biot finite element experiments"};
  app.require_subcommand(1);
  biot::ExperimentConfig cfg;
  Flags flags;

  auto* converge = app.add_subcommand("converge", "errors and rates for the manufactured solution");
  add_common(*converge, cfg, flags);
  converge->add_option("--final-time", cfg.final_time, "final time");
  converge->add_option("--dt-factor", cfg.dt_factor, "dt = factor * h^2");
  converge->add_option("--step-rtol", cfg.step_rtol, "per-step solver tolerance");
  converge->add_option("--step-solver", flags.step_solver, "direct or minres")
      ->check(CLI::IsMember({"direct", "minres"}));
  converge->add_flag("--allow-large", cfg.allow_large, "permit N > 64");

  auto* precond = app.add_subcommand("precond", "MinRes iterations over a parameter grid");
  add_common(*precond, cfg, flags);
  precond->add_option("--rhs", cfg.rhs_count, "random right-hand sides per cell");

  auto* energy = app.add_subcommand("energy", "energy decay with zero forcing");
  add_common(*energy, cfg, flags);
  energy->add_option("--steps", cfg.steps, "time steps");
  energy->add_option("--step-rtol", cfg.step_rtol, "per-step solver tolerance");

  auto* infsup = app.add_subcommand("infsup", "discrete inf-sup constant");
  add_common(*infsup, cfg, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    cfg.subcommand = sub->get_name();
    if (!flags.config.empty()) apply_config_file(*sub, flags.config);
    cfg.timing = !flags.no_timing;
    cfg.step_solver = flags.step_solver == "minres" ? biot::StepSolver::kMinres : biot::StepSolver::kDirect;
    if (!flags.methods.empty()) {
      cfg.methods.clear();
      for (const auto& m : flags.methods) cfg.methods.push_back(biot::parse_discretization(m));
    }
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  try {
    if (cfg.subcommand == "converge") {
      return finish("converge", biot::converge_table(cfg, biot::run_converge(cfg)), cfg, false);
    }
    if (cfg.subcommand == "precond") {
      const auto cells = biot::run_precond(cfg);
      bool failed = false;
      for (const auto& c : cells) failed = failed || !c.converged;
      return finish("precond", biot::precond_table(cfg, cells), cfg, failed);
    }
    if (cfg.subcommand == "energy") {
      return finish("energy", biot::energy_table(cfg, biot::run_energy(cfg)), cfg, false);
    }
    const auto cells = biot::run_infsup(cfg);
    bool failed = false;
    for (const auto& c : cells) failed = failed || !c.result.converged;
    return finish("infsup", biot::infsup_table(cfg, cells), cfg, failed);
  } catch (const biot::SingularBlockError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 1;
  }
}
