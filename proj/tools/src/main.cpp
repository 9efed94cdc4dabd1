// usbp -- solve, simulate, compare and validate unbalanced bridge problems
// for killed 1-D diffusions, driven by a single JSON experiment config.
//
// Exit codes: 0 success, 1 configuration error (unreadable/ill-formed config,
// unknown names, missing files), 2 validation failure (coefficient or target
// assumptions violated, orderings broken), 3 solver non-convergence.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "outputs.hpp"
#include "usbp/compare.hpp"
#include "usbp/kernel.hpp"
#include "usbp/montecarlo.hpp"
#include "usbp/sinkhorn.hpp"
#include "usbp/sweep.hpp"

namespace {

using namespace usbp;
using namespace usbp::cli;

constexpr int kSuccess = 0;
constexpr int kConfigError = 1;
constexpr int kValidationFailure = 2;
constexpr int kNoConvergence = 3;

// Everything downstream of a structurally valid config: kernels, dead
// support, reference law and resolved targets.  Construction throws
// std::invalid_argument on coefficient/grid assumption failures.
struct Pipeline {
  ExperimentConfig cfg;
  StepKernels sk;
  DeadSupport ds;
  ReferenceLaw ref;
  TargetPair targets;

  explicit Pipeline(ExperimentConfig c)
      : cfg(std::move(c)),
        sk(build_step_kernels(cfg.coeffs, cfg.grid)),
        ds(cfg.scenario, cfg.grid),
        ref(reference_terminal_law(sk, ds, cfg.mu0_mass)),
        targets(resolve_targets(cfg, ref)) {}

  SinkhornOptions solver_options() const {
    SinkhornOptions opts;
    opts.tol = cfg.solver_tol;
    opts.max_iter = cfg.solver_max_iter;
    return opts;
  }
};

int report_target_violations(const std::vector<TargetViolation>& violations) {
  for (const auto& v : violations) {
    std::cerr << "validation: " << v.invariant;
    if (v.cell >= 0) std::cerr << " (cell " << v.cell << ")";
    std::cerr << ": " << v.detail << "\n";
  }
  return kValidationFailure;
}

std::uint64_t draw_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Solve artifacts shared by the solve/simulate commands.
struct SolveOutput {
  SinkhornResult result;
  PhiSweep phis;
  PhiHatSweep phihats;
  ResidualReport res;
  double kl = 0.0;
};

SolveOutput run_solve(const Pipeline& p) {
  SolveOutput out;
  out.result = sinkhorn_solve(p.sk, p.ds, p.cfg.mu0_mass, p.targets,
                              p.solver_options());
  const Potentials& pot = out.result.potentials;
  out.phis = phi_sweep(p.sk, p.ds, pot.g_active, pot.g_dead);
  out.phihats = phihat_sweep(p.sk, p.ds, pot.f, p.cfg.mu0_mass);
  out.res = residuals(p.sk, p.ds, out.phis, out.phihats, pot.f,
                      p.cfg.mu0_mass);
  out.kl = kl_bridge(pot, p.targets, p.cfg.grid, p.ds);
  return out;
}

void write_solve_reports(const Pipeline& p, const SolveOutput& s,
                         const std::filesystem::path& dir,
                         std::vector<std::string>& outputs) {
  write_text(dir / "potentials.csv",
             potentials_csv(p.cfg.grid, p.ds, s.result.potentials));
  outputs.push_back("potentials.csv");
  write_text(dir / "marginals.csv",
             marginals_csv(p.cfg.grid, p.ds, s.phis, s.phihats));
  outputs.push_back("marginals.csv");
  write_text(dir / "bridge_fields.csv",
             bridge_fields_csv(p.sk, p.ds, s.phis));
  outputs.push_back("bridge_fields.csv");
  write_json(dir / "diagnostics.json",
             diagnostics_json(s.result.diagnostics, s.res, s.kl, p.cfg.grid,
                              p.ds, s.phis, s.phihats));
  outputs.push_back("diagnostics.json");
}

void write_comparison_report(const ComparisonReport& rep,
                             const std::filesystem::path& dir,
                             std::vector<std::string>& outputs) {
  write_json(dir / "comparison.json", comparison_json(rep));
  outputs.push_back("comparison.json");
}

int finish_solve(const Pipeline& p, const SolveOutput& s,
                 const std::string& command) {
  const SinkhornDiagnostics& d = s.result.diagnostics;
  std::cout << command << ": " << (d.converged ? "converged" : "stopped")
            << " after " << d.iterations << " iterations, marginal error "
            << fmt(d.marginal_error) << ", relative entropy " << fmt(s.kl)
            << "\n";
  if (!d.converged) {
    std::cerr << "error: no convergence within " << p.cfg.solver_max_iter
              << " iterations (marginal error " << fmt(d.marginal_error)
              << ", tol " << fmt(p.cfg.solver_tol) << ")\n";
    return kNoConvergence;
  }
  return kSuccess;
}

int cmd_validate(const Pipeline& p) {
  const auto violations = validate_targets(p.targets, p.cfg.grid, p.ds,
                                           &p.ref);
  if (!violations.empty()) return report_target_violations(violations);
  const GridSpec& g = p.cfg.grid;
  std::cout << "grid: " << g.n_space << " nodes on [" << fmt(g.x_min) << ", "
            << fmt(g.x_max) << "], " << g.n_steps << " steps to t = "
            << fmt(g.t_horizon) << "\n"
            << "scenario: " << scenario_name(p.cfg.scenario) << " ("
            << p.ds.size() << " dead cells)\n"
            << "targets: active mass "
            << fmt(terminal_active_mass(p.targets, g).sum())
            << ", dead mass "
            << fmt(terminal_dead_mass(p.targets, p.ds).sum())
            << " (reference dead mass "
            << fmt(p.ref.terminal_dead_mass.sum()) << ")\n"
            << "configuration valid\n";
  return kSuccess;
}

int cmd_solve(Pipeline& p, const std::string& command,
              const std::filesystem::path& dir) {
  const auto violations = validate_targets(p.targets, p.cfg.grid, p.ds,
                                           &p.ref);
  if (!violations.empty()) return report_target_violations(violations);

  const SolveOutput s = run_solve(p);
  std::vector<std::string> outputs;
  write_solve_reports(p, s, dir, outputs);

  bool comparison_ok = true;
  if (p.cfg.compare_enabled) {
    const ComparisonReport rep =
        compare_scenarios(p.sk, p.cfg.mu0_mass, p.targets, p.solver_options(),
                          p.cfg.compare_tol);
    write_comparison_report(rep, dir, outputs);
    comparison_ok = rep.all_converged && rep.all_ok;
  }

  write_json(dir / "manifest.json",
             manifest_json(command, p.cfg.echo, outputs, std::nullopt));

  const int code = finish_solve(p, s, command);
  if (code != kSuccess) return code;
  if (!comparison_ok) {
    std::cerr << "error: cross-scenario comparison failed (see "
              << (dir / "comparison.json").string() << ")\n";
    return kValidationFailure;
  }
  std::cout << "reports written to " << dir.string() << "\n";
  return kSuccess;
}

int cmd_simulate(Pipeline& p, const std::filesystem::path& dir) {
  const auto violations = validate_targets(p.targets, p.cfg.grid, p.ds,
                                           &p.ref);
  if (!violations.empty()) return report_target_violations(violations);

  const SolveOutput s = run_solve(p);
  std::vector<std::string> outputs;
  write_solve_reports(p, s, dir, outputs);

  if (!s.result.diagnostics.converged) {
    // The bridge fields would be meaningless; record the solve and stop.
    write_json(dir / "manifest.json",
               manifest_json("simulate", p.cfg.echo, outputs, std::nullopt));
    return finish_solve(p, s, "simulate");
  }

  const std::uint64_t seed = p.cfg.seed ? *p.cfg.seed : draw_seed();
  p.cfg.echo["simulate"]["seed"] = seed;

  SimConfig sim_cfg;
  sim_cfg.n_paths = p.cfg.n_paths;
  sim_cfg.seed = seed;
  const SdeFields fields = bridge_sde_fields(p.sk, p.ds, s.phis);
  const Eigen::VectorXd rho0m = rho0_mass(p.targets, p.cfg.grid);
  const PathEnsemble ens = simulate(p.cfg.grid, fields, rho0m, sim_cfg);

  const int n = p.sk.n_space();
  const int m_steps = p.sk.n_steps();
  Eigen::MatrixXd control(m_steps, n), xi(m_steps, n);
  for (int m = 0; m < m_steps; ++m) {
    const BridgeFields bf = bridge_coefficients(p.sk, p.ds, s.phis, m);
    control.row(m) = bf.control.transpose();
    xi.row(m) = bf.xi.transpose();
  }

  SimulationSummary sum;
  sum.n_paths = p.cfg.n_paths;
  sum.seed = seed;
  const MarginalSlice terminal =
      marginals(s.phis, s.phihats, p.cfg.grid, p.ds, m_steps);
  sum.tv_initial = tv_distance(empirical_initial(ens), rho0m);
  const TerminalHistogram hist = empirical_terminal(ens, p.ds);
  sum.tv_terminal_active = tv_distance(hist.active_mass, terminal.active_mass);
  sum.tv_terminal_dead = tv_distance(hist.dead_mass, terminal.dead_mass);
  sum.tv_terminal = sum.tv_terminal_active + sum.tv_terminal_dead;
  sum.cost = control_cost(ens, control, xi, p.sk.v_field.topRows(m_steps));
  sum.kl = s.kl;

  write_json(dir / "simulation.json", simulation_json(sum));
  outputs.push_back("simulation.json");
  write_json(dir / "manifest.json",
             manifest_json("simulate", p.cfg.echo, outputs, seed));

  finish_solve(p, s, "simulate");  // converged by construction here
  std::cout << "simulated " << sum.n_paths << " paths (seed " << seed
            << "): TV initial " << fmt(sum.tv_initial) << ", terminal "
            << fmt(sum.tv_terminal) << "; control cost " << fmt(sum.cost.value)
            << " +/- " << fmt(sum.cost.std_error) << " vs relative entropy "
            << fmt(sum.kl) << "\n"
            << "reports written to " << dir.string() << "\n";
  return kSuccess;
}

int cmd_compare(Pipeline& p, const std::filesystem::path& dir) {
  if (p.cfg.scenario != ScenarioKind::Joint) {
    std::cerr << "error: compare needs scenario \"joint\", got \""
              << scenario_name(p.cfg.scenario) << "\"\n";
    return kConfigError;
  }
  const auto violations = validate_targets(p.targets, p.cfg.grid, p.ds,
                                           &p.ref);
  if (!violations.empty()) return report_target_violations(violations);

  const ComparisonReport rep =
      compare_scenarios(p.sk, p.cfg.mu0_mass, p.targets, p.solver_options(),
                        p.cfg.compare_tol);
  std::vector<std::string> outputs;
  write_comparison_report(rep, dir, outputs);
  write_json(dir / "manifest.json",
             manifest_json("compare", p.cfg.echo, outputs, std::nullopt));

  for (const auto& o : rep.orderings) {
    std::cout << o.name << ": " << fmt(o.lhs) << " vs " << fmt(o.rhs)
              << " (slack " << fmt(o.slack) << ", "
              << (o.ok ? "ok" : "VIOLATED") << ")\n";
  }
  std::cout << "reports written to " << dir.string() << "\n";
  if (!rep.all_converged) {
    std::cerr << "error: not every scenario solve converged\n";
    return kNoConvergence;
  }
  if (!rep.all_ok) {
    std::cerr << "error: information ordering violated\n";
    return kValidationFailure;
  }
  return kSuccess;
}

int run_command(const std::string& command, const std::string& config_path,
                const std::string& output_dir_override) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  if (!output_dir_override.empty()) {
    cfg.output_dir = output_dir_override;
    cfg.echo["output_dir"] = output_dir_override;
  }

  try {
    if (command == "validate") {
      // Report every coefficient violation, not only the first one the
      // kernel builder would throw.
      const auto bad = validate_coefficients(cfg.coeffs, cfg.grid);
      if (!bad.empty()) {
        for (const auto& msg : bad) std::cerr << "validation: " << msg << "\n";
        return kValidationFailure;
      }
      Pipeline p(std::move(cfg));
      return cmd_validate(p);
    }

    Pipeline p(std::move(cfg));
    const std::filesystem::path dir = p.cfg.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      std::cerr << "error: output_dir: cannot create \"" << dir.string()
                << "\": " << ec.message() << "\n";
      return kConfigError;
    }
    if (command == "solve") return cmd_solve(p, "solve", dir);
    if (command == "simulate") return cmd_simulate(p, dir);
    return cmd_compare(p, dir);
  } catch (const AbsoluteContinuityError& e) {
    std::cerr << "validation: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::domain_error& e) {
    std::cerr << "validation: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unbalanced bridge problems for killed 1-D diffusions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  auto add = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("config", config_path, "experiment configuration (JSON)")
        ->required();
    sub->add_option("--output-dir", output_dir,
                    "override the configured output directory")
        ->envname("USBP_OUTPUT_DIR");
    return sub;
  };
  add("solve", "solve the bridge problem and write its reports");
  add("simulate", "solve, then run Monte Carlo paths of the bridge SDE");
  add("compare", "solve the joint and marginal scenarios and compare");
  add("validate", "check the configuration and model assumptions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  return run_command(command, config_path, output_dir);
}
