#include "outputs.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#ifndef USBP_VERSION
#define USBP_VERSION "0.0.0"
#endif

namespace usbp::cli {

namespace {

using nlohmann::ordered_json;

// NaN has no JSON representation; the library would emit a bare null anyway,
// but being explicit keeps the intent visible in the reports.
ordered_json number_or_null(double x) {
  if (std::isnan(x)) return nullptr;
  return x;
}

void append_dead_cell_coords(std::string& out, const DeadSupport& ds,
                             const GridSpec& grid, int cell) {
  const int step = ds.cell_kill_step(cell);
  const int space = ds.cell_space(cell);
  out += step >= 0 ? std::to_string(step) : "";
  out += ',';
  out += space >= 0 ? fmt(grid.node(space)) : "";
}

}  // namespace

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
  out << body;
}

void write_json(const std::string& path, const ordered_json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

std::string potentials_csv(const GridSpec& grid, const DeadSupport& ds,
                           const Potentials& pot) {
  std::string out = "potential,cell,kill_step,x,value\n";
  for (int k = 0; k < grid.n_space; ++k) {
    out += "f," + std::to_string(k) + ",," + fmt(grid.node(k)) + ',' +
           fmt(pot.f[k]) + '\n';
  }
  for (long k = 0; k < pot.g_active.size(); ++k) {
    out += "g_active," + std::to_string(k) + ",," +
           fmt(grid.node(static_cast<int>(k))) + ',' + fmt(pot.g_active[k]) +
           '\n';
  }
  for (int c = 0; c < ds.size(); ++c) {
    out += "g_dead," + std::to_string(c) + ',';
    append_dead_cell_coords(out, ds, grid, c);
    out += ',' + fmt(pot.g_dead[c]) + '\n';
  }
  return out;
}

std::string marginals_csv(const GridSpec& grid, const DeadSupport& ds,
                          const PhiSweep& phis, const PhiHatSweep& phihats) {
  std::string out = "t,component,cell,kill_step,x,density\n";
  for (int m = 0; m <= grid.n_steps; ++m) {
    const MarginalSlice slice = marginals(phis, phihats, grid, ds, m);
    const std::string t = fmt(grid.time(m));
    for (int k = 0; k < grid.n_space; ++k) {
      out += t + ",active," + std::to_string(k) + ",," + fmt(grid.node(k)) +
             ',' + fmt(slice.active_density[k]) + '\n';
    }
    for (int c = 0; c < ds.size(); ++c) {
      out += t + ",dead," + std::to_string(c) + ',';
      append_dead_cell_coords(out, ds, grid, c);
      out += ',' + fmt(slice.dead_density[c]) + '\n';
    }
  }
  return out;
}

std::string bridge_fields_csv(const StepKernels& sk, const DeadSupport& ds,
                              const PhiSweep& phis) {
  std::string out = "t,x,drift,control,xi,kill_rate\n";
  for (int m = 0; m < sk.n_steps(); ++m) {
    const BridgeFields fields = bridge_coefficients(sk, ds, phis, m);
    const std::string t = fmt(sk.grid.time(m));
    for (int k = 0; k < sk.n_space(); ++k) {
      out += t + ',' + fmt(sk.grid.node(k)) + ',' + fmt(fields.drift[k]) +
             ',' + fmt(fields.control[k]) + ',' + fmt(fields.xi[k]) + ',' +
             fmt(fields.kill_rate[k]) + '\n';
    }
  }
  return out;
}

ordered_json diagnostics_json(const SinkhornDiagnostics& diag,
                              const ResidualReport& res, double kl,
                              const GridSpec& grid, const DeadSupport& ds,
                              const PhiSweep& phis,
                              const PhiHatSweep& phihats) {
  ordered_json sinkhorn;
  sinkhorn["iterations"] = diag.iterations;
  sinkhorn["marginal_error"] = diag.marginal_error;
  sinkhorn["converged"] = diag.converged;
  sinkhorn["error_history"] = diag.error_history;

  ordered_json residuals;
  residuals["phi_backward_identity"] = res.phi_backward_identity;
  residuals["phihat_forward_identity"] = res.phihat_forward_identity;
  residuals["dead_indicator_identity"] =
      number_or_null(res.dead_indicator_identity);
  residuals["dead_forward_residual"] =
      number_or_null(res.dead_forward_residual);
  residuals["sup_grad_log_phi"] = res.sup_grad_log_phi;
  residuals["sup_xi"] = res.sup_xi;

  const MarginalSlice first = marginals(phis, phihats, grid, ds, 0);
  const MarginalSlice last = marginals(phis, phihats, grid, ds, grid.n_steps);
  ordered_json mass;
  mass["initial"] = first.total_mass;
  mass["terminal_active"] = last.active_mass.sum();
  mass["terminal_dead"] = last.dead_mass.sum();
  mass["terminal_total"] = last.total_mass;

  ordered_json doc;
  doc["sinkhorn"] = sinkhorn;
  doc["residuals"] = residuals;
  doc["kl"] = kl;
  doc["mass"] = mass;
  return doc;
}

ordered_json simulation_json(const SimulationSummary& s) {
  ordered_json cost;
  cost["value"] = s.cost.value;
  cost["std_error"] = s.cost.std_error;

  ordered_json doc;
  doc["n_paths"] = s.n_paths;
  doc["seed"] = s.seed;
  doc["tv_initial"] = s.tv_initial;
  doc["tv_terminal_active"] = s.tv_terminal_active;
  doc["tv_terminal_dead"] = s.tv_terminal_dead;
  doc["tv_terminal"] = s.tv_terminal;
  doc["control_cost"] = cost;
  doc["kl"] = s.kl;
  doc["cost_minus_kl"] = s.cost.value - s.kl;
  doc["gap_in_std_errors"] =
      s.cost.std_error > 0.0
          ? number_or_null(std::abs(s.cost.value - s.kl) / s.cost.std_error)
          : ordered_json(nullptr);
  return doc;
}

ordered_json comparison_json(const ComparisonReport& report) {
  ordered_json solves = ordered_json::array();
  for (const auto& s : report.solves) {
    ordered_json row;
    row["scenario"] = scenario_name(s.scenario);
    row["kl"] = s.kl;
    row["iterations"] = s.iterations;
    row["marginal_error"] = s.marginal_error;
    row["converged"] = s.converged;
    solves.push_back(row);
  }
  ordered_json orderings = ordered_json::array();
  for (const auto& o : report.orderings) {
    ordered_json row;
    row["name"] = o.name;
    row["lhs"] = o.lhs;
    row["rhs"] = o.rhs;
    row["slack"] = o.slack;
    row["ok"] = o.ok;
    orderings.push_back(row);
  }
  ordered_json flatness;
  flatness["across_space"] = report.joint_flatness.across_space;
  flatness["across_time"] = report.joint_flatness.across_time;

  ordered_json doc;
  doc["solves"] = solves;
  doc["orderings"] = orderings;
  doc["joint_flatness"] = flatness;
  doc["all_converged"] = report.all_converged;
  doc["all_ok"] = report.all_ok;
  return doc;
}

ordered_json manifest_json(const std::string& command,
                           const ordered_json& config_echo,
                           const std::vector<std::string>& outputs,
                           std::optional<std::uint64_t> seed) {
  ordered_json doc;
  doc["tool"] = "usbp";
  doc["version"] = USBP_VERSION;
  doc["command"] = command;
  if (seed) doc["seed"] = *seed;
  doc["config"] = config_echo;
  doc["outputs"] = outputs;
  return doc;
}

}  // namespace usbp::cli
