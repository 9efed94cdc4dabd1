#pragma once

// Report files written into the output directory.  Every writer is
// deterministic -- fixed column order, fixed key order, no timestamps, all
// doubles printed with 17 significant digits -- so identical runs produce
// byte-identical files.
//
// CSV schemas (headers included in each file):
//   potentials.csv     potential,cell,kill_step,x,value
//                      one row per f / g_active node and per g_dead cell;
//                      kill_step / x are empty where the scenario drops them
//   marginals.csv      t,component,cell,kill_step,x,density
//                      component = active|dead, every time level 0..M
//   bridge_fields.csv  t,x,drift,control,xi,kill_rate
//                      time levels 0..M-1, every node
//
// JSON reports: manifest.json (tool version, command, effective config echo,
// list of files written, seed when simulating), diagnostics.json (solver
// iterations + error history, consistency residuals, relative entropy, mass
// accounting), simulation.json (TV distances, control cost vs relative
// entropy), comparison.json (four-scenario solves, ordering verdicts,
// flatness of the joint dead potential).

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "usbp/compare.hpp"
#include "usbp/montecarlo.hpp"
#include "usbp/scenario.hpp"
#include "usbp/sinkhorn.hpp"
#include "usbp/sweep.hpp"

namespace usbp::cli {

// "%.17g" -- shortest fixed-precision form that round-trips a double.
std::string fmt(double x);

void write_text(const std::string& path, const std::string& body);
void write_json(const std::string& path, const nlohmann::ordered_json& doc);

std::string potentials_csv(const GridSpec& grid, const DeadSupport& ds,
                           const Potentials& pot);

std::string marginals_csv(const GridSpec& grid, const DeadSupport& ds,
                          const PhiSweep& phis, const PhiHatSweep& phihats);

std::string bridge_fields_csv(const StepKernels& sk, const DeadSupport& ds,
                              const PhiSweep& phis);

nlohmann::ordered_json diagnostics_json(const SinkhornDiagnostics& diag,
                                        const ResidualReport& res, double kl,
                                        const GridSpec& grid,
                                        const DeadSupport& ds,
                                        const PhiSweep& phis,
                                        const PhiHatSweep& phihats);

struct SimulationSummary {
  int n_paths = 0;
  std::uint64_t seed = 0;
  double tv_initial = 0.0;
  double tv_terminal_active = 0.0;
  double tv_terminal_dead = 0.0;
  double tv_terminal = 0.0;  // joint TV over (active, dead) cells
  CostEstimate cost;
  double kl = 0.0;
};

nlohmann::ordered_json simulation_json(const SimulationSummary& s);

nlohmann::ordered_json comparison_json(const ComparisonReport& report);

nlohmann::ordered_json manifest_json(const std::string& command,
                                     const nlohmann::ordered_json& config_echo,
                                     const std::vector<std::string>& outputs,
                                     std::optional<std::uint64_t> seed);

}  // namespace usbp::cli
