#pragma once

// Declarative experiment description.  One JSON file drives a whole run:
//
// {
//   "grid":         {"x_min": -4, "x_max": 4, "n_space": 64,
//                    "t_horizon": 1.0, "n_steps": 32},
//   "coefficients": {"b": "0", "sigma": "1", "v": "0.5"},
//   "scenario":     "joint",              // time_only|space_only|mass_only|star
//   "mu0":          {"preset": "uniform"},
//     // or {"preset": "gaussian", "mean": 0, "stddev": 1}
//     //    {"preset": "point", "x": 0.25}
//     //    {"preset": "csv", "path": "mu0.csv"}       one density per node
//   "targets":      {"preset": "reference_kill_law"},
//     // or {"preset": "gaussian", "dead_mass": 0.3,
//     //     "components": [{"weight": 1, "mean": 0.5, "stddev": 0.4}, ...]}
//     //    {"preset": "csv", "rhoT_active": "a.csv", "rhoT_dead": "d.csv"}
//     // Any csv preset also accepts the data inline ("values" for mu0,
//     // "rhoT_active_values"/"rhoT_dead_values" for targets); the manifest
//     // echo uses the inline form so it stays reproducible on its own.
//   "solver":       {"tol": 1e-10, "max_iter": 10000},      // optional
//   "simulate":     {"n_paths": 100000, "seed": 7},         // seed optional
//   "compare":      {"enabled": false, "tol": 0.0},         // optional
//   "output_dir":   "out"                                   // optional
// }
//
// The initial constraint is the reference initial law itself (rho0 == mu0);
// the experiment's freedom is in the terminal pair.  Structural problems --
// unparsable JSON, unknown names, missing files, bad shapes -- throw
// ConfigError here.  Mathematical assumption failures are left to the
// pipeline's validation stage.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "usbp/grid.hpp"
#include "usbp/scenario.hpp"

namespace usbp::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  GridSpec grid;
  CoefficientSet coeffs;
  ScenarioKind scenario = ScenarioKind::Joint;

  Eigen::VectorXd mu0_mass;  // node masses, total 1

  // Terminal-target recipe; resolved against the reference terminal law once
  // the kernels exist (resolve_targets below).
  struct TargetSpec {
    std::string preset;  // "reference_kill_law" | "gaussian" | "csv"
    double dead_mass = 0.0;
    struct Component {
      double weight = 1.0;
      double mean = 0.0;
      double stddev = 1.0;
    };
    std::vector<Component> components;
    Eigen::VectorXd csv_active;  // densities, when preset == "csv"
    Eigen::VectorXd csv_dead;
  } target_spec;

  double solver_tol = 1e-10;
  int solver_max_iter = 10000;

  int n_paths = 10000;
  std::optional<std::uint64_t> seed;

  bool compare_enabled = false;
  double compare_tol = 0.0;  // <= 0: 10 x solver_tol

  std::string output_dir = "out";

  // Normalized echo of the effective configuration (defaults filled in);
  // written to the manifest so a run can be reproduced from it alone.
  nlohmann::ordered_json echo;
};

// Parses and structurally validates a config file.  Reads any referenced
// CSV files (one value per line, '#' comments) and checks their lengths
// against the grid/scenario.  Throws ConfigError with the offending key in
// the message.
ExperimentConfig load_config(const std::string& path);

// Builds the terminal target pair from the recipe.  Gaussian-preset dead
// parts follow the reference kill law scaled to the requested mass, so the
// result is mass-balanced and absolutely continuous by construction.
TargetPair resolve_targets(const ExperimentConfig& cfg,
                           const ReferenceLaw& ref);

}  // namespace usbp::cli
