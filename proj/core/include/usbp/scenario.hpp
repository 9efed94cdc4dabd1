#pragma once

// What is remembered about a killed particle, per scenario:
//
//   Joint     -- kill location and kill time   (N x M dead cells)
//   TimeOnly  -- kill time only                (M cells)
//   SpaceOnly -- kill location only            (N cells)
//   MassOnly  -- only the fact of death        (1 cell)
//   Star      -- Joint bookkeeping, but the terminal constraint is imposed on
//                the dead part only; the surviving marginal is free.
//
// A dead cell indexes (pre-diffusion node k, kill step m) through psi_index;
// the flat layout is time-major: cell = m * n_space + k for Joint/Star.
// Cell reference weights (measure of one cell): Joint/Star dx*dt,
// TimeOnly dt, SpaceOnly dx, MassOnly 1.  Densities over the dead support are
// always relative to these weights, so mass = density * cell_weight.

#include <Eigen/Core>
#include <string>
#include <vector>

#include "usbp/grid.hpp"

namespace usbp {

enum class ScenarioKind { Joint, TimeOnly, SpaceOnly, MassOnly, Star };

std::string scenario_name(ScenarioKind kind);
// Accepts the names emitted by scenario_name ("joint", "time_only",
// "space_only", "mass_only", "star"); throws std::invalid_argument otherwise.
ScenarioKind scenario_from_name(const std::string& name);

class DeadSupport {
 public:
  DeadSupport(ScenarioKind kind, const GridSpec& grid);

  ScenarioKind kind() const { return kind_; }
  int size() const;
  double cell_weight() const;

  // Dead cell hit by a particle killed during step `kill_step` while sitting
  // at node `space_index`.
  int psi_index(int kill_step, int space_index) const;

  // Inverse layout lookups for reporting; -1 where the scenario drops the
  // coordinate.
  int cell_kill_step(int cell) const;
  int cell_space(int cell) const;

  int n_space() const { return n_space_; }
  int n_steps() const { return n_steps_; }

 private:
  ScenarioKind kind_;
  int n_space_;
  int n_steps_;
  double dx_;
  double dt_;
};

// Endpoint data of one bridge problem.  rho0 and rhoT_active are densities
// over the spatial nodes (with respect to the trapezoid weights); rhoT_dead
// is a density over the dead support.  For Star, rhoT_active has size 0: the
// surviving terminal marginal is unconstrained.
struct TargetPair {
  ScenarioKind scenario = ScenarioKind::Joint;
  Eigen::VectorXd rho0;
  Eigen::VectorXd rhoT_active;
  Eigen::VectorXd rhoT_dead;
};

// Density -> per-cell mass conversions.
Eigen::VectorXd rho0_mass(const TargetPair& t, const GridSpec& grid);
Eigen::VectorXd terminal_active_mass(const TargetPair& t, const GridSpec& grid);
Eigen::VectorXd terminal_dead_mass(const TargetPair& t, const DeadSupport& ds);

// Law of the reference chain needed for absolute-continuity checks: initial
// node masses and the terminal (active, dead) cell masses reached from them.
struct ReferenceLaw {
  Eigen::VectorXd mu0_mass;
  Eigen::VectorXd terminal_active_mass;
  Eigen::VectorXd terminal_dead_mass;
};

// Marginalizes a Joint target onto a coarser scenario (TimeOnly sums over
// space, SpaceOnly over kill steps, MassOnly over both; masses are preserved
// exactly).  Requires src.scenario == Joint and dst one of TimeOnly,
// SpaceOnly, MassOnly, Joint.
TargetPair project_target(const TargetPair& src, const GridSpec& grid,
                          ScenarioKind dst);

struct TargetViolation {
  std::string invariant;  // "nonnegativity" | "initial mass" | "mass balance"
                          // | "absolute continuity"
  int cell = -1;          // node or flat dead-cell index; -1 = global check
  std::string detail;
};

// Checks nonnegativity, unit initial mass, active+dead mass balance
// (dead mass <= 1 for Star) and, when `ref` is given, absolute continuity of
// the targets with respect to the reference law.  Empty result = valid.
// Throws std::invalid_argument on shape mismatches.
std::vector<TargetViolation> validate_targets(const TargetPair& t,
                                              const GridSpec& grid,
                                              const DeadSupport& ds,
                                              const ReferenceLaw* ref = nullptr);

}  // namespace usbp
