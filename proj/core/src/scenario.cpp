#include "usbp/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace usbp {

namespace {
constexpr double kMassTol = 1e-10;
}

std::string scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Joint: return "joint";
    case ScenarioKind::TimeOnly: return "time_only";
    case ScenarioKind::SpaceOnly: return "space_only";
    case ScenarioKind::MassOnly: return "mass_only";
    case ScenarioKind::Star: return "star";
  }
  return "unknown";
}

ScenarioKind scenario_from_name(const std::string& name) {
  if (name == "joint") return ScenarioKind::Joint;
  if (name == "time_only") return ScenarioKind::TimeOnly;
  if (name == "space_only") return ScenarioKind::SpaceOnly;
  if (name == "mass_only") return ScenarioKind::MassOnly;
  if (name == "star") return ScenarioKind::Star;
  throw std::invalid_argument(
      "unknown scenario '" + name +
      "'; expected joint, time_only, space_only, mass_only or star");
}

DeadSupport::DeadSupport(ScenarioKind kind, const GridSpec& grid)
    : kind_(kind),
      n_space_(grid.n_space),
      n_steps_(grid.n_steps),
      dx_(grid.dx()),
      dt_(grid.dt()) {
  grid.validate();
}

int DeadSupport::size() const {
  switch (kind_) {
    case ScenarioKind::Joint:
    case ScenarioKind::Star: return n_space_ * n_steps_;
    case ScenarioKind::TimeOnly: return n_steps_;
    case ScenarioKind::SpaceOnly: return n_space_;
    case ScenarioKind::MassOnly: return 1;
  }
  return 0;
}

double DeadSupport::cell_weight() const {
  switch (kind_) {
    case ScenarioKind::Joint:
    case ScenarioKind::Star: return dx_ * dt_;
    case ScenarioKind::TimeOnly: return dt_;
    case ScenarioKind::SpaceOnly: return dx_;
    case ScenarioKind::MassOnly: return 1.0;
  }
  return 1.0;
}

int DeadSupport::psi_index(int kill_step, int space_index) const {
  if (kill_step < 0 || kill_step >= n_steps_ || space_index < 0 ||
      space_index >= n_space_)
    throw std::out_of_range("psi_index: kill step or node out of range");
  switch (kind_) {
    case ScenarioKind::Joint:
    case ScenarioKind::Star: return kill_step * n_space_ + space_index;
    case ScenarioKind::TimeOnly: return kill_step;
    case ScenarioKind::SpaceOnly: return space_index;
    case ScenarioKind::MassOnly: return 0;
  }
  return 0;
}

int DeadSupport::cell_kill_step(int cell) const {
  switch (kind_) {
    case ScenarioKind::Joint:
    case ScenarioKind::Star: return cell / n_space_;
    case ScenarioKind::TimeOnly: return cell;
    case ScenarioKind::SpaceOnly:
    case ScenarioKind::MassOnly: return -1;
  }
  return -1;
}

int DeadSupport::cell_space(int cell) const {
  switch (kind_) {
    case ScenarioKind::Joint:
    case ScenarioKind::Star: return cell % n_space_;
    case ScenarioKind::SpaceOnly: return cell;
    case ScenarioKind::TimeOnly:
    case ScenarioKind::MassOnly: return -1;
  }
  return -1;
}

Eigen::VectorXd rho0_mass(const TargetPair& t, const GridSpec& grid) {
  return t.rho0.cwiseProduct(grid.quad_weights());
}

Eigen::VectorXd terminal_active_mass(const TargetPair& t,
                                     const GridSpec& grid) {
  if (t.rhoT_active.size() == 0) return Eigen::VectorXd();  // Star
  return t.rhoT_active.cwiseProduct(grid.quad_weights());
}

Eigen::VectorXd terminal_dead_mass(const TargetPair& t,
                                   const DeadSupport& ds) {
  return t.rhoT_dead * ds.cell_weight();
}

TargetPair project_target(const TargetPair& src, const GridSpec& grid,
                          ScenarioKind dst) {
  if (src.scenario != ScenarioKind::Joint)
    throw std::invalid_argument("project_target: source must be a Joint target");
  if (dst == ScenarioKind::Star)
    throw std::invalid_argument("project_target: cannot project onto star");

  TargetPair out;
  out.scenario = dst;
  out.rho0 = src.rho0;
  out.rhoT_active = src.rhoT_active;
  if (dst == ScenarioKind::Joint) {
    out.rhoT_dead = src.rhoT_dead;
    return out;
  }

  const DeadSupport src_ds(ScenarioKind::Joint, grid);
  const DeadSupport dst_ds(dst, grid);
  const Eigen::VectorXd src_mass = terminal_dead_mass(src, src_ds);
  Eigen::VectorXd dst_mass = Eigen::VectorXd::Zero(dst_ds.size());
  for (int m = 0; m < grid.n_steps; ++m)
    for (int k = 0; k < grid.n_space; ++k)
      dst_mass[dst_ds.psi_index(m, k)] += src_mass[src_ds.psi_index(m, k)];
  out.rhoT_dead = dst_mass / dst_ds.cell_weight();
  return out;
}

std::vector<TargetViolation> validate_targets(const TargetPair& t,
                                              const GridSpec& grid,
                                              const DeadSupport& ds,
                                              const ReferenceLaw* ref) {
  grid.validate();
  const bool star = t.scenario == ScenarioKind::Star;
  if (ds.kind() != t.scenario)
    throw std::invalid_argument("validate_targets: support/target scenario mismatch");
  if (t.rho0.size() != grid.n_space)
    throw std::invalid_argument("validate_targets: rho0 has wrong length");
  if (!star && t.rhoT_active.size() != grid.n_space)
    throw std::invalid_argument("validate_targets: rhoT_active has wrong length");
  if (star && t.rhoT_active.size() != 0)
    throw std::invalid_argument(
        "validate_targets: star targets must leave rhoT_active empty");
  if (t.rhoT_dead.size() != ds.size())
    throw std::invalid_argument("validate_targets: rhoT_dead has wrong length");

  std::vector<TargetViolation> out;
  auto flag = [&](const char* invariant, int cell, std::string detail) {
    out.push_back({invariant, cell, std::move(detail)});
  };

  for (int k = 0; k < t.rho0.size(); ++k)
    if (t.rho0[k] < 0.0)
      flag("nonnegativity", k,
           "rho0 is negative at node " + std::to_string(k));
  for (int k = 0; k < t.rhoT_active.size(); ++k)
    if (t.rhoT_active[k] < 0.0)
      flag("nonnegativity", k,
           "rhoT_active is negative at node " + std::to_string(k));
  for (int c = 0; c < t.rhoT_dead.size(); ++c)
    if (t.rhoT_dead[c] < 0.0)
      flag("nonnegativity", c,
           "rhoT_dead is negative at cell " + std::to_string(c));
  if (!out.empty()) return out;  // mass sums below would be misleading

  const double m0 = integrate(grid, t.rho0);
  if (std::abs(m0 - 1.0) > kMassTol)
    flag("initial mass", -1,
         "integral of rho0 is " + std::to_string(m0) + ", expected 1");

  const double dead_mass = terminal_dead_mass(t, ds).sum();
  if (star) {
    if (dead_mass > 1.0 + kMassTol)
      flag("mass balance", -1,
           "dead terminal mass " + std::to_string(dead_mass) + " exceeds 1");
  } else {
    const double total = integrate(grid, t.rhoT_active) + dead_mass;
    if (std::abs(total - 1.0) > kMassTol)
      flag("mass balance", -1,
           "active + dead terminal mass is " + std::to_string(total) +
               ", expected 1");
  }

  if (ref != nullptr) {
    const Eigen::VectorXd r0 = rho0_mass(t, grid);
    for (int k = 0; k < grid.n_space; ++k)
      if (r0[k] > 0.0 && ref->mu0_mass[k] <= 0.0)
        flag("absolute continuity", k,
             "rho0 puts mass on node " + std::to_string(k) +
                 " that the reference initial law does not charge");
    if (!star) {
      const Eigen::VectorXd ta = terminal_active_mass(t, grid);
      for (int k = 0; k < grid.n_space; ++k)
        if (ta[k] > 0.0 && ref->terminal_active_mass[k] <= 0.0)
          flag("absolute continuity", k,
               "rhoT_active puts mass on node " + std::to_string(k) +
                   " that the reference chain cannot reach alive");
    }
    const Eigen::VectorXd td = terminal_dead_mass(t, ds);
    for (int c = 0; c < ds.size(); ++c)
      if (td[c] > 0.0 && ref->terminal_dead_mass[c] <= 0.0)
        flag("absolute continuity", c,
             "rhoT_dead puts mass on cell " + std::to_string(c) +
                 " that the reference kill law does not charge");
  }
  return out;
}

}  // namespace usbp
