#include "usbp/compare.hpp"

#include <cmath>
#include <stdexcept>

namespace usbp {

namespace {

double kl_part(const Eigen::VectorXd& pot, const Eigen::VectorXd& mass,
               const char* side) {
  double kl = 0.0;
  for (int i = 0; i < mass.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    if (pot[i] <= 0.0)
      throw std::domain_error(std::string("kl_bridge: ") + side +
                              " potential vanishes on positive-target cell " +
                              std::to_string(i));
    kl += std::log(pot[i]) * mass[i];
  }
  return kl;
}

}  // namespace

double kl_bridge(const Potentials& pot, const TargetPair& targets,
                 const GridSpec& grid, const DeadSupport& ds) {
  double kl = kl_part(pot.f, rho0_mass(targets, grid), "initial");
  if (targets.rhoT_active.size() > 0)
    kl += kl_part(pot.g_active, terminal_active_mass(targets, grid), "active");
  kl += kl_part(pot.g_dead, terminal_dead_mass(targets, ds), "dead");
  return kl;
}

FlatnessReport g_dead_flatness(const Eigen::VectorXd& g_dead,
                               const DeadSupport& joint_ds,
                               const Eigen::VectorXd& ref_dead_mass,
                               double mass_floor) {
  if (joint_ds.kind() != ScenarioKind::Joint &&
      joint_ds.kind() != ScenarioKind::Star)
    throw std::invalid_argument("g_dead_flatness: needs the Joint dead layout");
  const int n = joint_ds.n_space();
  const int m_steps = joint_ds.n_steps();

  auto fiber_spread = [&](bool space_fiber) {
    double worst = 0.0;
    const int outer = space_fiber ? m_steps : n;
    const int inner = space_fiber ? n : m_steps;
    for (int o = 0; o < outer; ++o) {
      double lo = 0.0, hi = 0.0;
      bool seen = false;
      for (int i = 0; i < inner; ++i) {
        const int cell = space_fiber ? joint_ds.psi_index(o, i)
                                     : joint_ds.psi_index(i, o);
        if (ref_dead_mass[cell] < mass_floor) continue;
        const double v = g_dead[cell];
        if (!seen) {
          lo = hi = v;
          seen = true;
        } else {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      if (seen && hi > 0.0) worst = std::max(worst, (hi - lo) / hi);
    }
    return worst;
  };

  return {fiber_spread(true), fiber_spread(false)};
}

ComparisonReport compare_scenarios(const StepKernels& sk,
                                   const Eigen::VectorXd& mu0_mass,
                                   const TargetPair& joint_targets,
                                   const SinkhornOptions& opts, double tol) {
  if (joint_targets.scenario != ScenarioKind::Joint)
    throw std::invalid_argument("compare_scenarios: needs a Joint target");
  if (tol <= 0.0) tol = 10.0 * opts.tol;

  ComparisonReport rep;
  rep.all_converged = true;
  double kl[4] = {0, 0, 0, 0};
  const ScenarioKind kinds[4] = {ScenarioKind::Joint, ScenarioKind::TimeOnly,
                                 ScenarioKind::SpaceOnly,
                                 ScenarioKind::MassOnly};
  for (int s = 0; s < 4; ++s) {
    const TargetPair t = s == 0
                             ? joint_targets
                             : project_target(joint_targets, sk.grid, kinds[s]);
    const DeadSupport ds(kinds[s], sk.grid);
    const SinkhornResult res = sinkhorn_solve(sk, ds, mu0_mass, t, opts);
    kl[s] = kl_bridge(res.potentials, t, sk.grid, ds);
    rep.solves.push_back({kinds[s], kl[s], res.diagnostics.iterations,
                          res.diagnostics.marginal_error,
                          res.diagnostics.converged});
    rep.all_converged = rep.all_converged && res.diagnostics.converged;

    if (s == 0) {
      const DeadSupport joint_ds(ScenarioKind::Joint, sk.grid);
      rep.joint_flatness = g_dead_flatness(
          res.potentials.g_dead, joint_ds,
          joint_kill_flux(sk, Eigen::VectorXd::Ones(sk.n_space()), mu0_mass));
    }
  }

  const int pairs[4][2] = {{0, 1}, {0, 2}, {1, 3}, {2, 3}};
  rep.all_ok = rep.all_converged;
  for (const auto& p : pairs) {
    OrderingVerdict v;
    v.name = scenario_name(kinds[p[0]]) + " >= " + scenario_name(kinds[p[1]]);
    v.lhs = kl[p[0]];
    v.rhs = kl[p[1]];
    v.slack = v.lhs - v.rhs;
    v.ok = v.slack >= -tol;
    rep.all_ok = rep.all_ok && v.ok;
    rep.orderings.push_back(std::move(v));
  }
  return rep;
}

TargetPair equality_target(const StepKernels& sk,
                           const Eigen::VectorXd& mu0_mass,
                           const Potentials& weaker,
                           const TargetPair& weaker_targets,
                           ScenarioKind stronger) {
  const ScenarioKind wk = weaker.scenario;
  const bool ok_pair =
      ((wk == ScenarioKind::TimeOnly || wk == ScenarioKind::SpaceOnly) &&
       stronger == ScenarioKind::Joint) ||
      (wk == ScenarioKind::MassOnly &&
       (stronger == ScenarioKind::Joint || stronger == ScenarioKind::TimeOnly ||
        stronger == ScenarioKind::SpaceOnly));
  if (!ok_pair)
    throw std::invalid_argument(
        "equality_target: stronger scenario must refine the weaker one (" +
        scenario_name(wk) + " -> " + scenario_name(stronger) + ")");

  const DeadSupport weak_ds(wk, sk.grid);
  const DeadSupport joint_ds(ScenarioKind::Joint, sk.grid);
  const DeadSupport strong_ds(stronger, sk.grid);

  // The weaker bridge's kill law resolved by (node, step): flux of the
  // f-weighted evolution times the weaker dead potential of the hit cell.
  const Eigen::VectorXd flux = joint_kill_flux(sk, weaker.f, mu0_mass);
  Eigen::VectorXd strong_mass = Eigen::VectorXd::Zero(strong_ds.size());
  for (int m = 0; m < sk.n_steps(); ++m)
    for (int k = 0; k < sk.n_space(); ++k) {
      const double mass =
          weaker.g_dead[weak_ds.psi_index(m, k)] * flux[joint_ds.psi_index(m, k)];
      strong_mass[strong_ds.psi_index(m, k)] += mass;
    }

  TargetPair out;
  out.scenario = stronger;
  out.rho0 = weaker_targets.rho0;
  out.rhoT_active = weaker_targets.rhoT_active;
  out.rhoT_dead = strong_mass / strong_ds.cell_weight();
  return out;
}

}  // namespace usbp
