#pragma once

// Shared fixtures: a smooth nonconstant-coefficient reference chain plus
// well-posed targets derived from its own terminal law, so every test
// problem is mass-balanced and absolutely continuous by construction.

#include <Eigen/Core>
#include <cmath>

#include "usbp/kernel.hpp"
#include "usbp/scenario.hpp"
#include "usbp/sinkhorn.hpp"

namespace testfix {

inline usbp::StepKernels wavy_kernels(int n_space = 24, int n_steps = 8) {
  const usbp::GridSpec g{-2.0, 2.0, n_space, 1.0, n_steps};
  return usbp::build_step_kernels(
      {usbp::parse_expr("0.2*sin(x)"), usbp::parse_expr("1"),
       usbp::parse_expr("0.3*exp(-x^2)+0.1")},
      g);
}

inline Eigen::VectorXd uniform_mass(const usbp::GridSpec& g) {
  const Eigen::VectorXd w = g.quad_weights();
  return w / w.sum();
}

// Joint target away from the reference law: surviving part tilted by a
// Gaussian factor (total survival mass kept), dead part left at the
// reference kill law.
inline usbp::TargetPair tilted_joint_target(const usbp::StepKernels& sk,
                                            const Eigen::VectorXd& mu0_mass) {
  const usbp::DeadSupport ds(usbp::ScenarioKind::Joint, sk.grid);
  const usbp::ReferenceLaw ref = reference_terminal_law(sk, ds, mu0_mass);
  const usbp::GridSpec& g = sk.grid;

  Eigen::VectorXd active = ref.terminal_active_mass;
  const double total = active.sum();
  for (int k = 0; k < g.n_space; ++k)
    active[k] *= std::exp(-0.5 * g.node(k) * g.node(k));
  active *= total / active.sum();

  usbp::TargetPair t;
  t.scenario = usbp::ScenarioKind::Joint;
  t.rho0 = mu0_mass.cwiseQuotient(g.quad_weights());
  t.rhoT_active = active.cwiseQuotient(g.quad_weights());
  t.rhoT_dead = ref.terminal_dead_mass / ds.cell_weight();
  return t;
}

}  // namespace testfix
