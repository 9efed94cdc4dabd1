#pragma once

// Static bridge system solver.  A pair of potentials (f on initial nodes,
// g on terminal cells) reweights the reference chain R into the bridge
// P = f(X_0) g(X_T, regime) R.  The pair solves
//
//   f[k] * phi0[k] * mu0[k]   = rho0[k]          (initial constraint)
//   g[cell] * phihatT[cell]   = rhoT[cell]       (terminal constraint)
//
// where phi0 = E[g(terminal cell) | start at k] and phihatT is the terminal
// law of the f-weighted forward evolution.  The fixed point is reached by
// alternating the two updates (the classical iterative proportional fitting):
//
//   g    <- rhoT ./ phihatT        (cellwise, 0/0 -> 0)
//   phi0 <- phi0_from_g(g)
//   f    <- rho0 ./ (mu0 .* phi0)
//   phihatT <- phihatT_from_f(f)
//
// starting from f == 1 (phihatT = reference terminal law).  Convergence is
// measured as the sup over positive-target cells of the relative terminal
// mismatch |g .* phihatT - rhoT| / rhoT; the initial constraint is exact
// after every f update.  For the Star scenario g_active is pinned to 1 and
// only the dead constraint is enforced (and no gauge normalization is
// applied, since it would destroy g_active == 1).  Otherwise the returned
// pair is gauge-normalized so that sum(f .* mu0) = 1.

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "usbp/kernel.hpp"
#include "usbp/scenario.hpp"

namespace usbp {

// A positive-target cell is requested where the reference law carries no
// mass (or where the weighted evolution vanishes): no bridge exists.
struct AbsoluteContinuityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Potentials {
  ScenarioKind scenario = ScenarioKind::Joint;
  Eigen::VectorXd f;         // initial potential over nodes
  Eigen::VectorXd g_active;  // terminal potential over surviving nodes
  Eigen::VectorXd g_dead;    // terminal potential over dead cells
};

struct SinkhornOptions {
  double tol = 1e-10;   // sup-norm relative terminal mismatch
  int max_iter = 10000;
};

struct SinkhornDiagnostics {
  int iterations = 0;
  double marginal_error = 0.0;
  bool converged = false;
  std::vector<double> error_history;  // one entry per iteration
};

struct SinkhornResult {
  Potentials potentials;
  SinkhornDiagnostics diagnostics;
};

// Backward expectation of the terminal potential:
//   phi_M = g_active,
//   phi_m = (1-kappa_m) .* (P_m phi_{m+1}) + kappa_m .* g_dead[psi(m, .)],
// returning phi_0.  Equals Q_{0->M} g_active + sum_m K_{0,m} g_dead[psi(m,.)].
Eigen::VectorXd phi0_from_g(const StepKernels& sk, const DeadSupport& ds,
                            const Eigen::VectorXd& g_active,
                            const Eigen::VectorXd& g_dead);

// Terminal law of the chain started from the weighted masses f .* mu0_mass:
// the surviving node masses plus the kill mass accumulated per dead cell.
struct ForwardTerminal {
  Eigen::VectorXd active_mass;  // per node
  Eigen::VectorXd dead_mass;    // per dead cell

  Eigen::VectorXd dead_density(const DeadSupport& ds) const {
    return dead_mass / ds.cell_weight();
  }
};

ForwardTerminal phihatT_from_f(const StepKernels& sk, const DeadSupport& ds,
                               const Eigen::VectorXd& f,
                               const Eigen::VectorXd& mu0_mass);

// Reference law (f == 1) packaged for validate_targets.
ReferenceLaw reference_terminal_law(const StepKernels& sk,
                                    const DeadSupport& ds,
                                    const Eigen::VectorXd& mu0_mass);

// Kill mass of the f-weighted evolution resolved by (node, step) in the
// Joint layout (step * n_space + node) regardless of ds; with f == 1 this is
// the reference joint kill law.
Eigen::VectorXd joint_kill_flux(const StepKernels& sk,
                                const Eigen::VectorXd& f,
                                const Eigen::VectorXd& mu0_mass);

// Runs the alternating updates until the terminal mismatch falls below
// opts.tol or max_iter is exhausted (then diagnostics.converged == false).
// Throws AbsoluteContinuityError if some positive-target cell is
// unreachable under the reference chain.
SinkhornResult sinkhorn_solve(const StepKernels& sk, const DeadSupport& ds,
                              const Eigen::VectorXd& mu0_mass,
                              const TargetPair& targets,
                              const SinkhornOptions& opts = {});

}  // namespace usbp
