#pragma once

// Cross-scenario information comparison.  The relative entropy of a solved
// bridge with respect to the reference chain reduces to its potentials:
//
//   KL(P || R) = sum ln f  drho0 + sum ln g  drhoT,
//
// summed over positive-target cells.  Remembering more about a killed
// particle can only cost more: with a Joint target and its marginalizations,
//   KL_joint >= KL_time_only,  KL_joint >= KL_space_only,
//   KL_time_only >= KL_mass_only,  KL_space_only >= KL_mass_only,
// with equality between Joint and a coarser scenario exactly when the Joint
// dead potential is constant along the marginalized coordinate.  The
// equality case is constructive: a coarser solve induces a finer target (its
// own joint kill law) whose bridge coincides with the coarser bridge.

#include <Eigen/Core>
#include <string>
#include <vector>

#include "usbp/kernel.hpp"
#include "usbp/scenario.hpp"
#include "usbp/sinkhorn.hpp"

namespace usbp {

// Throws std::domain_error if f (resp. g) vanishes on a positive-target cell.
double kl_bridge(const Potentials& pot, const TargetPair& targets,
                 const GridSpec& grid, const DeadSupport& ds);

// (max - min) / max of a Joint dead potential within each kill-step fiber
// (across_space) and each node fiber (across_time), maximized over fibers;
// cells whose reference kill mass is below mass_floor are ignored.
struct FlatnessReport {
  double across_space = 0.0;
  double across_time = 0.0;
};

FlatnessReport g_dead_flatness(const Eigen::VectorXd& g_dead,
                               const DeadSupport& joint_ds,
                               const Eigen::VectorXd& ref_dead_mass,
                               double mass_floor = 1e-14);

struct ScenarioSolveSummary {
  ScenarioKind scenario = ScenarioKind::Joint;
  double kl = 0.0;
  int iterations = 0;
  double marginal_error = 0.0;
  bool converged = false;
};

struct OrderingVerdict {
  std::string name;  // e.g. "joint >= time_only"
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // lhs - rhs, must be >= -tol
  bool ok = false;
};

struct ComparisonReport {
  std::vector<ScenarioSolveSummary> solves;  // joint, time, space, mass order
  std::vector<OrderingVerdict> orderings;
  FlatnessReport joint_flatness;
  bool all_converged = false;
  bool all_ok = false;
};

// Solves the Joint problem and its three marginalizations, compares the four
// KL values (slack tolerance `tol`; <= 0 means 10 x opts.tol) and reports the
// flatness of the Joint dead potential.
ComparisonReport compare_scenarios(const StepKernels& sk,
                                   const Eigen::VectorXd& mu0_mass,
                                   const TargetPair& joint_targets,
                                   const SinkhornOptions& opts = {},
                                   double tol = 0.0);

// Lifts a coarser solve to the finer target it tacitly pins down: the dead
// part is the solve's own kill law resolved on the finer support (weighted
// by its dead potential), the active part and rho0 are carried over.
// Solving the finer scenario against this target reproduces the coarser
// bridge.  Supported: TimeOnly/SpaceOnly -> Joint, MassOnly -> any finer.
TargetPair equality_target(const StepKernels& sk,
                           const Eigen::VectorXd& mu0_mass,
                           const Potentials& weaker,
                           const TargetPair& weaker_targets,
                           ScenarioKind stronger);

}  // namespace usbp
