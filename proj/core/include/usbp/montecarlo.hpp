#pragma once

// Euler-Maruyama simulation of the (reference or bridge) killed SDE against
// nodal field tables, mirroring the kernel module's splitting step by step:
// at each time level the particle is first killed with probability
// 1 - exp(-rate(t_m, X) dt) at its current position, then moved by
// X <- X + drift dt + sigma sqrt(dt) Z and reflected into [x_min, x_max].
// Fields are evaluated by linear interpolation in x (clamped to the grid).
//
// Reproducibility: every path owns an RNG stream derived from (seed, path
// index) alone, so ensembles are bitwise identical across runs and do not
// depend on scheduling or worker count; aggregation follows ascending path
// index.

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "usbp/kernel.hpp"
#include "usbp/scenario.hpp"
#include "usbp/sweep.hpp"

namespace usbp {

struct SdeFields {
  // Row m = time level t_m, m = 0..M-1; column k = node.
  Eigen::MatrixXd drift;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd kill_rate;
};

// Fields of the base process: b, sigma, v.
SdeFields reference_sde_fields(const StepKernels& sk);

// Fields of the solved bridge: drift b + sigma^2 dlog phi, unchanged sigma,
// kill rate v * g_dead[psi]/phi (assembled from bridge_coefficients).
SdeFields bridge_sde_fields(const StepKernels& sk, const DeadSupport& ds,
                            const PhiSweep& phis);

struct SimConfig {
  int n_paths = 10000;
  std::uint64_t seed = 0;
};

struct PathSample {
  // Positions at t_0 .. t_{kill_step} for killed paths (the last entry is
  // the pre-diffusion position the particle was killed at), t_0 .. t_M for
  // survivors.
  std::vector<double> positions;
  int kill_step = -1;  // -1 = survived to the horizon

  bool killed() const { return kill_step >= 0; }
  double kill_location() const { return positions.back(); }
};

struct PathEnsemble {
  GridSpec grid;
  std::uint64_t seed = 0;
  std::vector<PathSample> paths;
};

// Initial positions are grid nodes sampled from initial_mass (need not be
// normalized; must be nonnegative with positive total).
PathEnsemble simulate(const GridSpec& grid, const SdeFields& fields,
                      const Eigen::VectorXd& initial_mass,
                      const SimConfig& cfg);

// Terminal histogram with mass 1/n_paths per path: survivors binned to the
// nearest node, killed paths to (kill step, nearest node) through the dead
// support layout.
struct TerminalHistogram {
  Eigen::VectorXd active_mass;
  Eigen::VectorXd dead_mass;
};

TerminalHistogram empirical_terminal(const PathEnsemble& ens,
                                     const DeadSupport& ds);

// Histogram of the initial positions (nearest node, mass 1/n_paths).
Eigen::VectorXd empirical_initial(const PathEnsemble& ens);

// Total-variation distance 0.5 * sum |a - b| between mass vectors.
double tv_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Monte Carlo estimate of the control cost
//   E integral [ 1/2 u*^2 + v (xi log xi + 1 - xi) ] dt   (xi log xi := 0 at 0)
// along bridge-mode paths, evaluated at (t_m, X_m) with full weight on steps
// survived and half weight on the killing step (the particle lives only part
// of it).  Equals the bridge relative entropy when rho0 is the reference
// initial law, up to discretization bias and sampling noise.
struct CostEstimate {
  double value = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n_paths)
};

CostEstimate control_cost(const PathEnsemble& ens,
                          const Eigen::MatrixXd& control_field,
                          const Eigen::MatrixXd& xi_field,
                          const Eigen::MatrixXd& v_field);

}  // namespace usbp
