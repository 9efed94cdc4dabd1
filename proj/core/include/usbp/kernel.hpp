#pragma once

// Discrete transition structure of the killed diffusion
//
//   dX = b(t, X) dt + sigma(t, X) dB,   killed at rate v(t, X),
//
// on the reflecting grid of a GridSpec.  Each time step t_m -> t_{m+1}
// factors (Lie splitting) into
//
//   1. kill at the current node with probability kappa_m[k] = 1 - e^{-v(t_m,x_k) dt},
//   2. then diffuse one implicit-Euler step P_m = (I - dt G_m)^{-1},
//
// where G_m is the tridiagonal generator at time t_m: central differences for
// b d/dx, standard second difference for (sigma^2/2) d^2/dx^2, and no-flux
// boundary rows (every row of G_m sums to 0, so P_m is row-stochastic at any
// dt; nonnegativity of the off-diagonal rates requires |b| dx <= sigma^2 at
// the nodes and is validated at build time).
//
// Multi-step kernels:
//   kernel_between(i, j)    Q_{i->j} = prod_{m=i}^{j-1} diag(1-kappa_m) P_m,
//                           survive-and-move mass; entry/dx approximates the
//                           surviving transition density q(t_i, x_k, t_j, x_l).
//   cross_kill_weight(i, m) K_{i,m} = Q_{i->m} diag(kappa_m), mass that
//                           survives to t_m and is killed during step m at its
//                           pre-diffusion node; entry/(dx dt) approximates the
//                           cross-regime density v(s,y) q(t,x,s,y).
// For every start node, rowsum Q_{i->M} + sum_m rowsum K_{i,m} = 1 exactly.

#include <Eigen/Core>
#include <vector>

#include "usbp/grid.hpp"

namespace usbp {

struct StepKernels {
  GridSpec grid;
  CoefficientSet coeffs;

  // Sampled coefficient tables, (n_steps+1) x n_space, row = time level.
  Eigen::MatrixXd b_field;
  Eigen::MatrixXd sigma_field;
  Eigen::MatrixXd v_field;

  // step[m] = P_m (row-stochastic, strictly positive), m = 0..M-1.
  std::vector<Eigen::MatrixXd> step;
  // kill_prob[m][k] = kappa_m[k] in [0, 1), m = 0..M-1.
  std::vector<Eigen::VectorXd> kill_prob;

  int n_space() const { return grid.n_space; }
  int n_steps() const { return grid.n_steps; }
};

// Validates the coefficients (see validate_coefficients) and the row-rate
// nonnegativity condition |b| dx <= sigma^2, then assembles all step kernels.
// Throws std::invalid_argument describing the first violated condition.
StepKernels build_step_kernels(const CoefficientSet& coeffs,
                               const GridSpec& grid);

// Q_{i->j}; requires 0 <= i <= j <= n_steps.  Q_{i->i} = I.
Eigen::MatrixXd kernel_between(const StepKernels& sk, int i, int j);

// K_{i,m}; requires 0 <= i <= m <= n_steps - 1.
Eigen::MatrixXd cross_kill_weight(const StepKernels& sk, int i, int m);

struct AnalyticBrownianParams {
  double lambda = 0.0;  // constant killing rate
};

// Free-space surviving transition density of standard Brownian motion with
// constant killing rate lambda:
//   e^{-lambda (s-t)} * exp(-(y-x)^2 / (2(s-t))) / sqrt(2 pi (s-t)).
// Requires s > t.
double analytic_brownian_kernel(const AnalyticBrownianParams& p, double t,
                                double x, double s, double y);

}  // namespace usbp
