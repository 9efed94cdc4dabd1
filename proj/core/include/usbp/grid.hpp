#pragma once

// Shared 1-D space/time lattice and quadrature used by every solver stage.
//
// Space: n_space nodes x_k = x_min + k*dx, dx = (x_max - x_min)/(n_space - 1).
// Time:  n_steps + 1 levels t_m = m*dt, dt = t_horizon/n_steps.
// Integrals over space use the trapezoid rule (dx/2 at the two boundary
// nodes, dx inside), so node "masses" of a density v are v[k]*weight[k].

#include <Eigen/Core>
#include <string>
#include <vector>

#include "usbp/expr.hpp"

namespace usbp {

struct GridSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  int n_space = 2;     // N, number of spatial nodes
  double t_horizon = 1.0;
  int n_steps = 1;     // M, number of time steps

  double dx() const { return (x_max - x_min) / (n_space - 1); }
  double dt() const { return t_horizon / n_steps; }
  double node(int k) const { return x_min + k * dx(); }
  double time(int m) const { return m * dt(); }

  Eigen::VectorXd nodes() const;
  // Trapezoid weights: dx/2 at k = 0 and k = N-1, dx elsewhere.
  Eigen::VectorXd quad_weights() const;

  // Index of the node nearest to x (ties go to the lower index + 1/2 rule of
  // llround); x outside the domain clamps to the boundary node.
  int nearest_node(double x) const;

  // Throws std::invalid_argument unless n_space >= 2, n_steps >= 1,
  // x_max > x_min and t_horizon > 0.
  void validate() const;
};

// Time-dependent killing rate, drift and diffusion of the base process.
struct CoefficientSet {
  Expr b;      // drift b(t, x)
  Expr sigma;  // diffusion sigma(t, x), must be > 0 on all sampled nodes
  Expr v;      // killing rate v(t, x), must be >= 0 and not identically 0
};

// Tabulates e(t_m, x_k) for all m = 0..M, k = 0..N-1 (row = time level).
// Throws std::domain_error naming (m, k) if any value is non-finite.
Eigen::MatrixXd sample_field(const Expr& e, const GridSpec& grid);

// Trapezoid integral of nodal values over [x_min, x_max].
// Throws std::invalid_argument if values.size() != n_space.
double integrate(const GridSpec& grid, const Eigen::VectorXd& values);

// Checks the standing assumptions on sampled nodes: sigma > 0 everywhere,
// v >= 0 everywhere and v > 0 somewhere, b finite.  Returns human-readable
// violations; empty result means the coefficient set is admissible.
std::vector<std::string> validate_coefficients(const CoefficientSet& coeffs,
                                               const GridSpec& grid);

}  // namespace usbp
