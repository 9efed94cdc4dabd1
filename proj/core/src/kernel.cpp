#include "usbp/kernel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace usbp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559005768;

// Off-diagonal jump rates of the generator at time level m.  up[k] is the
// rate k -> k+1 (used for k = 0..N-2), dn[k] the rate k -> k-1 (k = 1..N-1);
// the no-flux boundary rows simply have no outward rate.
void jump_rates(const Eigen::MatrixXd& b_field,
                const Eigen::MatrixXd& sigma_field, const GridSpec& grid,
                int m, Eigen::VectorXd& up, Eigen::VectorXd& dn) {
  const int n = grid.n_space;
  const double dx = grid.dx();
  up.resize(n);
  dn.resize(n);
  for (int k = 0; k < n; ++k) {
    const double diff = sigma_field(m, k) * sigma_field(m, k) / (2.0 * dx * dx);
    const double adv = b_field(m, k) / (2.0 * dx);
    up[k] = diff + adv;
    dn[k] = diff - adv;
  }
}

}  // namespace

StepKernels build_step_kernels(const CoefficientSet& coeffs,
                               const GridSpec& grid) {
  grid.validate();
  {
    const std::vector<std::string> bad = validate_coefficients(coeffs, grid);
    if (!bad.empty()) throw std::invalid_argument(bad.front());
  }

  StepKernels sk;
  sk.grid = grid;
  sk.coeffs = coeffs;
  sk.b_field = sample_field(coeffs.b, grid);
  sk.sigma_field = sample_field(coeffs.sigma, grid);
  sk.v_field = sample_field(coeffs.v, grid);

  const int n = grid.n_space;
  const int m_steps = grid.n_steps;
  const double dt = grid.dt();
  sk.step.reserve(m_steps);
  sk.kill_prob.reserve(m_steps);

  Eigen::VectorXd up, dn;
  for (int m = 0; m < m_steps; ++m) {
    jump_rates(sk.b_field, sk.sigma_field, grid, m, up, dn);
    for (int k = 0; k < n; ++k) {
      const bool up_used = k < n - 1;
      const bool dn_used = k > 0;
      if ((up_used && up[k] < 0.0) || (dn_used && dn[k] < 0.0))
        throw std::invalid_argument(
            "step kernel: drift dominates diffusion at t=" +
            std::to_string(grid.time(m)) + ", x=" + std::to_string(grid.node(k)) +
            " (|b| dx > sigma^2); refine the spatial grid");
    }

    // A = I - dt G, tridiagonal with unit row sums; P_m = A^{-1}.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
      double out = 0.0;
      if (k < n - 1) {
        a(k, k + 1) = -dt * up[k];
        out += up[k];
      }
      if (k > 0) {
        a(k, k - 1) = -dt * dn[k];
        out += dn[k];
      }
      a(k, k) = 1.0 + dt * out;
    }
    sk.step.push_back(Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(
        Eigen::MatrixXd::Identity(n, n)));

    Eigen::VectorXd kappa(n);
    for (int k = 0; k < n; ++k)
      kappa[k] = -std::expm1(-sk.v_field(m, k) * dt);
    sk.kill_prob.push_back(std::move(kappa));
  }
  return sk;
}

Eigen::MatrixXd kernel_between(const StepKernels& sk, int i, int j) {
  if (i < 0 || j < i || j > sk.n_steps())
    throw std::invalid_argument("kernel_between: need 0 <= i <= j <= n_steps");
  const int n = sk.n_space();
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  for (int m = i; m < j; ++m) {
    // Q <- Q diag(1 - kappa_m) P_m
    q = (q.array().rowwise() *
         (1.0 - sk.kill_prob[m].array()).transpose())
            .matrix() *
        sk.step[m];
  }
  return q;
}

Eigen::MatrixXd cross_kill_weight(const StepKernels& sk, int i, int m) {
  if (i < 0 || m < i || m > sk.n_steps() - 1)
    throw std::invalid_argument(
        "cross_kill_weight: need 0 <= i <= m <= n_steps - 1");
  Eigen::MatrixXd k = kernel_between(sk, i, m);
  k.array().rowwise() *= sk.kill_prob[m].transpose().array();
  return k;
}

double analytic_brownian_kernel(const AnalyticBrownianParams& p, double t,
                                double x, double s, double y) {
  if (!(s > t))
    throw std::invalid_argument("analytic_brownian_kernel: requires s > t");
  const double tau = s - t;
  const double z = y - x;
  return std::exp(-p.lambda * tau) * std::exp(-z * z / (2.0 * tau)) /
         std::sqrt(kTwoPi * tau);
}

}  // namespace usbp
