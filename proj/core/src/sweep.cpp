#include "usbp/sweep.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace usbp {

namespace {

// Log-derivative of a positive nodal field: central differences inside,
// one-sided at the reflecting ends.
Eigen::VectorXd dlog(const Eigen::VectorXd& phi, double dx) {
  const int n = static_cast<int>(phi.size());
  Eigen::VectorXd d(n);
  d[0] = (std::log(phi[1]) - std::log(phi[0])) / dx;
  for (int k = 1; k < n - 1; ++k)
    d[k] = (std::log(phi[k + 1]) - std::log(phi[k - 1])) / (2.0 * dx);
  d[n - 1] = (std::log(phi[n - 1]) - std::log(phi[n - 2])) / dx;
  return d;
}

void require_positive_phi(const Eigen::VectorXd& phi, int m) {
  for (int k = 0; k < phi.size(); ++k)
    if (!(phi[k] > 0.0))
      throw std::domain_error(
          "bridge fields need phi > 0, but phi(t_" + std::to_string(m) +
          ", node " + std::to_string(k) + ") = " + std::to_string(phi[k]));
}

}  // namespace

PhiSweep phi_sweep(const StepKernels& sk, const DeadSupport& ds,
                   const Eigen::VectorXd& g_active,
                   const Eigen::VectorXd& g_dead) {
  const int n = sk.n_space();
  const int m_steps = sk.n_steps();
  if (g_active.size() != n || g_dead.size() != ds.size())
    throw std::invalid_argument("phi_sweep: potential size mismatch");

  PhiSweep out;
  out.dead = g_dead;
  out.values.assign(m_steps + 1, Eigen::VectorXd());
  out.values[m_steps] = g_active;
  for (int m = m_steps - 1; m >= 0; --m) {
    const Eigen::VectorXd diffused = sk.step[m] * out.values[m + 1];
    Eigen::VectorXd phi(n);
    for (int k = 0; k < n; ++k) {
      const double kappa = sk.kill_prob[m][k];
      phi[k] =
          (1.0 - kappa) * diffused[k] + kappa * g_dead[ds.psi_index(m, k)];
    }
    out.values[m] = std::move(phi);
  }
  return out;
}

PhiHatSweep phihat_sweep(const StepKernels& sk, const DeadSupport& ds,
                         const Eigen::VectorXd& f,
                         const Eigen::VectorXd& mu0_mass) {
  const int n = sk.n_space();
  const int m_steps = sk.n_steps();
  if (f.size() != n || mu0_mass.size() != n)
    throw std::invalid_argument("phihat_sweep: size mismatch");

  PhiHatSweep out;
  out.mass.assign(m_steps + 1, Eigen::VectorXd());
  out.dead_mass.assign(m_steps + 1, Eigen::VectorXd());
  out.mass[0] = f.cwiseProduct(mu0_mass);
  out.dead_mass[0] = Eigen::VectorXd::Zero(ds.size());
  for (int m = 0; m < m_steps; ++m) {
    const Eigen::VectorXd& kappa = sk.kill_prob[m];
    // Copy-then-add keeps cells not hit at step m bitwise unchanged, which
    // is what makes the Joint/TimeOnly indicator identity exact.
    out.dead_mass[m + 1] = out.dead_mass[m];
    for (int k = 0; k < n; ++k) {
      const double flux = out.mass[m][k] * kappa[k];
      if (flux != 0.0) out.dead_mass[m + 1][ds.psi_index(m, k)] += flux;
    }
    out.mass[m + 1] = sk.step[m].transpose() *
                      out.mass[m].cwiseProduct((1.0 - kappa.array()).matrix());
  }
  return out;
}

MarginalSlice marginals(const PhiSweep& phis, const PhiHatSweep& phihats,
                        const GridSpec& grid, const DeadSupport& ds, int m) {
  if (m < 0 || m >= static_cast<int>(phis.values.size()))
    throw std::invalid_argument("marginals: time index out of range");
  MarginalSlice s;
  s.active_mass = phis.values[m].cwiseProduct(phihats.mass[m]);
  s.dead_mass = phis.dead.cwiseProduct(phihats.dead_mass[m]);
  s.active_density = s.active_mass.cwiseQuotient(grid.quad_weights());
  s.dead_density = s.dead_mass / ds.cell_weight();
  s.total_mass = s.active_mass.sum() + s.dead_mass.sum();
  return s;
}

BridgeFields bridge_coefficients(const StepKernels& sk, const DeadSupport& ds,
                                 const PhiSweep& phis, int m) {
  if (m < 0 || m >= sk.n_steps())
    throw std::invalid_argument("bridge_coefficients: need 0 <= m < n_steps");
  const Eigen::VectorXd& phi = phis.values[m];
  require_positive_phi(phi, m);

  const int n = sk.n_space();
  const Eigen::VectorXd tilt = dlog(phi, sk.grid.dx());
  BridgeFields bf;
  bf.drift.resize(n);
  bf.control.resize(n);
  bf.xi.resize(n);
  bf.kill_rate.resize(n);
  for (int k = 0; k < n; ++k) {
    const double sigma = sk.sigma_field(m, k);
    bf.control[k] = sigma * tilt[k];
    bf.drift[k] = sk.b_field(m, k) + sigma * sigma * tilt[k];
    bf.xi[k] = phis.dead[ds.psi_index(m, k)] / phi[k];
    bf.kill_rate[k] = sk.v_field(m, k) * bf.xi[k];
  }
  return bf;
}

Eigen::MatrixXd bridge_kernel(const StepKernels& sk, const PhiSweep& phis,
                              int i, int j) {
  if (i < 0 || j < i || j > sk.n_steps())
    throw std::invalid_argument("bridge_kernel: need 0 <= i <= j <= n_steps");
  require_positive_phi(phis.values[i], i);
  Eigen::MatrixXd q = kernel_between(sk, i, j);
  q.array().colwise() /= phis.values[i].array();
  q.array().rowwise() *= phis.values[j].transpose().array();
  return q;
}

ChainEvolution evolve_bridge_chain(const StepKernels& sk,
                                   const DeadSupport& ds,
                                   const PhiSweep& phis,
                                   const Eigen::VectorXd& rho0_mass) {
  const int n = sk.n_space();
  const int m_steps = sk.n_steps();
  if (rho0_mass.size() != n)
    throw std::invalid_argument("evolve_bridge_chain: rho0_mass size mismatch");

  ChainEvolution ev;
  ev.active_mass.assign(m_steps + 1, Eigen::VectorXd());
  ev.dead_mass.assign(m_steps + 1, Eigen::VectorXd());
  ev.active_mass[0] = rho0_mass;
  ev.dead_mass[0] = Eigen::VectorXd::Zero(ds.size());
  for (int m = 0; m < m_steps; ++m) {
    const Eigen::VectorXd& alpha = ev.active_mass[m];
    const Eigen::VectorXd& phi = phis.values[m];
    require_positive_phi(phi, m);
    ev.dead_mass[m + 1] = ev.dead_mass[m];
    for (int k = 0; k < n; ++k) {
      const int cell = ds.psi_index(m, k);
      const double kill =
          alpha[k] * sk.kill_prob[m][k] * phis.dead[cell] / phi[k];
      if (kill != 0.0) ev.dead_mass[m + 1][cell] += kill;
    }
    ev.active_mass[m + 1] =
        bridge_kernel(sk, phis, m, m + 1).transpose() * alpha;
  }
  return ev;
}

ResidualReport residuals(const StepKernels& sk, const DeadSupport& ds,
                         const PhiSweep& phis, const PhiHatSweep& phihats,
                         const Eigen::VectorXd& f,
                         const Eigen::VectorXd& mu0_mass) {
  const int n = sk.n_space();
  const int m_steps = sk.n_steps();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ResidualReport rep;

  // phi via explicit kernel products, per time level.
  for (int m = 0; m <= m_steps; ++m) {
    Eigen::VectorXd phi_k = kernel_between(sk, m, m_steps) * phis.values[m_steps];
    for (int j = m; j < m_steps; ++j) {
      const Eigen::MatrixXd kj = cross_kill_weight(sk, m, j);
      Eigen::VectorXd gpsi(n);
      for (int l = 0; l < n; ++l) gpsi[l] = phis.dead[ds.psi_index(j, l)];
      phi_k += kj * gpsi;
    }
    rep.phi_backward_identity = std::max(
        rep.phi_backward_identity, (phi_k - phis.values[m]).cwiseAbs().maxCoeff());
  }

  // phihat via explicit kernel products.
  const Eigen::VectorXd w0 = f.cwiseProduct(mu0_mass);
  for (int m = 0; m <= m_steps; ++m) {
    const Eigen::VectorXd active_k = kernel_between(sk, 0, m).transpose() * w0;
    Eigen::VectorXd dead_k = Eigen::VectorXd::Zero(ds.size());
    for (int j = 0; j < m; ++j) {
      const Eigen::VectorXd flux = cross_kill_weight(sk, 0, j).transpose() * w0;
      for (int l = 0; l < n; ++l) dead_k[ds.psi_index(j, l)] += flux[l];
    }
    rep.phihat_forward_identity =
        std::max(rep.phihat_forward_identity,
                 (active_k - phihats.mass[m]).cwiseAbs().maxCoeff());
    rep.phihat_forward_identity =
        std::max(rep.phihat_forward_identity,
                 (dead_k - phihats.dead_mass[m]).cwiseAbs().maxCoeff());
  }

  // Scenario-specific dead-marginal structure.
  const bool keeps_time = ds.kind() == ScenarioKind::Joint ||
                          ds.kind() == ScenarioKind::Star ||
                          ds.kind() == ScenarioKind::TimeOnly;
  if (keeps_time) {
    rep.dead_forward_residual = nan;
    const Eigen::VectorXd dead_T =
        phis.dead.cwiseProduct(phihats.dead_mass[m_steps]);
    for (int m = 0; m <= m_steps; ++m) {
      const Eigen::VectorXd dead_m = phis.dead.cwiseProduct(phihats.dead_mass[m]);
      for (int c = 0; c < ds.size(); ++c) {
        const double want = ds.cell_kill_step(c) < m ? dead_T[c] : 0.0;
        rep.dead_indicator_identity =
            std::max(rep.dead_indicator_identity, std::abs(dead_m[c] - want));
      }
    }
  } else {
    rep.dead_indicator_identity = nan;
    const double dt = sk.grid.dt();
    const Eigen::VectorXd w = sk.grid.quad_weights();
    for (int m = 0; m < m_steps; ++m) {
      const MarginalSlice cur = marginals(phis, phihats, sk.grid, ds, m);
      const MarginalSlice nxt = marginals(phis, phihats, sk.grid, ds, m + 1);
      if (ds.kind() == ScenarioKind::SpaceOnly) {
        // Interior nodes only: a boundary node's active mass sits on a half
        // cell (trapezoid weight dx/2) while its dead cell weighs a full dx,
        // so the pointwise equation at the wall is off by that fixed weight
        // ratio at any resolution.
        for (int l = 1; l < n - 1; ++l) {
          if (!(phis.values[m][l] > 0.0)) continue;
          const double lhs = (nxt.dead_density[l] - cur.dead_density[l]) / dt;
          const double rhs = phis.dead[l] / phis.values[m][l] *
                             sk.v_field(m, l) * cur.active_density[l];
          rep.dead_forward_residual =
              std::max(rep.dead_forward_residual, std::abs(lhs - rhs));
        }
      } else {  // MassOnly
        const double lhs = (nxt.dead_density[0] - cur.dead_density[0]) / dt;
        double rhs = 0.0;
        for (int l = 0; l < n; ++l) {
          if (!(phis.values[m][l] > 0.0)) continue;
          rhs += w[l] * phis.dead[0] / phis.values[m][l] * sk.v_field(m, l) *
                 cur.active_density[l];
        }
        rep.dead_forward_residual =
            std::max(rep.dead_forward_residual, std::abs(lhs - rhs));
      }
    }
  }

  // Finite-sup condition report for the bridge fields.
  for (int m = 0; m < m_steps; ++m) {
    const Eigen::VectorXd& phi = phis.values[m];
    bool positive = true;
    for (int k = 0; k < n; ++k) positive = positive && phi[k] > 0.0;
    if (!positive) {
      rep.sup_grad_log_phi = std::numeric_limits<double>::infinity();
      rep.sup_xi = std::numeric_limits<double>::infinity();
      break;
    }
    rep.sup_grad_log_phi =
        std::max(rep.sup_grad_log_phi, dlog(phi, sk.grid.dx()).cwiseAbs().maxCoeff());
    for (int k = 0; k < n; ++k)
      rep.sup_xi =
          std::max(rep.sup_xi, phis.dead[ds.psi_index(m, k)] / phi[k]);
  }
  return rep;
}

}  // namespace usbp
