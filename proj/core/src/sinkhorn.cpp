#include "usbp/sinkhorn.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace usbp {

namespace {

// Forward chain evolution from the given initial node masses; accumulates
// kill mass either into the ds layout or, when joint_layout is true, into
// (step * n_space + node) cells.
ForwardTerminal evolve_forward(const StepKernels& sk, const DeadSupport* ds,
                               Eigen::VectorXd alpha, bool joint_layout) {
  const int n = sk.n_space();
  const int m_steps = sk.n_steps();
  Eigen::VectorXd dead =
      Eigen::VectorXd::Zero(joint_layout ? n * m_steps : ds->size());
  for (int m = 0; m < m_steps; ++m) {
    const Eigen::VectorXd& kappa = sk.kill_prob[m];
    for (int k = 0; k < n; ++k) {
      const double flux = alpha[k] * kappa[k];
      if (flux != 0.0)
        dead[joint_layout ? m * n + k : ds->psi_index(m, k)] += flux;
    }
    alpha = sk.step[m].transpose() *
            alpha.cwiseProduct((1.0 - kappa.array()).matrix());
  }
  return {std::move(alpha), std::move(dead)};
}

}  // namespace

Eigen::VectorXd phi0_from_g(const StepKernels& sk, const DeadSupport& ds,
                            const Eigen::VectorXd& g_active,
                            const Eigen::VectorXd& g_dead) {
  const int n = sk.n_space();
  if (g_active.size() != n || g_dead.size() != ds.size())
    throw std::invalid_argument("phi0_from_g: potential size mismatch");
  Eigen::VectorXd phi = g_active;
  for (int m = sk.n_steps() - 1; m >= 0; --m) {
    Eigen::VectorXd diffused = sk.step[m] * phi;
    for (int k = 0; k < n; ++k) {
      const double kappa = sk.kill_prob[m][k];
      phi[k] = (1.0 - kappa) * diffused[k] + kappa * g_dead[ds.psi_index(m, k)];
    }
  }
  return phi;
}

ForwardTerminal phihatT_from_f(const StepKernels& sk, const DeadSupport& ds,
                               const Eigen::VectorXd& f,
                               const Eigen::VectorXd& mu0_mass) {
  if (f.size() != sk.n_space() || mu0_mass.size() != sk.n_space())
    throw std::invalid_argument("phihatT_from_f: size mismatch");
  return evolve_forward(sk, &ds, f.cwiseProduct(mu0_mass), false);
}

ReferenceLaw reference_terminal_law(const StepKernels& sk,
                                    const DeadSupport& ds,
                                    const Eigen::VectorXd& mu0_mass) {
  ForwardTerminal t = evolve_forward(sk, &ds, mu0_mass, false);
  return {mu0_mass, std::move(t.active_mass), std::move(t.dead_mass)};
}

Eigen::VectorXd joint_kill_flux(const StepKernels& sk,
                                const Eigen::VectorXd& f,
                                const Eigen::VectorXd& mu0_mass) {
  return evolve_forward(sk, nullptr, f.cwiseProduct(mu0_mass), true).dead_mass;
}

SinkhornResult sinkhorn_solve(const StepKernels& sk, const DeadSupport& ds,
                              const Eigen::VectorXd& mu0_mass,
                              const TargetPair& targets,
                              const SinkhornOptions& opts) {
  const int n = sk.n_space();
  const bool star = targets.scenario == ScenarioKind::Star;
  if (ds.kind() != targets.scenario)
    throw std::invalid_argument("sinkhorn_solve: support/target scenario mismatch");
  if (mu0_mass.size() != n)
    throw std::invalid_argument("sinkhorn_solve: mu0_mass has wrong length");

  const Eigen::VectorXd rho0m = rho0_mass(targets, sk.grid);
  const Eigen::VectorXd tam = terminal_active_mass(targets, sk.grid);
  const Eigen::VectorXd tdm = terminal_dead_mass(targets, ds);

  for (int k = 0; k < n; ++k)
    if (rho0m[k] > 0.0 && mu0_mass[k] <= 0.0)
      throw AbsoluteContinuityError(
          "rho0 charges node " + std::to_string(k) +
          " which the reference initial law does not");

  SinkhornResult res;
  Potentials& pot = res.potentials;
  pot.scenario = targets.scenario;
  pot.f = Eigen::VectorXd::Ones(n);
  pot.g_active = Eigen::VectorXd::Ones(n);
  pot.g_dead = Eigen::VectorXd::Zero(ds.size());

  ForwardTerminal hat = phihatT_from_f(sk, ds, pot.f, mu0_mass);

  // g <- target/hat with the 0/0 -> 0 convention; positive target over a
  // zero evolution is an absolute-continuity failure.
  auto ratio_update = [](const Eigen::VectorXd& target,
                         const Eigen::VectorXd& hatv, const char* side) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(target.size());
    for (int i = 0; i < target.size(); ++i) {
      if (target[i] <= 0.0) continue;
      if (hatv[i] <= 0.0)
        throw AbsoluteContinuityError(
            std::string(side) + " target charges cell " + std::to_string(i) +
            " which the reference chain reaches with probability 0");
      g[i] = target[i] / hatv[i];
    }
    return g;
  };

  SinkhornDiagnostics& diag = res.diagnostics;
  diag.marginal_error = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    if (!star) pot.g_active = ratio_update(tam, hat.active_mass, "active");
    pot.g_dead = ratio_update(tdm, hat.dead_mass, "dead");

    const Eigen::VectorXd phi0 = phi0_from_g(sk, ds, pot.g_active, pot.g_dead);
    for (int k = 0; k < n; ++k) {
      const double denom = phi0[k] * mu0_mass[k];
      if (rho0m[k] <= 0.0) {
        pot.f[k] = 0.0;
      } else if (denom <= 0.0) {
        throw AbsoluteContinuityError(
            "rho0 charges node " + std::to_string(k) +
            " from which the bridge terminal law is unreachable");
      } else {
        pot.f[k] = rho0m[k] / denom;
      }
    }

    hat = phihatT_from_f(sk, ds, pot.f, mu0_mass);

    double err = 0.0;
    auto track = [&err](const Eigen::VectorXd& target,
                        const Eigen::VectorXd& g, const Eigen::VectorXd& hatv) {
      for (int i = 0; i < target.size(); ++i)
        if (target[i] > 0.0)
          err = std::max(err, std::abs(g[i] * hatv[i] - target[i]) / target[i]);
    };
    if (!star) track(tam, pot.g_active, hat.active_mass);
    track(tdm, pot.g_dead, hat.dead_mass);

    diag.iterations = it;
    diag.marginal_error = err;
    diag.error_history.push_back(err);
    if (err <= opts.tol) {
      diag.converged = true;
      break;
    }
  }

  if (!star) {
    const double scale = pot.f.dot(mu0_mass);
    if (scale > 0.0 && std::isfinite(scale)) {
      pot.f /= scale;
      pot.g_active *= scale;
      pot.g_dead *= scale;
    }
  }
  return res;
}

}  // namespace usbp
