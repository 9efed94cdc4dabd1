#include "usbp/montecarlo.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace usbp {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream key for one path: decorrelates (seed, path index) before seeding.
std::uint64_t path_key(std::uint64_t seed, int path) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(path) + 1));
}

double lerp_row(const Eigen::MatrixXd& field, const GridSpec& grid, int m,
                double x) {
  const double pos = (x - grid.x_min) / grid.dx();
  if (pos <= 0.0) return field(m, 0);
  const int last = grid.n_space - 1;
  if (pos >= last) return field(m, last);
  const int k = static_cast<int>(pos);
  const double frac = pos - k;
  return (1.0 - frac) * field(m, k) + frac * field(m, k + 1);
}

double reflect(double x, double lo, double hi) {
  while (x < lo || x > hi) {
    if (x < lo) x = 2.0 * lo - x;
    if (x > hi) x = 2.0 * hi - x;
  }
  return x;
}

}  // namespace

SdeFields reference_sde_fields(const StepKernels& sk) {
  const int m_steps = sk.n_steps();
  SdeFields f;
  f.drift = sk.b_field.topRows(m_steps);
  f.sigma = sk.sigma_field.topRows(m_steps);
  f.kill_rate = sk.v_field.topRows(m_steps);
  return f;
}

SdeFields bridge_sde_fields(const StepKernels& sk, const DeadSupport& ds,
                            const PhiSweep& phis) {
  const int m_steps = sk.n_steps();
  SdeFields f;
  f.drift.resize(m_steps, sk.n_space());
  f.sigma = sk.sigma_field.topRows(m_steps);
  f.kill_rate.resize(m_steps, sk.n_space());
  for (int m = 0; m < m_steps; ++m) {
    const BridgeFields bf = bridge_coefficients(sk, ds, phis, m);
    f.drift.row(m) = bf.drift.transpose();
    f.kill_rate.row(m) = bf.kill_rate.transpose();
  }
  return f;
}

PathEnsemble simulate(const GridSpec& grid, const SdeFields& fields,
                      const Eigen::VectorXd& initial_mass,
                      const SimConfig& cfg) {
  grid.validate();
  if (cfg.n_paths <= 0)
    throw std::invalid_argument("simulate: n_paths must be positive");
  if (initial_mass.size() != grid.n_space)
    throw std::invalid_argument("simulate: initial_mass has wrong length");
  if (initial_mass.minCoeff() < 0.0 || !(initial_mass.sum() > 0.0))
    throw std::invalid_argument(
        "simulate: initial_mass must be nonnegative with positive total");
  const int m_steps = grid.n_steps;
  if (fields.drift.rows() != m_steps || fields.sigma.rows() != m_steps ||
      fields.kill_rate.rows() != m_steps)
    throw std::invalid_argument("simulate: field tables must have one row per step");

  const double total = initial_mass.sum();
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);

  PathEnsemble ens;
  ens.grid = grid;
  ens.seed = cfg.seed;
  ens.paths.resize(cfg.n_paths);

  for (int i = 0; i < cfg.n_paths; ++i) {
    std::mt19937_64 rng(path_key(cfg.seed, i));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Initial node by CDF inversion over the given masses.
    double u = unif(rng) * total;
    int start = grid.n_space - 1;
    for (int k = 0; k < grid.n_space; ++k) {
      u -= initial_mass[k];
      if (u <= 0.0) {
        start = k;
        break;
      }
    }

    PathSample& path = ens.paths[i];
    path.positions.reserve(m_steps + 1);
    double x = grid.node(start);
    path.positions.push_back(x);
    for (int m = 0; m < m_steps; ++m) {
      const double rate = lerp_row(fields.kill_rate, grid, m, x);
      if (unif(rng) < -std::expm1(-rate * dt)) {
        path.kill_step = m;
        break;
      }
      const double drift = lerp_row(fields.drift, grid, m, x);
      const double sigma = lerp_row(fields.sigma, grid, m, x);
      x = reflect(x + drift * dt + sigma * sqrt_dt * normal(rng), grid.x_min,
                  grid.x_max);
      path.positions.push_back(x);
    }
  }
  return ens;
}

TerminalHistogram empirical_terminal(const PathEnsemble& ens,
                                     const DeadSupport& ds) {
  const double w = 1.0 / static_cast<double>(ens.paths.size());
  TerminalHistogram h;
  h.active_mass = Eigen::VectorXd::Zero(ens.grid.n_space);
  h.dead_mass = Eigen::VectorXd::Zero(ds.size());
  for (const PathSample& p : ens.paths) {
    if (p.killed())
      h.dead_mass[ds.psi_index(p.kill_step,
                               ens.grid.nearest_node(p.kill_location()))] += w;
    else
      h.active_mass[ens.grid.nearest_node(p.positions.back())] += w;
  }
  return h;
}

Eigen::VectorXd empirical_initial(const PathEnsemble& ens) {
  const double w = 1.0 / static_cast<double>(ens.paths.size());
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(ens.grid.n_space);
  for (const PathSample& p : ens.paths)
    mass[ens.grid.nearest_node(p.positions.front())] += w;
  return mass;
}

double tv_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("tv_distance: length mismatch");
  return 0.5 * (a - b).cwiseAbs().sum();
}

CostEstimate control_cost(const PathEnsemble& ens,
                          const Eigen::MatrixXd& control_field,
                          const Eigen::MatrixXd& xi_field,
                          const Eigen::MatrixXd& v_field) {
  const GridSpec& grid = ens.grid;
  const double dt = grid.dt();
  const auto integrand = [&](int m, double x) {
    const double u = lerp_row(control_field, grid, m, x);
    const double xi = lerp_row(xi_field, grid, m, x);
    const double v = lerp_row(v_field, grid, m, x);
    const double entropy = xi > 0.0 ? xi * std::log(xi) + 1.0 - xi : 1.0;
    return 0.5 * u * u + v * entropy;
  };

  // Welford's running mean/variance: stable, and exactly zero spread when
  // every path accrues the identical cost.
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  for (const PathSample& p : ens.paths) {
    double cost = 0.0;
    const int last = static_cast<int>(p.positions.size()) - 1;
    for (int m = 0; m < last; ++m) cost += dt * integrand(m, p.positions[m]);
    // The killed particle lives only part of its final step.
    if (p.killed()) cost += 0.5 * dt * integrand(p.kill_step, p.positions[last]);
    count += 1.0;
    const double delta = cost - mean;
    mean += delta / count;
    m2 += delta * (cost - mean);
  }

  CostEstimate est;
  est.value = mean;
  if (count > 1.0) est.std_error = std::sqrt(m2 / (count - 1.0) / count);
  return est;
}

}  // namespace usbp
