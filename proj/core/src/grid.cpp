#include "usbp/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace usbp {

void GridSpec::validate() const {
  if (n_space < 2)
    throw std::invalid_argument("grid: n_space must be >= 2, got " +
                                std::to_string(n_space));
  if (n_steps < 1)
    throw std::invalid_argument("grid: n_steps must be >= 1, got " +
                                std::to_string(n_steps));
  if (!(x_max > x_min))
    throw std::invalid_argument("grid: x_max must exceed x_min");
  if (!(t_horizon > 0.0))
    throw std::invalid_argument("grid: t_horizon must be positive");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) ||
      !std::isfinite(t_horizon))
    throw std::invalid_argument("grid: bounds must be finite");
}

Eigen::VectorXd GridSpec::nodes() const {
  Eigen::VectorXd xs(n_space);
  for (int k = 0; k < n_space; ++k) xs[k] = node(k);
  return xs;
}

Eigen::VectorXd GridSpec::quad_weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n_space, dx());
  w[0] = 0.5 * dx();
  w[n_space - 1] = 0.5 * dx();
  return w;
}

int GridSpec::nearest_node(double x) const {
  const double pos = (x - x_min) / dx();
  long k = std::lround(pos);
  if (k < 0) k = 0;
  if (k > n_space - 1) k = n_space - 1;
  return static_cast<int>(k);
}

Eigen::MatrixXd sample_field(const Expr& e, const GridSpec& grid) {
  grid.validate();
  Eigen::MatrixXd table(grid.n_steps + 1, grid.n_space);
  for (int m = 0; m <= grid.n_steps; ++m) {
    const double t = grid.time(m);
    for (int k = 0; k < grid.n_space; ++k) {
      const double val = e(t, grid.node(k));
      if (!std::isfinite(val))
        throw std::domain_error(
            "field '" + e.source() + "' is non-finite at time index m=" +
            std::to_string(m) + ", space index k=" + std::to_string(k) +
            " (t=" + std::to_string(t) + ", x=" + std::to_string(grid.node(k)) +
            ")");
      table(m, k) = val;
    }
  }
  return table;
}

double integrate(const GridSpec& grid, const Eigen::VectorXd& values) {
  if (values.size() != grid.n_space)
    throw std::invalid_argument(
        "integrate: expected " + std::to_string(grid.n_space) +
        " nodal values, got " + std::to_string(values.size()));
  return grid.quad_weights().dot(values);
}

std::vector<std::string> validate_coefficients(const CoefficientSet& coeffs,
                                               const GridSpec& grid) {
  grid.validate();
  std::vector<std::string> violations;

  auto sample_or_report = [&](const Expr& e,
                              const char* name) -> Eigen::MatrixXd {
    try {
      return sample_field(e, grid);
    } catch (const std::domain_error& err) {
      violations.push_back(std::string(name) + ": " + err.what());
      return Eigen::MatrixXd::Zero(grid.n_steps + 1, grid.n_space);
    }
  };

  sample_or_report(coeffs.b, "drift b");
  const Eigen::MatrixXd sig = sample_or_report(coeffs.sigma, "diffusion sigma");
  const Eigen::MatrixXd kill = sample_or_report(coeffs.v, "killing rate v");
  if (!violations.empty()) return violations;  // values below would be bogus

  if (sig.minCoeff() <= 0.0) {
    int m, k;
    sig.minCoeff(&m, &k);
    violations.push_back(
        "diffusion sigma must be positive on every grid node; sigma(t=" +
        std::to_string(grid.time(m)) + ", x=" + std::to_string(grid.node(k)) +
        ") = " + std::to_string(sig(m, k)));
  }
  if (kill.minCoeff() < 0.0) {
    int m, k;
    kill.minCoeff(&m, &k);
    violations.push_back(
        "killing rate v must be nonnegative; v(t=" +
        std::to_string(grid.time(m)) + ", x=" + std::to_string(grid.node(k)) +
        ") = " + std::to_string(kill(m, k)));
  }
  if (kill.maxCoeff() <= 0.0)
    violations.push_back(
        "killing rate v must be not identically 0 on the grid (no killing "
        "anywhere makes the dead regime unreachable)");
  return violations;
}

}  // namespace usbp
