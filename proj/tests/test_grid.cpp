#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "usbp/grid.hpp"

using namespace usbp;

namespace {
GridSpec unit_grid(int n_space, int n_steps) {
  return {0.0, 1.0, n_space, 1.0, n_steps};
}
}  // namespace

TEST_CASE("grid geometry") {
  const GridSpec g = unit_grid(3, 2);
  CHECK(g.dx() == 0.5);
  CHECK(g.dt() == 0.5);
  CHECK(g.node(0) == 0.0);
  CHECK(g.node(1) == 0.5);
  CHECK(g.node(2) == 1.0);
  CHECK(g.time(2) == 1.0);

  const Eigen::VectorXd w = g.quad_weights();
  CHECK(w[0] == 0.25);
  CHECK(w[1] == 0.5);
  CHECK(w[2] == 0.25);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS((GridSpec{0, 1, 1, 1, 4}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{0, 1, 8, 1, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{1, 1, 8, 1, 4}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{0, 1, 8, 0, 4}.validate()), std::invalid_argument);
  CHECK_NOTHROW(unit_grid(2, 1).validate());
}

TEST_CASE("nearest node clamps and rounds") {
  const GridSpec g = unit_grid(3, 1);
  CHECK(g.nearest_node(-5.0) == 0);
  CHECK(g.nearest_node(5.0) == 2);
  CHECK(g.nearest_node(0.24) == 0);
  CHECK(g.nearest_node(0.26) == 1);
  CHECK(g.nearest_node(1.0) == 2);
}

TEST_CASE("sample_field tabulates (t, x)") {
  const GridSpec g = unit_grid(3, 2);

  const Eigen::MatrixXd ones = sample_field(parse_expr("1"), g);
  CHECK(ones.rows() == 3);
  CHECK(ones.cols() == 3);
  CHECK(ones.minCoeff() == 1.0);
  CHECK(ones.maxCoeff() == 1.0);

  const Eigen::MatrixXd xs = sample_field(parse_expr("x"), g);
  for (int m = 0; m <= 2; ++m) {
    CHECK(xs(m, 0) == 0.0);
    CHECK(xs(m, 1) == 0.5);
    CHECK(xs(m, 2) == 1.0);
  }

  const Eigen::MatrixXd tx = sample_field(parse_expr("t*x"), g);
  for (int m = 0; m <= 2; ++m)
    for (int k = 0; k < 3; ++k) CHECK(tx(m, k) == g.time(m) * g.node(k));
}

TEST_CASE("sample_field names the offending node") {
  const GridSpec g = unit_grid(3, 1);
  try {
    sample_field(parse_expr("1/(x-0.5)"), g);
    FAIL("expected domain_error");
  } catch (const std::domain_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("m=0") != std::string::npos);
    CHECK(msg.find("k=1") != std::string::npos);
  }
}

TEST_CASE("sampling is deterministic") {
  const GridSpec g{-2.0, 3.0, 17, 0.7, 5};
  const Expr e = parse_expr("exp(-x^2)*sin(t)+x/7");
  CHECK(sample_field(e, g) == sample_field(e, g));
}

TEST_CASE("trapezoid integration") {
  const GridSpec g = unit_grid(11, 1);
  CHECK(integrate(g, Eigen::VectorXd::Zero(11)) == 0.0);
  CHECK(integrate(g, Eigen::VectorXd::Ones(11)) == doctest::Approx(1.0).epsilon(1e-15));

  // Exact for affine integrands: v = a + b x over [x_min, x_max].
  std::mt19937 rng(20260817);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = coef(rng), b = coef(rng);
    const double lo = coef(rng);
    const GridSpec gr{lo, lo + 1.0 + std::abs(coef(rng)), 2 + trial, 1.0, 1};
    Eigen::VectorXd v(gr.n_space);
    for (int k = 0; k < gr.n_space; ++k) v[k] = a + b * gr.node(k);
    const double exact = a * (gr.x_max - gr.x_min) +
                         0.5 * b * (gr.x_max * gr.x_max - gr.x_min * gr.x_min);
    CHECK(integrate(gr, v) == doctest::Approx(exact).epsilon(1e-12));
  }

  // Midpoint-node linear ramp from the module contract: integral of x over
  // [0, 1] on 101 nodes is exactly 1/2.
  const GridSpec fine = unit_grid(101, 1);
  Eigen::VectorXd ramp(101);
  for (int k = 0; k < 101; ++k) ramp[k] = fine.node(k);
  CHECK(integrate(fine, ramp) == doctest::Approx(0.5).epsilon(1e-14));

  CHECK_THROWS_AS(integrate(g, Eigen::VectorXd::Zero(7)), std::invalid_argument);
}

TEST_CASE("coefficient validation enforces the standing assumptions") {
  const GridSpec g{-1.0, 1.0, 9, 1.0, 4};

  CoefficientSet good{parse_expr("0"), parse_expr("1"), parse_expr("0.5")};
  CHECK(validate_coefficients(good, g).empty());

  CoefficientSet bad_sigma{parse_expr("0"), parse_expr("x"), parse_expr("0.5")};
  auto v1 = validate_coefficients(bad_sigma, g);
  REQUIRE(!v1.empty());
  CHECK(v1.front().find("sigma") != std::string::npos);

  CoefficientSet neg_kill{parse_expr("0"), parse_expr("1"), parse_expr("-1")};
  auto v2 = validate_coefficients(neg_kill, g);
  REQUIRE(!v2.empty());
  CHECK(v2.front().find("nonnegative") != std::string::npos);

  CoefficientSet zero_kill{parse_expr("0"), parse_expr("1"), parse_expr("0")};
  auto v3 = validate_coefficients(zero_kill, g);
  REQUIRE(!v3.empty());
  CHECK(v3.front().find("not identically 0") != std::string::npos);

  CoefficientSet blowup{parse_expr("1/x"), parse_expr("1"), parse_expr("0.5")};
  auto v4 = validate_coefficients(blowup, g);
  REQUIRE(!v4.empty());
  CHECK(v4.front().find("drift b") != std::string::npos);
}
