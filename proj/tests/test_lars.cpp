#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nowcaster/lars.hpp"
#include "nowcaster/rng.hpp"
#include "test_oracles.hpp"

using namespace nowcaster;
using namespace test_oracles;

TEST_CASE("single predictor: one entry, weight grows linearly to OLS") {
  Rng rng(11);
  const Eigen::MatrixXd x = random_matrix(40, 1, rng);
  const Eigen::VectorXd y = 1.7 * x.col(0) + 0.1 * random_vector(40, rng);

  Eigen::MatrixXd xs;
  Eigen::VectorXd yc;
  standardize(x, y, xs, yc);

  const RegularizationPath path = lars_lasso_path(x, y, 300, 900);
  REQUIRE(path.knots.size() == 2);
  CHECK(path.knots[0].lambda ==
        doctest::Approx(std::abs(xs.col(0).dot(yc))).epsilon(1e-10));
  CHECK(path.knots[0].weights(0) == 0.0);
  CHECK(path.knots[1].lambda == doctest::Approx(0.0).epsilon(1e-9));

  // weight at the end equals the OLS coefficient on standardised data
  const double ols = xs.col(0).dot(yc) / xs.col(0).squaredNorm();
  CHECK(path.knots[1].weights(0) == doctest::Approx(ols).epsilon(1e-10));

  // halfway in lambda gives half the weight (piecewise linearity)
  const double mid_lambda = path.knots[0].lambda / 2.0;
  const Eigen::VectorXd mid = lasso_weights_std(path, mid_lambda);
  CHECK(mid(0) == doctest::Approx(ols / 2.0).epsilon(1e-9));
}

TEST_CASE("zero response yields a single all-zero knot") {
  Rng rng(12);
  const Eigen::MatrixXd x = random_matrix(10, 4, rng);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(10);
  const RegularizationPath path = lars_lasso_path(x, y, 300, 900);
  REQUIRE(path.knots.size() == 1);
  CHECK(path.knots[0].weights.cwiseAbs().maxCoeff() == 0.0);
  CHECK(path.knots[0].active.empty());

  const LinearModel m = lasso_at(path, 0.5);
  CHECK(m.weights.cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.bias == 0.0);
}

TEST_CASE("single-row training data yields a single all-zero knot") {
  Eigen::MatrixXd x(1, 3);
  x << 1.0, 2.0, 3.0;
  Eigen::VectorXd y(1);
  y << 5.0;
  const RegularizationPath path = lars_lasso_path(x, y, 300, 900);
  REQUIRE(path.knots.size() == 1);
  CHECK(lasso_at(path, 0.0).bias == doctest::Approx(5.0));
}

TEST_CASE("orthonormal design matches soft-thresholded OLS") {
  Rng rng(13);
  const long n = 24, p = 6;
  const Eigen::MatrixXd x = orthonormalized_design(n, p, rng);
  const Eigen::VectorXd y = random_vector(n, rng);

  Eigen::MatrixXd xs;
  Eigen::VectorXd yc;
  standardize(x, y, xs, yc);

  const RegularizationPath path = lars_lasso_path(x, y, 300, 900);
  const double lambda_max = path.lambda_max();
  for (int k = 0; k < 8; ++k) {
    const double lambda = lambda_max * (k + 0.5) / 8.0;
    const Eigen::VectorXd w = lasso_weights_std(path, lambda);
    for (long j = 0; j < p; ++j) {
      const double rho = xs.col(j).dot(yc);
      double expect = 0.0;
      if (rho > lambda) expect = (rho - lambda) / static_cast<double>(n);
      if (rho < -lambda) expect = (rho + lambda) / static_cast<double>(n);
      CHECK(w(j) == doctest::Approx(expect).epsilon(1e-8));
    }
  }
}

TEST_CASE("knot objectives match a coordinate-descent oracle") {
  for (uint64_t seed : {21, 22, 23}) {
    Rng rng(seed);
    const Eigen::MatrixXd x = random_matrix(20, 8, rng);
    Eigen::VectorXd y = random_vector(20, rng);
    y += x.col(0) - 0.5 * x.col(3);

    Eigen::MatrixXd xs;
    Eigen::VectorXd yc;
    standardize(x, y, xs, yc);

    const RegularizationPath path = lars_lasso_path(x, y, 300, 900);
    for (const PathKnot& knot : path.knots) {
      const Eigen::VectorXd oracle = coordinate_descent_lasso(xs, yc, knot.lambda);
      const double obj_path = lasso_objective(xs, yc, knot.weights, knot.lambda);
      const double obj_oracle = lasso_objective(xs, yc, oracle, knot.lambda);
      CHECK(std::abs(obj_path - obj_oracle) <=
            1e-6 * std::max(1.0, std::abs(obj_oracle)));
    }
  }
}

TEST_CASE("path structure invariants") {
  Rng rng(31);
  const Eigen::MatrixXd x = random_matrix(30, 10, rng);
  Eigen::VectorXd y = random_vector(30, rng);
  y += 2.0 * x.col(2) - x.col(7);
  const RegularizationPath path = lars_lasso_path(x, y, 300, 900);
  REQUIRE(path.knots.size() >= 2);

  double l1_prev = -1.0;
  for (size_t k = 0; k < path.knots.size(); ++k) {
    if (k > 0) {
      // lambdas strictly decreasing
      CHECK(path.knots[k].lambda < path.knots[k - 1].lambda);
      // active sets change by exactly one feature, except for the terminal
      // segment that finishes the unregularised fit
      std::vector<long> prev = path.knots[k - 1].active;
      std::vector<long> curr = path.knots[k].active;
      std::vector<long> diff;
      std::set_symmetric_difference(prev.begin(), prev.end(), curr.begin(), curr.end(),
                                    std::back_inserter(diff));
      if (k + 1 == path.knots.size() && path.knots[k].lambda == 0.0) {
        CHECK(diff.size() <= 1);
      } else {
        CHECK(diff.size() == 1);
      }
    }
    // l1 norm non-decreasing as lambda decreases
    const double l1 = path.knots[k].weights.cwiseAbs().sum();
    CHECK(l1 >= l1_prev - 1e-10);
    l1_prev = l1;
  }
}

TEST_CASE("lasso_at interpolation") {
  Rng rng(41);
  const Eigen::MatrixXd x = random_matrix(25, 5, rng);
  Eigen::VectorXd y = random_vector(25, rng);
  y += x.col(1);
  const RegularizationPath path = lars_lasso_path(x, y, 300, 900);
  REQUIRE(path.knots.size() >= 3);

  // above the first knot: zero weights, bias = mean(y)
  const LinearModel top = lasso_at(path, path.lambda_max() * 2.0);
  CHECK(top.weights.cwiseAbs().maxCoeff() == 0.0);
  CHECK(top.bias == doctest::Approx(y.mean()).epsilon(1e-12));

  // at a knot: exactly that knot's (de-standardised) weights
  const PathKnot& knot = path.knots[1];
  const LinearModel at_knot = lasso_at(path, knot.lambda);
  for (long j = 0; j < x.cols(); ++j) {
    const double sd = path.standardization.std(j);
    const double expect = sd > 0.0 ? knot.weights(j) / sd : 0.0;
    CHECK(at_knot.weights(j) == doctest::Approx(expect).epsilon(1e-12));
  }

  // midway: componentwise midpoint of the de-standardised weights
  const double hi = path.knots[1].lambda;
  const double lo = path.knots[2].lambda;
  const LinearModel mid = lasso_at(path, (hi + lo) / 2.0);
  const LinearModel a = lasso_at(path, hi);
  const LinearModel b = lasso_at(path, lo);
  for (long j = 0; j < x.cols(); ++j) {
    CHECK(mid.weights(j) == doctest::Approx((a.weights(j) + b.weights(j)) / 2.0)
                                .epsilon(1e-9));
  }
}

TEST_CASE("zero-variance columns never enter the path") {
  Rng rng(51);
  Eigen::MatrixXd x = random_matrix(20, 4, rng);
  x.col(2).setConstant(3.0);
  Eigen::VectorXd y = random_vector(20, rng);
  const RegularizationPath path = lars_lasso_path(x, y, 300, 900);
  for (const PathKnot& knot : path.knots) {
    CHECK(knot.weights(2) == 0.0);
    CHECK(std::find(knot.active.begin(), knot.active.end(), 2) == knot.active.end());
  }
}

TEST_CASE("non-finite inputs are rejected") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, 3, 4, 5, std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  CHECK_THROWS_AS(lars_lasso_path(x, y, 300, 900), std::runtime_error);
  CHECK_THROWS_AS(lars_lasso_path(Eigen::MatrixXd::Zero(3, 2), y, 0, 900),
                  std::invalid_argument);
}

TEST_CASE("compute_lambdas") {
  Rng rng(61);
  const Eigen::MatrixXd x = random_matrix(18, 5, rng);
  Eigen::VectorXd y = random_vector(18, rng);
  y += x.col(0);

  // no resamples: exactly the full-data knot lambdas
  const RegularizationPath path = lars_lasso_path(x, y, 300, 900);
  const std::vector<double> base = compute_lambdas(x, y, 0, 7);
  REQUIRE(base.size() == path.knots.size());
  for (size_t k = 0; k < base.size(); ++k) {
    CHECK(base[k] == doctest::Approx(path.knots[k].lambda).epsilon(1e-12));
  }

  // deterministic under a fixed seed
  CHECK(compute_lambdas(x, y, 3, 7) == compute_lambdas(x, y, 3, 7));

  // resampled grid contains every full-data knot
  const std::vector<double> grid = compute_lambdas(x, y, 3, 7);
  CHECK(grid.size() >= base.size());
  CHECK(std::is_sorted(grid.begin(), grid.end(), std::greater<>()));
  for (double b : base) {
    bool found = false;
    for (double g : grid) {
      if (std::abs(g - b) <= 1e-9 * std::max(1.0, std::abs(b))) found = true;
    }
    CHECK(found);
  }
}
