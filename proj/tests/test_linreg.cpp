#include <doctest.h>

#include <Eigen/Dense>

#include "nowcaster/linreg.hpp"
#include "nowcaster/rng.hpp"

using namespace nowcaster;

namespace {

Eigen::MatrixXd random_matrix(long rows, long cols, Rng& rng) {
  Eigen::MatrixXd x(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) x(r, c) = rng.normal();
  }
  return x;
}

Eigen::VectorXd random_vector(long n, Rng& rng) {
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) y(i) = rng.normal();
  return y;
}

}  // namespace

TEST_CASE("ols identity design returns y") {
  Rng rng(1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(5, 5);
  const Eigen::VectorXd y = random_vector(5, rng);
  const LinearModel m = ols_fit(x, y, false);
  CHECK((m.weights - y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.bias == 0.0);
}

TEST_CASE("ols recovers an exact linear relationship") {
  Rng rng(2);
  Eigen::MatrixXd x = random_matrix(30, 1, rng);
  Eigen::VectorXd y = 2.0 * x.col(0).array() + 3.0;
  const LinearModel m = ols_fit(x, y, true);
  CHECK(m.weights(0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(m.bias == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("ols handles rank-deficient duplicate columns") {
  Rng rng(3);
  Eigen::MatrixXd base = random_matrix(20, 2, rng);
  Eigen::MatrixXd dup(20, 3);
  dup << base, base.col(1);
  const Eigen::VectorXd y = random_vector(20, rng);

  const LinearModel full = ols_fit(base, y, true);
  const LinearModel deficient = ols_fit(dup, y, true);
  const double r_full = (full.predict_rows(base) - y).norm();
  const double r_def = (deficient.predict_rows(dup) - y).norm();
  CHECK(r_def == doctest::Approx(r_full).epsilon(1e-8));
}

TEST_CASE("ols residual is orthogonal to the design") {
  Rng rng(4);
  const Eigen::MatrixXd x = random_matrix(25, 4, rng);
  const Eigen::VectorXd y = random_vector(25, rng);
  const LinearModel m = ols_fit(x, y, true);
  const Eigen::VectorXd resid = y - m.predict_rows(x);
  for (long j = 0; j < x.cols(); ++j) {
    CHECK(std::abs(x.col(j).dot(resid)) < 1e-8);
  }
  CHECK(std::abs(resid.sum()) < 1e-8);  // intercept column
}

TEST_CASE("ols rejects empty data") {
  CHECK_THROWS_AS(ols_fit(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), true),
                  std::invalid_argument);
}

TEST_CASE("ridge reduces to ols at lambda 0") {
  Rng rng(5);
  const Eigen::MatrixXd x = random_matrix(15, 3, rng);
  const Eigen::VectorXd y = random_vector(15, rng);
  const LinearModel a = ridge_fit(x, y, 0.0);
  const LinearModel b = ols_fit(x, y, true);
  CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(a.bias == doctest::Approx(b.bias).epsilon(1e-10));
}

TEST_CASE("ridge shrinks weights to zero and bias to the mean") {
  Rng rng(6);
  Eigen::MatrixXd x = random_matrix(20, 3, rng);
  x.rowwise() -= x.colwise().mean();  // centred features
  const Eigen::VectorXd y = random_vector(20, rng);
  const LinearModel m = ridge_fit(x, y, 1e9);
  CHECK(m.weights.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(m.bias == doctest::Approx(y.mean()).epsilon(1e-6));
}

TEST_CASE("ridge matches the direct closed form") {
  Rng rng(7);
  const Eigen::MatrixXd x = random_matrix(12, 3, rng);
  const Eigen::VectorXd y = random_vector(12, rng);
  const double lambda = 0.7;

  Eigen::MatrixXd xa(12, 4);
  xa.col(0).setOnes();
  xa.rightCols(3) = x;
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(4, 4);
  c(0, 0) = 0.0;
  const Eigen::VectorXd w = (xa.transpose() * xa + lambda * c).inverse() *
                            xa.transpose() * y;

  const LinearModel m = ridge_fit(x, y, lambda);
  CHECK(std::abs(m.bias - w(0)) < 1e-10);
  CHECK((m.weights - w.tail(3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ridge weight norm is non-increasing in lambda") {
  Rng rng(8);
  const Eigen::MatrixXd x = random_matrix(18, 4, rng);
  const Eigen::VectorXd y = random_vector(18, rng);
  double previous = ridge_fit(x, y, 0.0).weights.norm();
  for (double lambda : {0.1, 1.0, 10.0, 100.0}) {
    const double current = ridge_fit(x, y, lambda).weights.norm();
    CHECK(current <= previous + 1e-12);
    previous = current;
  }
  CHECK_THROWS_AS(ridge_fit(x, y, -1.0), std::invalid_argument);
}
