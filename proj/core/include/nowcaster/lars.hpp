#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nowcaster/linreg.hpp"

namespace nowcaster {

// One event on the piecewise-linear LASSO path. `weights` are in the
// standardised feature space; `active` is the set in effect on the segment
// just below this lambda (a feature enters with weight exactly 0 and is
// dropped at the knot where its weight reaches 0).
struct PathKnot {
  double lambda = 0.0;
  Eigen::VectorXd weights;
  std::vector<long> active;
};

struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // population sigma; 0 marks an excluded column
  double y_mean = 0.0;
};

// Full LASSO regularisation path: lambdas strictly decreasing, active sets
// changing by exactly one feature between consecutive knots.
struct RegularizationPath {
  std::vector<PathKnot> knots;
  Standardization standardization;

  double lambda_max() const { return knots.empty() ? 0.0 : knots.front().lambda; }
};

// Least Angle Regression with the LASSO modification. Standardises the
// columns internally (zero-variance columns are excluded with weight 0) and
// terminates when all predictors have entered, N-1 steps are reached,
// max_features are active, or max_iters iterations are done.
RegularizationPath lars_lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   long max_features, long max_iters);

// Solution at an arbitrary lambda by linear interpolation between knots,
// de-standardised back to the original feature scale.
LinearModel lasso_at(const RegularizationPath& path, double lambda);

// Standardised-space weights at lambda (no de-standardisation); used where
// only the sparsity pattern matters.
Eigen::VectorXd lasso_weights_std(const RegularizationPath& path, double lambda);

// Union of knot lambdas from a full-data run plus `resample_runs` runs on
// uniform-with-replacement row samples; deduplicated within a relative
// tolerance of 1e-9 and sorted descending.
std::vector<double> compute_lambdas(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    int resample_runs, uint64_t seed,
                                    long max_features = 300, long max_iters = 900);

}  // namespace nowcaster
