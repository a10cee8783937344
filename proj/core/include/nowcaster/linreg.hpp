#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace nowcaster {

struct LinearModel {
  Eigen::VectorXd weights;  // one per feature column
  double bias = 0.0;
  std::vector<std::string> feature_names;  // may be empty when unnamed

  double predict(const Eigen::VectorXd& x) const { return weights.dot(x) + bias; }
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& x) const {
    return (x * weights).array() + bias;
  }
};

// Least-squares fit; singular systems are solved with the minimum-norm
// pseudo-inverse. with_bias adds an unpenalised intercept.
LinearModel ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool with_bias);

// Closed-form ridge fit with the intercept excluded from the penalty.
// lambda = 0 reduces to ols_fit.
LinearModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

double mse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual);

// CSV with one (feature, weight) row per feature plus a bias row.
void save_linear_model_csv(const LinearModel& model, const std::string& path);

}  // namespace nowcaster
