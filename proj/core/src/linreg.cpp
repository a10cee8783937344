#include "nowcaster/linreg.hpp"

#include <sstream>
#include <stdexcept>

#include "nowcaster/io.hpp"

namespace nowcaster {

LinearModel ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool with_bias) {
  if (x.rows() == 0 || x.rows() != y.size()) {
    throw std::invalid_argument("ols_fit: empty data or row mismatch");
  }
  LinearModel model;
  if (with_bias) {
    Eigen::MatrixXd xa(x.rows(), x.cols() + 1);
    xa.col(0).setOnes();
    xa.rightCols(x.cols()) = x;
    const Eigen::VectorXd w = xa.completeOrthogonalDecomposition().solve(y);
    model.bias = w(0);
    model.weights = w.tail(x.cols());
  } else {
    model.weights = x.completeOrthogonalDecomposition().solve(y);
    model.bias = 0.0;
  }
  return model;
}

LinearModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("ridge_fit: lambda must be >= 0");
  if (x.rows() == 0 || x.rows() != y.size()) {
    throw std::invalid_argument("ridge_fit: empty data or row mismatch");
  }
  if (lambda == 0.0) return ols_fit(x, y, true);

  const long n = x.cols();
  Eigen::MatrixXd xa(x.rows(), n + 1);
  xa.col(0).setOnes();
  xa.rightCols(n) = x;
  Eigen::MatrixXd gram = xa.transpose() * xa;
  for (long i = 1; i <= n; ++i) gram(i, i) += lambda;  // bias stays unpenalised
  const Eigen::VectorXd w = gram.ldlt().solve(xa.transpose() * y);

  LinearModel model;
  model.bias = w(0);
  model.weights = w.tail(n);
  return model;
}

double mse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual) {
  if (predicted.size() != actual.size() || predicted.size() == 0) {
    throw std::invalid_argument("mse: length mismatch");
  }
  return (predicted - actual).squaredNorm() / static_cast<double>(actual.size());
}

void save_linear_model_csv(const LinearModel& model, const std::string& path) {
  std::ostringstream out;
  out << "feature,weight\n";
  for (long i = 0; i < model.weights.size(); ++i) {
    const std::string name = i < static_cast<long>(model.feature_names.size())
                                 ? model.feature_names[static_cast<size_t>(i)]
                                 : "f" + std::to_string(i);
    out << name << ',' << format_double(model.weights(i)) << '\n';
  }
  out << "__bias__," << format_double(model.bias) << '\n';
  atomic_write_file(path, out.str());
}

}  // namespace nowcaster
