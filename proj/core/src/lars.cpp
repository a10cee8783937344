#include "nowcaster/lars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nowcaster/rng.hpp"

namespace nowcaster {

namespace {

constexpr double kTiny = 1e-12;

// Grows the Cholesky factor of Xa' Xa as columns join the active set.
class ActiveGram {
 public:
  explicit ActiveGram(const Eigen::MatrixXd& x) : x_(x) {}

  // false when the new column is numerically collinear with the active set
  bool append(long col) {
    const long k = static_cast<long>(cols_.size());
    Eigen::VectorXd g(k + 1);
    for (long i = 0; i < k; ++i) g(i) = x_.col(cols_[static_cast<size_t>(i)]).dot(x_.col(col));
    g(k) = x_.col(col).squaredNorm();

    Eigen::VectorXd l(k);
    if (k > 0) {
      l = chol_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solve(g.head(k));
    }
    const double diag2 = g(k) - l.squaredNorm();
    if (diag2 <= kTiny) return false;

    if (chol_.rows() <= k) {
      Eigen::MatrixXd bigger = Eigen::MatrixXd::Zero(2 * k + 2, 2 * k + 2);
      bigger.topLeftCorner(chol_.rows(), chol_.cols()) = chol_;
      chol_ = std::move(bigger);
    }
    chol_.block(k, 0, 1, k) = l.transpose();
    chol_(k, k) = std::sqrt(diag2);
    cols_.push_back(col);
    return true;
  }

  void remove(long col) {
    const auto it = std::find(cols_.begin(), cols_.end(), col);
    cols_.erase(it);
    refactor();
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    const long k = static_cast<long>(cols_.size());
    Eigen::VectorXd tmp =
        chol_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solve(rhs);
    return chol_.topLeftCorner(k, k)
        .transpose()
        .triangularView<Eigen::Upper>()
        .solve(tmp);
  }

  const std::vector<long>& cols() const { return cols_; }

 private:
  void refactor() {
    const long k = static_cast<long>(cols_.size());
    Eigen::MatrixXd gram(k, k);
    for (long i = 0; i < k; ++i) {
      for (long j = 0; j <= i; ++j) {
        gram(i, j) = x_.col(cols_[static_cast<size_t>(i)])
                         .dot(x_.col(cols_[static_cast<size_t>(j)]));
        gram(j, i) = gram(i, j);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    chol_ = Eigen::MatrixXd::Zero(k, k);
    chol_ = llt.matrixL();
  }

  const Eigen::MatrixXd& x_;
  std::vector<long> cols_;
  Eigen::MatrixXd chol_;
};

std::vector<long> sorted_active(const std::vector<long>& active) {
  std::vector<long> out = active;
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

RegularizationPath lars_lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   long max_features, long max_iters) {
  if (max_features < 1) throw std::invalid_argument("lars: max_features must be >= 1");
  if (x.rows() != y.size()) throw std::invalid_argument("lars: row mismatch");
  if (!x.allFinite() || !y.allFinite()) {
    throw std::runtime_error("lars: non-finite values in input");
  }

  const long n_rows = x.rows();
  const long n_cols = x.cols();

  RegularizationPath path;
  auto& std_info = path.standardization;
  std_info.mean = Eigen::VectorXd::Zero(n_cols);
  std_info.std = Eigen::VectorXd::Zero(n_cols);
  std_info.y_mean = n_rows > 0 ? y.mean() : 0.0;

  // zero-variance columns keep std 0 and never enter the path
  Eigen::MatrixXd xs = Eigen::MatrixXd::Zero(n_rows, n_cols);
  std::vector<bool> usable(static_cast<size_t>(n_cols), false);
  long usable_count = 0;
  for (long j = 0; j < n_cols; ++j) {
    const double mu = x.col(j).mean();
    const double var = (x.col(j).array() - mu).square().sum() / static_cast<double>(n_rows);
    std_info.mean(j) = mu;
    if (var > 0.0) {
      const double sd = std::sqrt(var);
      std_info.std(j) = sd;
      xs.col(j) = (x.col(j).array() - mu) / sd;
      usable[static_cast<size_t>(j)] = true;
      ++usable_count;
    }
  }

  const Eigen::VectorXd yc = y.array() - std_info.y_mean;
  Eigen::VectorXd corr = xs.transpose() * yc;

  double big_c = 0.0;
  for (long j = 0; j < n_cols; ++j) {
    if (usable[static_cast<size_t>(j)]) big_c = std::max(big_c, std::abs(corr(j)));
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n_cols);
  if (n_rows < 2 || usable_count == 0 || big_c <= kTiny) {
    path.knots.push_back({0.0, w, {}});
    return path;
  }

  // entry cap: all predictors, N-1 steps, or max_features, whichever first
  const long entry_cap = std::min({usable_count, n_rows - 1, max_features});

  ActiveGram gram(xs);
  std::vector<bool> in_active(static_cast<size_t>(n_cols), false);
  std::vector<bool> excluded(static_cast<size_t>(n_cols), false);

  auto best_candidate = [&]() -> long {
    long best = -1;
    double best_corr = -1.0;
    for (long j = 0; j < n_cols; ++j) {
      const size_t js = static_cast<size_t>(j);
      if (!usable[js] || in_active[js] || excluded[js]) continue;
      const double a = std::abs(corr(j));
      if (a > best_corr * (1.0 + kTiny)) {
        best_corr = a;
        best = j;
      }
    }
    return best;
  };

  // lowest-index candidate whose correlation ties the current maximum
  auto tied_candidate = [&]() -> long {
    for (long j = 0; j < n_cols; ++j) {
      const size_t js = static_cast<size_t>(j);
      if (!usable[js] || in_active[js] || excluded[js]) continue;
      if (std::abs(corr(j)) >= big_c * (1.0 - kTiny)) return j;
    }
    return -1;
  };

  // ties enter one at a time, lowest index first, each with its own knot
  auto absorb_ties = [&](long cap) {
    while (static_cast<long>(gram.cols().size()) < cap) {
      const long j = tied_candidate();
      if (j < 0) break;
      if (!gram.append(j)) {
        excluded[static_cast<size_t>(j)] = true;
        continue;
      }
      in_active[static_cast<size_t>(j)] = true;
      path.knots.push_back({big_c, w, sorted_active(gram.cols())});
    }
  };

  // first knot: everything zero above the largest correlation
  const long first = best_candidate();
  if (!gram.append(first)) {
    path.knots.push_back({0.0, w, {}});
    return path;
  }
  in_active[static_cast<size_t>(first)] = true;
  path.knots.push_back({big_c, w, {first}});
  absorb_ties(entry_cap);

  long iters = 0;
  while (iters++ < max_iters) {
    const auto& active = gram.cols();
    const long k = static_cast<long>(active.size());

    Eigen::VectorXd sign_a(k);
    for (long i = 0; i < k; ++i) {
      const double c = corr(active[static_cast<size_t>(i)]);
      sign_a(i) = c >= 0.0 ? 1.0 : -1.0;
    }
    const Eigen::VectorXd dir = gram.solve(sign_a);

    // drift of each column's correlation per unit decrease of lambda
    Eigen::VectorXd drift = Eigen::VectorXd::Zero(n_cols);
    {
      Eigen::VectorXd xd = Eigen::VectorXd::Zero(n_rows);
      for (long i = 0; i < k; ++i) {
        xd += dir(i) * xs.col(active[static_cast<size_t>(i)]);
      }
      drift = xs.transpose() * xd;
    }

    const bool entries_allowed = k < entry_cap;
    double gamma_entry = std::numeric_limits<double>::infinity();
    long entry_col = -1;
    if (entries_allowed) {
      for (long j = 0; j < n_cols; ++j) {
        const size_t js = static_cast<size_t>(j);
        if (!usable[js] || in_active[js] || excluded[js]) continue;
        const double cj = corr(j);
        const double aj = drift(j);
        for (const double g : {(big_c - cj) / (1.0 - aj), (big_c + cj) / (1.0 + aj)}) {
          if (std::isfinite(g) && g > kTiny && g < gamma_entry * (1.0 - kTiny)) {
            gamma_entry = g;
            entry_col = j;
          }
        }
      }
    }

    double gamma_drop = std::numeric_limits<double>::infinity();
    long drop_col = -1;
    for (long i = 0; i < k; ++i) {
      const long col = active[static_cast<size_t>(i)];
      if (dir(i) == 0.0) continue;
      const double g = -w(col) / dir(i);
      if (g > kTiny && g < gamma_drop * (1.0 - kTiny)) {
        gamma_drop = g;
        drop_col = col;
      }
    }

    const double gamma_full = big_c;  // active correlations reach zero
    double gamma = std::min({gamma_entry, gamma_drop, gamma_full});

    // advance weights and correlations
    for (long i = 0; i < k; ++i) {
      w(active[static_cast<size_t>(i)]) += gamma * dir(i);
    }
    corr -= gamma * drift;
    big_c -= gamma;
    // active correlations share magnitude big_c exactly; pin them to kill
    // accumulated round-off along long paths
    for (long i = 0; i < k; ++i) {
      corr(active[static_cast<size_t>(i)]) = sign_a(i) * big_c;
    }

    if (gamma == gamma_drop) {
      w(drop_col) = 0.0;  // exact zero at the crossing
      gram.remove(drop_col);
      in_active[static_cast<size_t>(drop_col)] = false;
      path.knots.push_back({big_c, w, sorted_active(gram.cols())});
      if (gram.cols().empty()) {
        const long next = best_candidate();
        if (next < 0 || big_c <= kTiny) break;
        if (!gram.append(next)) break;
        in_active[static_cast<size_t>(next)] = true;
        path.knots.back().active = sorted_active(gram.cols());
      }
      absorb_ties(entry_cap);
      continue;
    }
    if (gamma == gamma_entry) {
      if (!gram.append(entry_col)) {
        excluded[static_cast<size_t>(entry_col)] = true;  // collinear with active set
        continue;
      }
      in_active[static_cast<size_t>(entry_col)] = true;
      path.knots.push_back({big_c, w, sorted_active(gram.cols())});
      absorb_ties(entry_cap);
      continue;
    }
    // gamma_full: unregularised solution on the active set
    path.knots.push_back({0.0, w, sorted_active(gram.cols())});
    break;
  }

  return path;
}

Eigen::VectorXd lasso_weights_std(const RegularizationPath& path, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lasso_at: lambda must be >= 0");
  const auto& knots = path.knots;
  const long n = knots.front().weights.size();
  if (knots.size() == 1 || lambda >= knots.front().lambda) {
    return lambda >= knots.front().lambda ? Eigen::VectorXd::Zero(n)
                                          : knots.front().weights;
  }
  if (lambda <= knots.back().lambda) return knots.back().weights;
  for (size_t k = 0; k + 1 < knots.size(); ++k) {
    const double hi = knots[k].lambda;
    const double lo = knots[k + 1].lambda;
    if (lambda <= hi && lambda >= lo) {
      if (hi == lo) return knots[k + 1].weights;
      const double t = (hi - lambda) / (hi - lo);
      return (1.0 - t) * knots[k].weights + t * knots[k + 1].weights;
    }
  }
  return knots.back().weights;
}

LinearModel lasso_at(const RegularizationPath& path, double lambda) {
  const Eigen::VectorXd ws = lasso_weights_std(path, lambda);
  const auto& st = path.standardization;
  LinearModel model;
  model.weights = Eigen::VectorXd::Zero(ws.size());
  double bias = st.y_mean;
  for (long j = 0; j < ws.size(); ++j) {
    if (st.std(j) > 0.0 && ws(j) != 0.0) {
      model.weights(j) = ws(j) / st.std(j);
      bias -= model.weights(j) * st.mean(j);
    }
  }
  model.bias = bias;
  return model;
}

std::vector<double> compute_lambdas(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    int resample_runs, uint64_t seed, long max_features,
                                    long max_iters) {
  if (resample_runs < 0) throw std::invalid_argument("compute_lambdas: negative runs");
  std::vector<double> lambdas;
  auto collect = [&](const RegularizationPath& p) {
    for (const PathKnot& knot : p.knots) lambdas.push_back(knot.lambda);
  };
  collect(lars_lasso_path(x, y, max_features, max_iters));

  const long m = x.rows();
  for (int run = 0; run < resample_runs; ++run) {
    Rng rng(derive_seed(seed, seed_domain::kLambdaResample, static_cast<uint64_t>(run)));
    Eigen::MatrixXd xs(m, x.cols());
    Eigen::VectorXd ys(m);
    for (long r = 0; r < m; ++r) {
      const long pick = static_cast<long>(rng.next_below(static_cast<uint64_t>(m)));
      xs.row(r) = x.row(pick);
      ys(r) = y(pick);
    }
    collect(lars_lasso_path(xs, ys, max_features, max_iters));
  }

  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  std::vector<double> dedup;
  for (double v : lambdas) {
    if (dedup.empty() || std::abs(dedup.back() - v) > 1e-9 * std::max(1.0, std::abs(v))) {
      dedup.push_back(v);
    }
  }
  return dedup;
}

}  // namespace nowcaster
