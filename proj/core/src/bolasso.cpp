#include "nowcaster/bolasso.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "nowcaster/io.hpp"
#include "nowcaster/lars.hpp"
#include "nowcaster/parallel.hpp"

namespace nowcaster {

namespace {
constexpr double kNonzero = 1e-10;
}

std::vector<double> default_ct_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.50 + 0.025 * i);
  return grid;
}

double SelectionResult::validation_rmse() const { return std::sqrt(validation_mse); }

void bootstrap_sample(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Rng& rng,
                      Eigen::MatrixXd& x_out, Eigen::VectorXd& y_out) {
  const long m = x.rows();
  if (m < 1) throw std::invalid_argument("bootstrap_sample: no rows");
  x_out.resize(m, x.cols());
  y_out.resize(m);
  for (long r = 0; r < m; ++r) {
    const long pick = static_cast<long>(rng.next_below(static_cast<uint64_t>(m)));
    x_out.row(r) = x.row(pick);
    y_out(r) = y(pick);
  }
}

std::vector<long> consensus_select(std::span<const long> counts, long n_bootstraps,
                                   double ct) {
  const double threshold = ct * static_cast<double>(n_bootstraps) - 1e-9;
  std::vector<long> selected;
  for (size_t j = 0; j < counts.size(); ++j) {
    if (static_cast<double>(counts[j]) >= threshold) selected.push_back(static_cast<long>(j));
  }
  return selected;
}

ConsistentRegion largest_consistent_region(
    const std::vector<double>& lambdas,
    const std::vector<std::vector<long>>& selected_sets) {
  if (lambdas.size() != selected_sets.size()) {
    throw std::invalid_argument("largest_consistent_region: size mismatch");
  }
  ConsistentRegion best;
  if (lambdas.empty()) return best;
  size_t run_start = 0;
  for (size_t i = 1; i <= lambdas.size(); ++i) {
    if (i == lambdas.size() || selected_sets[i] != selected_sets[run_start]) {
      const size_t run_len = i - run_start;
      if (run_len > best.length) {  // ties keep the earlier (larger-lambda) run
        best.length = run_len;
        best.start = run_start;
        best.features = selected_sets[run_start];
      }
      run_start = i;
    }
  }
  return best;
}

LinearModel refit_subset(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const std::vector<long>& features) {
  if (features.empty()) {
    LinearModel model;
    model.weights = Eigen::VectorXd::Zero(0);
    model.bias = y.mean();
    return model;
  }
  Eigen::MatrixXd sub(x.rows(), static_cast<long>(features.size()));
  for (size_t i = 0; i < features.size(); ++i) {
    sub.col(static_cast<long>(i)) = x.col(features[i]);
  }
  return ols_fit(sub, y, true);
}

double subset_mse(const LinearModel& model, const Eigen::MatrixXd& x,
                  const Eigen::VectorXd& y, const std::vector<long>& features) {
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(x.rows(), model.bias);
  for (size_t i = 0; i < features.size(); ++i) {
    pred += model.weights(static_cast<long>(i)) * x.col(features[i]);
  }
  return mse(pred, y);
}

namespace {

// cache key for refits of the same feature subset
std::string set_key(const std::vector<long>& features) {
  std::string key;
  for (long f : features) {
    key += std::to_string(f);
    key += ',';
  }
  return key;
}

// per-lambda choice by k-fold cross-validation over contiguous row blocks;
// ties resolved toward the larger lambda (first index)
size_t cross_validate_lambda(const std::vector<std::vector<long>>& sets_per_lambda,
                             const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             int folds) {
  const long m = x.rows();
  const int k = std::max(2, std::min<int>(folds, static_cast<int>(m)));
  std::vector<long> bounds(static_cast<size_t>(k) + 1);
  for (int f = 0; f <= k; ++f) bounds[static_cast<size_t>(f)] = m * f / k;

  std::vector<std::map<std::string, double>> fold_cache(static_cast<size_t>(k));
  double best_loss = std::numeric_limits<double>::infinity();
  size_t best_idx = 0;
  for (size_t li = 0; li < sets_per_lambda.size(); ++li) {
    const std::vector<long>& features = sets_per_lambda[li];
    const std::string key = set_key(features);
    double total = 0.0;
    for (int f = 0; f < k; ++f) {
      auto& cache = fold_cache[static_cast<size_t>(f)];
      auto it = cache.find(key);
      if (it == cache.end()) {
        const long lo = bounds[static_cast<size_t>(f)];
        const long hi = bounds[static_cast<size_t>(f) + 1];
        const long held = hi - lo;
        const long kept = m - held;
        Eigen::MatrixXd xt(kept, x.cols());
        Eigen::VectorXd yt(kept);
        xt.topRows(lo) = x.topRows(lo);
        yt.head(lo) = y.head(lo);
        xt.bottomRows(kept - lo) = x.bottomRows(m - hi);
        yt.tail(kept - lo) = y.tail(m - hi);
        const LinearModel model = refit_subset(xt, yt, features);
        const double loss =
            subset_mse(model, x.middleRows(lo, held), y.segment(lo, held), features);
        it = cache.emplace(key, loss).first;
      }
      total += it->second;
    }
    const double mean_loss = total / static_cast<double>(k);
    if (mean_loss < best_loss) {
      best_loss = mean_loss;
      best_idx = li;
    }
  }
  return best_idx;
}

}  // namespace

BolassoRun soft_bolasso(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y,
                        const Eigen::MatrixXd& val_x, const Eigen::VectorXd& val_y,
                        const BolassoConfig& cfg,
                        const std::vector<std::string>& feature_names) {
  if (train_x.rows() < 2) throw std::invalid_argument("soft_bolasso: need >= 2 rows");
  if (train_x.cols() != val_x.cols()) {
    throw std::invalid_argument("soft_bolasso: train/val vocabulary mismatch");
  }
  if (cfg.ct_grid.empty() || !std::is_sorted(cfg.ct_grid.begin(), cfg.ct_grid.end())) {
    throw std::invalid_argument("soft_bolasso: ct_grid must be ascending and non-empty");
  }
  for (double ct : cfg.ct_grid) {
    if (ct <= 0.0 || ct > 1.0) throw std::invalid_argument("soft_bolasso: CT outside (0,1]");
  }

  const long m = train_x.rows();
  const long n = train_x.cols();
  const long n_boot = cfg.bootstraps > 0
                          ? cfg.bootstraps
                          : static_cast<long>(std::ceil(0.13 * static_cast<double>(m)));

  BolassoRun run;
  run.lambdas = compute_lambdas(train_x, train_y, cfg.lambda_resample_runs, cfg.seed,
                                cfg.max_features, cfg.max_iters);
  const size_t n_lambda = run.lambdas.size();

  // per-bootstrap nonzero masks on the lambda grid
  std::vector<std::vector<uint8_t>> masks(static_cast<size_t>(n_boot));
  parallel_for(static_cast<size_t>(n_boot), cfg.jobs, [&](size_t b) {
    Rng rng(derive_seed(cfg.seed, seed_domain::kBootstrap, b));
    Eigen::MatrixXd xb;
    Eigen::VectorXd yb;
    bootstrap_sample(train_x, train_y, rng, xb, yb);
    const RegularizationPath path =
        lars_lasso_path(xb, yb, cfg.max_features, cfg.max_iters);
    std::vector<uint8_t>& mask = masks[b];
    mask.assign(n_lambda * static_cast<size_t>(n), 0);
    for (size_t li = 0; li < n_lambda; ++li) {
      const Eigen::VectorXd w = lasso_weights_std(path, run.lambdas[li]);
      for (long j = 0; j < n; ++j) {
        if (std::abs(w(j)) > kNonzero) mask[li * static_cast<size_t>(n) +
                                            static_cast<size_t>(j)] = 1;
      }
    }
  });

  std::vector<std::vector<long>> counts(n_lambda, std::vector<long>(n, 0));
  for (const auto& mask : masks) {
    for (size_t li = 0; li < n_lambda; ++li) {
      for (long j = 0; j < n; ++j) {
        counts[li][static_cast<size_t>(j)] +=
            mask[li * static_cast<size_t>(n) + static_cast<size_t>(j)];
      }
    }
  }

  run.per_ct.resize(cfg.ct_grid.size());
  for (size_t ci = 0; ci < cfg.ct_grid.size(); ++ci) {
    const double ct = cfg.ct_grid[ci];
    std::vector<std::vector<long>> sets(n_lambda);
    for (size_t li = 0; li < n_lambda; ++li) {
      sets[li] = consensus_select(counts[li], n_boot, ct);
    }

    const ConsistentRegion region = largest_consistent_region(run.lambdas, sets);
    std::vector<long> chosen = region.features;
    double chosen_lambda = run.lambdas[region.start];
    if (static_cast<double>(region.length) <
        static_cast<double>(n_lambda) * cfg.percent_lcr) {
      const size_t li = cross_validate_lambda(sets, train_x, train_y, cfg.cv_folds);
      chosen = sets[li];
      chosen_lambda = run.lambdas[li];
    }

    SelectionResult& res = run.per_ct[ci];
    res.features = std::move(chosen);
    res.lambda = chosen_lambda;
    res.ct = ct;
    res.empty_selection = res.features.empty();
    res.model = refit_subset(train_x, train_y, res.features);
    res.validation_mse = subset_mse(res.model, val_x, val_y, res.features);
    for (long f : res.features) {
      res.model.feature_names.push_back(
          f < static_cast<long>(feature_names.size())
              ? feature_names[static_cast<size_t>(f)]
              : "f" + std::to_string(f));
    }
  }

  // smallest CT wins ties (the more inclusive selection)
  size_t best = 0;
  for (size_t ci = 1; ci < run.per_ct.size(); ++ci) {
    if (run.per_ct[ci].validation_mse < run.per_ct[best].validation_mse) best = ci;
  }
  run.best = run.per_ct[best];
  if (run.best.empty_selection) {
    warn("soft_bolasso: winning CT selected no features; bias-only model returned");
  }
  return run;
}

BolassoRun soft_bolasso(const ScoreMatrix& train, const ScoreMatrix& val,
                        const BolassoConfig& cfg) {
  if (!train.has_target() || !val.has_target()) {
    throw std::invalid_argument("soft_bolasso: score matrices need attached targets");
  }
  if (train.vocab.size() != val.vocab.size()) {
    throw std::invalid_argument("soft_bolasso: train/val vocabulary mismatch");
  }
  std::vector<std::string> names;
  names.reserve(train.vocab.size());
  for (const NGram& g : train.vocab.entries) names.push_back(g.text());
  return soft_bolasso(train.x, train.y, val.x, val.y, cfg, names);
}

namespace {

SelectionResult hybrid_combine(const std::vector<SelectionResult>& sel_u,
                               const std::vector<SelectionResult>& sel_b,
                               const Eigen::MatrixXd& train_u,
                               const Eigen::MatrixXd& train_b,
                               const Eigen::VectorXd& train_y,
                               const Eigen::MatrixXd& val_u, const Eigen::MatrixXd& val_b,
                               const Eigen::VectorXd& val_y,
                               const std::vector<double>& ct_grid,
                               const std::vector<std::string>& names_u,
                               const std::vector<std::string>& names_b, bool all_pairs) {
  if (sel_u.size() != ct_grid.size() || sel_b.size() != ct_grid.size()) {
    throw std::invalid_argument("hybrid: selections must be indexed by the CT grid");
  }
  const long nu = train_u.cols();

  Eigen::MatrixXd train_all(train_u.rows(), nu + train_b.cols());
  train_all << train_u, train_b;
  Eigen::MatrixXd val_all(val_u.rows(), nu + val_b.cols());
  val_all << val_u, val_b;

  SelectionResult best;
  best.validation_mse = std::numeric_limits<double>::infinity();
  bool any = false;
  for (size_t i = 0; i < ct_grid.size(); ++i) {
    const size_t j_begin = all_pairs ? 0 : i;
    const size_t j_end = all_pairs ? ct_grid.size() : i + 1;
    for (size_t j = j_begin; j < j_end; ++j) {
      std::vector<long> features = sel_u[i].features;
      for (long f : sel_b[j].features) features.push_back(f + nu);
      const LinearModel model = refit_subset(train_all, train_y, features);
      const double loss = subset_mse(model, val_all, val_y, features);
      if (loss < best.validation_mse) {
        best.features = features;
        best.model = model;
        best.ct = ct_grid[i];
        best.ct2 = all_pairs ? ct_grid[j] : -1.0;
        best.validation_mse = loss;
        any = true;
      }
    }
  }
  if (!any) throw std::runtime_error("hybrid: no CT combination evaluated");
  best.empty_selection = best.features.empty();
  if (best.empty_selection) warn("hybrid: winning combination selected no features");
  best.model.feature_names.clear();
  for (long f : best.features) {
    if (f < nu) {
      best.model.feature_names.push_back(f < static_cast<long>(names_u.size())
                                             ? names_u[static_cast<size_t>(f)]
                                             : "u" + std::to_string(f));
    } else {
      const long fb = f - nu;
      best.model.feature_names.push_back(fb < static_cast<long>(names_b.size())
                                             ? names_b[static_cast<size_t>(fb)]
                                             : "b" + std::to_string(fb));
    }
  }
  return best;
}

}  // namespace

SelectionResult hybrid_H(const std::vector<SelectionResult>& sel_u,
                         const std::vector<SelectionResult>& sel_b,
                         const Eigen::MatrixXd& train_u, const Eigen::MatrixXd& train_b,
                         const Eigen::VectorXd& train_y, const Eigen::MatrixXd& val_u,
                         const Eigen::MatrixXd& val_b, const Eigen::VectorXd& val_y,
                         const std::vector<double>& ct_grid,
                         const std::vector<std::string>& names_u,
                         const std::vector<std::string>& names_b) {
  return hybrid_combine(sel_u, sel_b, train_u, train_b, train_y, val_u, val_b, val_y,
                        ct_grid, names_u, names_b, false);
}

SelectionResult hybrid_HII(const std::vector<SelectionResult>& sel_u,
                           const std::vector<SelectionResult>& sel_b,
                           const Eigen::MatrixXd& train_u, const Eigen::MatrixXd& train_b,
                           const Eigen::VectorXd& train_y, const Eigen::MatrixXd& val_u,
                           const Eigen::MatrixXd& val_b, const Eigen::VectorXd& val_y,
                           const std::vector<double>& ct_grid,
                           const std::vector<std::string>& names_u,
                           const std::vector<std::string>& names_b) {
  return hybrid_combine(sel_u, sel_b, train_u, train_b, train_y, val_u, val_b, val_y,
                        ct_grid, names_u, names_b, true);
}

ScoreMatrix union_class_UB(const ScoreMatrix& train_u, const ScoreMatrix& train_b) {
  if (train_u.rows() != train_b.rows()) {
    throw std::invalid_argument("union_class_UB: row count mismatch");
  }
  for (size_t r = 0; r < train_u.row_interval.size(); ++r) {
    if (train_u.row_interval[r] != train_b.row_interval[r] ||
        train_u.row_location[r] != train_b.row_location[r]) {
      throw std::invalid_argument("union_class_UB: row order mismatch");
    }
  }
  ScoreMatrix out;
  out.x.resize(train_u.rows(), train_u.cols() + train_b.cols());
  out.x << train_u.x, train_b.x;
  out.vocab.feature_class = FeatureClass::UB;
  out.vocab.stemmed = train_u.vocab.stemmed;
  out.vocab.entries = train_u.vocab.entries;
  out.vocab.entries.insert(out.vocab.entries.end(), train_b.vocab.entries.begin(),
                           train_b.vocab.entries.end());
  out.vocab.rebuild_index();
  out.row_interval = train_u.row_interval;
  out.row_location = train_u.row_location;
  out.y = train_u.y;
  return out;
}

SelectionResult baseline_correlation_select(const Eigen::MatrixXd& train_x,
                                            const Eigen::VectorXd& train_y,
                                            const Eigen::MatrixXd& val_x,
                                            const Eigen::VectorXd& val_y, long k,
                                            const std::vector<std::string>& names) {
  if (k < 1) throw std::invalid_argument("baseline_correlation_select: k must be >= 1");
  const long n = train_x.cols();

  std::vector<std::pair<double, long>> ranked;
  ranked.reserve(static_cast<size_t>(n));
  std::vector<double> ys(train_y.data(), train_y.data() + train_y.size());
  for (long j = 0; j < n; ++j) {
    std::vector<double> xs(train_x.col(j).data(), train_x.col(j).data() + train_x.rows());
    bool degenerate = false;
    const double rho = pearson_correlation(xs, ys, &degenerate);
    ranked.emplace_back(degenerate ? 0.0 : rho, j);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  const long limit = std::min(k, n);
  std::vector<long> prefix;
  SelectionResult best;
  best.validation_mse = std::numeric_limits<double>::infinity();
  for (long i = 0; i < limit; ++i) {
    prefix.push_back(ranked[static_cast<size_t>(i)].second);
    std::vector<long> sorted_prefix = prefix;
    std::sort(sorted_prefix.begin(), sorted_prefix.end());
    const LinearModel model = refit_subset(train_x, train_y, sorted_prefix);
    const double loss = subset_mse(model, val_x, val_y, sorted_prefix);
    if (loss < best.validation_mse) {
      best.features = sorted_prefix;
      best.model = model;
      best.validation_mse = loss;
    }
  }
  best.ct = -1.0;
  best.empty_selection = best.features.empty();
  best.model.feature_names.clear();
  for (long f : best.features) {
    best.model.feature_names.push_back(f < static_cast<long>(names.size())
                                           ? names[static_cast<size_t>(f)]
                                           : "f" + std::to_string(f));
  }
  return best;
}

SelectionResult baseline_correlation_select(const ScoreMatrix& train,
                                            const ScoreMatrix& val, long k) {
  if (!train.has_target() || !val.has_target()) {
    throw std::invalid_argument("baseline_correlation_select: targets required");
  }
  std::vector<std::string> names;
  for (const NGram& g : train.vocab.entries) names.push_back(g.text());
  return baseline_correlation_select(train.x, train.y, val.x, val.y, k, names);
}

void save_selection_json(const SelectionResult& result, const std::string& path) {
  nlohmann::json j;
  j["features"] = result.model.feature_names;
  std::vector<double> weights(result.model.weights.data(),
                              result.model.weights.data() + result.model.weights.size());
  j["weights"] = weights;
  j["bias"] = result.model.bias;
  j["ct"] = result.ct;
  if (result.ct2 >= 0.0) j["ct2"] = result.ct2;
  j["validation_rmse"] = result.validation_rmse();
  j["empty_selection"] = result.empty_selection;
  atomic_write_file(path, j.dump(2) + "\n");
}

}  // namespace nowcaster
