#include "nowcaster/cv.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nowcaster/io.hpp"
#include "nowcaster/rng.hpp"

namespace nowcaster {

namespace {
constexpr uint64_t kCvRoundDomain = 7;
constexpr uint64_t kCvClassDomain = 8;
}

Learner parse_learner(const std::string& name) {
  if (name == "bolasso") return Learner::Bolasso;
  if (name == "cart") return Learner::CartEnsemble;
  if (name == "baseline") return Learner::Baseline;
  throw std::invalid_argument("unknown learner: " + name);
}

HybridMode parse_hybrid(const std::string& name) {
  if (name == "none") return HybridMode::None;
  if (name == "H") return HybridMode::H;
  if (name == "H_II") return HybridMode::HII;
  if (name == "UB") return HybridMode::UB;
  throw std::invalid_argument("unknown hybrid mode: " + name);
}

std::vector<size_t> FoldPlan::fold_intervals(size_t fold) const {
  const size_t n = order.size();
  const size_t lo = n * fold / n_folds;
  const size_t hi = n * (fold + 1) / n_folds;
  return {order.begin() + static_cast<long>(lo), order.begin() + static_cast<long>(hi)};
}

FoldPlan make_fold_plan(size_t n_intervals, size_t n_folds) {
  if (n_folds < 2 || n_intervals < 2 * n_folds) {
    throw std::invalid_argument("fold plan needs >= 2 folds and >= 2 intervals per fold");
  }
  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.order.resize(n_intervals);
  std::iota(plan.order.begin(), plan.order.end(), 0);
  return plan;
}

FoldPlan permute_days(size_t n_intervals, size_t n_folds, uint64_t seed) {
  FoldPlan plan = make_fold_plan(n_intervals, n_folds);
  Rng rng(derive_seed(seed, seed_domain::kPermutation, 0));
  rng.shuffle(plan.order);
  plan.permuted = true;
  plan.permutation_seed = seed;
  return plan;
}

namespace {

std::vector<std::string> interval_labels(const ScoreMatrix& m) {
  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (const std::string& label : m.row_interval) {
    if (seen.insert(label).second) labels.push_back(label);
  }
  return labels;
}

std::vector<long> rows_for_intervals(const ScoreMatrix& m,
                                     const std::set<std::string>& wanted) {
  std::vector<long> rows;
  for (long r = 0; r < m.rows(); ++r) {
    if (wanted.contains(m.row_interval[static_cast<size_t>(r)])) rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<long>& rows) {
  Eigen::MatrixXd out(static_cast<long>(rows.size()), x.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<long>(i)) = x.row(rows[i]);
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, const std::vector<long>& rows) {
  Eigen::VectorXd out(static_cast<long>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) out(static_cast<long>(i)) = y(rows[i]);
  return out;
}

Eigen::VectorXd predict_selection(const SelectionResult& sel, const Eigen::MatrixXd& x) {
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(x.rows(), sel.model.bias);
  for (size_t i = 0; i < sel.features.size(); ++i) {
    pred += sel.model.weights(static_cast<long>(i)) * x.col(sel.features[i]);
  }
  return pred;
}

}  // namespace

CvReport run_cv(const ScoreMatrix& u, const ScoreMatrix* b, const FoldPlan& plan,
                const CvConfig& cfg) {
  if (!u.has_target()) throw std::invalid_argument("run_cv: matrix needs a target");
  const bool needs_b = cfg.hybrid == HybridMode::H || cfg.hybrid == HybridMode::HII ||
                       cfg.hybrid == HybridMode::UB;
  if (needs_b && (!b || !b->has_target())) {
    throw std::invalid_argument("run_cv: hybrid modes need the 2-gram matrix");
  }
  if (cfg.learner != Learner::Bolasso &&
      (cfg.hybrid == HybridMode::H || cfg.hybrid == HybridMode::HII)) {
    throw std::invalid_argument("run_cv: H/H_II hybrids require the bolasso learner");
  }

  const std::vector<std::string> labels = interval_labels(u);
  if (plan.order.size() != labels.size()) {
    throw std::invalid_argument("run_cv: plan does not cover all intervals");
  }

  // UB concatenation happens once, then behaves like a single class
  ScoreMatrix ub;
  const ScoreMatrix* primary = &u;
  if (cfg.hybrid == HybridMode::UB) {
    ub = union_class_UB(u, *b);
    primary = &ub;
  }

  CvReport report;
  std::map<std::string, std::vector<double>> location_rmses;

  for (size_t round = 0; round < plan.n_folds; ++round) {
    const size_t held = round;
    const std::vector<size_t> held_intervals = plan.fold_intervals(held);
    const size_t val_len = (held_intervals.size() + 1) / 2;

    std::set<std::string> train_set, val_set, test_set;
    for (size_t f = 0; f < plan.n_folds; ++f) {
      if (f == held) continue;
      for (size_t idx : plan.fold_intervals(f)) train_set.insert(labels[idx]);
    }
    for (size_t i = 0; i < held_intervals.size(); ++i) {
      (i < val_len ? val_set : test_set).insert(labels[held_intervals[i]]);
    }
    if (test_set.empty()) throw std::invalid_argument("run_cv: empty test half");

    const uint64_t round_seed = derive_seed(cfg.seed, kCvRoundDomain, round);

    CvRound out;
    out.round = round;
    out.held_out_fold = held;

    const std::vector<long> train_rows = rows_for_intervals(*primary, train_set);
    const std::vector<long> val_rows = rows_for_intervals(*primary, val_set);
    const std::vector<long> test_rows = rows_for_intervals(*primary, test_set);

    Eigen::VectorXd test_pred;
    const Eigen::VectorXd test_actual = take_rows(primary->y, test_rows);

    if (cfg.learner == Learner::CartEnsemble) {
      TreeEnsemble ensemble = fit_bagged_ensemble(
          take_rows(primary->x, train_rows), take_rows(primary->y, train_rows),
          cfg.tree_bootstraps, cfg.tree_params, round_seed, cfg.jobs);
      ensemble.active_count = select_tree_count(ensemble, take_rows(primary->x, val_rows),
                                                take_rows(primary->y, val_rows));
      out.tree_count = ensemble.active_count;
      const Eigen::MatrixXd test_x = take_rows(primary->x, test_rows);
      test_pred.resize(test_x.rows());
      for (long r = 0; r < test_x.rows(); ++r) {
        test_pred(r) = ensemble_predict(ensemble, test_x.row(r).transpose());
      }
    } else if (cfg.learner == Learner::Baseline ||
               (cfg.learner == Learner::Bolasso &&
                (cfg.hybrid == HybridMode::None || cfg.hybrid == HybridMode::UB))) {
      SelectionResult sel;
      std::vector<std::string> names;
      for (const NGram& g : primary->vocab.entries) names.push_back(g.text());
      if (cfg.learner == Learner::Baseline) {
        sel = baseline_correlation_select(
            take_rows(primary->x, train_rows), take_rows(primary->y, train_rows),
            take_rows(primary->x, val_rows), take_rows(primary->y, val_rows),
            cfg.baseline_k, names);
      } else {
        BolassoConfig bc = cfg.bolasso;
        bc.seed = round_seed;
        bc.jobs = cfg.jobs;
        sel = soft_bolasso(take_rows(primary->x, train_rows),
                           take_rows(primary->y, train_rows),
                           take_rows(primary->x, val_rows), take_rows(primary->y, val_rows),
                           bc, names)
                  .best;
      }
      out.ct = sel.ct;
      out.selected_features = sel.model.feature_names;
      test_pred = predict_selection(sel, take_rows(primary->x, test_rows));
    } else {
      // bolasso with the H or H_II combiner
      std::vector<std::string> names_u, names_b;
      for (const NGram& g : u.vocab.entries) names_u.push_back(g.text());
      for (const NGram& g : b->vocab.entries) names_b.push_back(g.text());

      BolassoConfig bu = cfg.bolasso;
      bu.seed = derive_seed(round_seed, kCvClassDomain, 0);
      bu.jobs = cfg.jobs;
      BolassoConfig bb = cfg.bolasso;
      bb.seed = derive_seed(round_seed, kCvClassDomain, 1);
      bb.jobs = cfg.jobs;

      const std::vector<long> train_rows_b = rows_for_intervals(*b, train_set);
      const std::vector<long> val_rows_b = rows_for_intervals(*b, val_set);
      const std::vector<long> test_rows_b = rows_for_intervals(*b, test_set);

      const Eigen::MatrixXd train_u = take_rows(u.x, train_rows);
      const Eigen::VectorXd train_y = take_rows(u.y, train_rows);
      const Eigen::MatrixXd val_u = take_rows(u.x, val_rows);
      const Eigen::VectorXd val_y = take_rows(u.y, val_rows);
      const Eigen::MatrixXd train_b = take_rows(b->x, train_rows_b);
      const Eigen::MatrixXd val_b = take_rows(b->x, val_rows_b);

      const BolassoRun run_u = soft_bolasso(train_u, train_y, val_u, val_y, bu, names_u);
      const BolassoRun run_b = soft_bolasso(train_b, train_y, val_b, val_y, bb, names_b);

      SelectionResult sel;
      if (cfg.hybrid == HybridMode::H) {
        sel = hybrid_H(run_u.per_ct, run_b.per_ct, train_u, train_b, train_y, val_u,
                       val_b, val_y, cfg.bolasso.ct_grid, names_u, names_b);
      } else {
        sel = hybrid_HII(run_u.per_ct, run_b.per_ct, train_u, train_b, train_y, val_u,
                         val_b, val_y, cfg.bolasso.ct_grid, names_u, names_b);
      }
      out.ct = sel.ct;
      out.ct2 = sel.ct2;
      out.selected_features = sel.model.feature_names;

      Eigen::MatrixXd test_all(test_rows.size(), u.cols() + b->cols());
      test_all << take_rows(u.x, test_rows), take_rows(b->x, test_rows_b);
      test_pred = predict_selection(sel, test_all);
    }

    // negative thresholding applies only in the testing phase
    std::vector<double> pred(test_pred.data(), test_pred.data() + test_pred.size());
    pred = threshold_negative(pred);

    std::map<std::string, std::vector<double>> by_loc_pred, by_loc_actual;
    for (size_t i = 0; i < test_rows.size(); ++i) {
      const size_t r = static_cast<size_t>(test_rows[i]);
      std::string loc = primary->row_location[r];
      if (loc.empty()) loc = "all";
      by_loc_pred[loc].push_back(pred[i]);
      by_loc_actual[loc].push_back(test_actual(static_cast<long>(i)));
      out.rows.push_back({primary->row_interval[r], loc, test_actual(static_cast<long>(i)),
                          pred[i]});
    }
    std::vector<double> actual_all(test_actual.data(),
                                   test_actual.data() + test_actual.size());
    out.pooled_rmse = rmse(pred, actual_all);
    for (const auto& [loc, preds] : by_loc_pred) {
      out.rmse_per_location[loc] = rmse(preds, by_loc_actual[loc]);
      location_rmses[loc].push_back(out.rmse_per_location[loc]);
    }
    report.rounds.push_back(std::move(out));
  }

  double total = 0.0;
  for (const CvRound& round : report.rounds) total += round.pooled_rmse;
  report.mean_pooled_rmse = total / static_cast<double>(report.rounds.size());
  for (const auto& [loc, values] : location_rmses) {
    double sum = 0.0;
    for (double v : values) sum += v;
    report.mean_rmse_per_location[loc] = sum / static_cast<double>(values.size());
  }
  return report;
}

void save_cv_report_json(const CvReport& report, const std::string& path) {
  nlohmann::json j;
  nlohmann::json rounds = nlohmann::json::array();
  for (const CvRound& round : report.rounds) {
    nlohmann::json rj;
    rj["round"] = round.round;
    rj["held_out_fold"] = round.held_out_fold;
    if (round.ct >= 0.0) rj["ct"] = round.ct;
    if (round.ct2 >= 0.0) rj["ct2"] = round.ct2;
    if (round.tree_count >= 0) rj["tree_count"] = round.tree_count;
    rj["selected_features"] = round.selected_features;
    rj["pooled_rmse"] = round.pooled_rmse;
    rj["rmse_per_location"] = round.rmse_per_location;
    rounds.push_back(std::move(rj));
  }
  j["rounds"] = std::move(rounds);
  j["mean_pooled_rmse"] = report.mean_pooled_rmse;
  j["mean_rmse_per_location"] = report.mean_rmse_per_location;
  atomic_write_file(path, j.dump(2) + "\n");
}

void save_cv_rounds_csv(const CvReport& report, const std::string& path) {
  std::ostringstream out;
  out << "round,interval,region,actual,inferred\n";
  for (const CvRound& round : report.rounds) {
    for (const CvRoundRow& row : round.rows) {
      out << round.round << ',' << row.interval << ',' << row.region << ','
          << format_double(row.actual) << ',' << format_double(row.inferred) << '\n';
    }
  }
  atomic_write_file(path, out.str());
}

}  // namespace nowcaster
