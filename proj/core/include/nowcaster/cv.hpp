#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nowcaster/bolasso.hpp"
#include "nowcaster/cart.hpp"
#include "nowcaster/series.hpp"
#include "nowcaster/vsm.hpp"

namespace nowcaster {

enum class Learner { Bolasso, CartEnsemble, Baseline };
enum class HybridMode { None, H, HII, UB };

Learner parse_learner(const std::string& name);
HybridMode parse_hybrid(const std::string& name);

// Contiguous folds over (optionally permuted) interval indices. The
// held-out fold of each round is split into a validation first half
// (ceil(len/2) intervals) and a test second half.
struct FoldPlan {
  size_t n_folds = 0;
  std::vector<size_t> order;  // permutation of interval indices
  bool permuted = false;
  uint64_t permutation_seed = 0;

  std::vector<size_t> fold_intervals(size_t fold) const;
};

FoldPlan make_fold_plan(size_t n_intervals, size_t n_folds);

// Random permutation of the interval (day) indices; the same permuted order
// applies to every region's rows.
FoldPlan permute_days(size_t n_intervals, size_t n_folds, uint64_t seed);

struct CvConfig {
  Learner learner = Learner::Bolasso;
  HybridMode hybrid = HybridMode::None;
  BolassoConfig bolasso;
  long baseline_k = 300;
  TreeParams tree_params;
  long tree_bootstraps = 150;
  uint64_t seed = 0;
  int jobs = 1;
};

struct CvRoundRow {
  std::string interval;
  std::string region;
  double actual = 0.0;
  double inferred = 0.0;  // negative-thresholded
};

struct CvRound {
  size_t round = 0;
  size_t held_out_fold = 0;
  double ct = -1.0;
  double ct2 = -1.0;
  long tree_count = -1;  // cart learner only
  std::vector<std::string> selected_features;
  std::map<std::string, double> rmse_per_location;
  double pooled_rmse = 0.0;
  std::vector<CvRoundRow> rows;
};

struct CvReport {
  std::vector<CvRound> rounds;
  double mean_pooled_rmse = 0.0;
  std::map<std::string, double> mean_rmse_per_location;
};

// Full cross-validation protocol: per round, train on the other folds,
// choose CT/lambda (or tree count) on the validation half, evaluate on the
// test half with negative thresholding. `b` is required for the H/H_II
// hybrids and for UB. Matrices must carry attached targets.
CvReport run_cv(const ScoreMatrix& u, const ScoreMatrix* b, const FoldPlan& plan,
                const CvConfig& cfg);

void save_cv_report_json(const CvReport& report, const std::string& path);
void save_cv_rounds_csv(const CvReport& report, const std::string& path);

}  // namespace nowcaster
