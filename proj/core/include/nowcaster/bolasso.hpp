#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "nowcaster/linreg.hpp"
#include "nowcaster/rng.hpp"
#include "nowcaster/stats.hpp"
#include "nowcaster/vsm.hpp"

namespace nowcaster {

std::vector<double> default_ct_grid();  // 21 values, 0.50 .. 1.00 step 0.025

struct BolassoConfig {
  std::vector<double> ct_grid = default_ct_grid();
  long bootstraps = 0;  // 0 -> ceil(0.13 * training rows)
  long max_features = 300;
  long max_iters = 900;
  double percent_lcr = 0.05;
  int cv_folds = 5;
  int lambda_resample_runs = 3;
  uint64_t seed = 0;
  int jobs = 1;
};

struct SelectionResult {
  std::vector<long> features;  // sorted ids into the source vocabulary
  LinearModel model;           // OLS refit on the selected columns
  double ct = 1.0;
  double ct2 = -1.0;    // second threshold for the H_II combiner, else -1
  double lambda = -1.0;  // chosen regularisation level, -1 when not applicable
  double validation_mse = 0.0;
  bool empty_selection = false;

  double validation_rmse() const;
};

struct BolassoRun {
  std::vector<SelectionResult> per_ct;  // one per grid threshold
  SelectionResult best;                 // winner of the CT validation
  std::vector<double> lambdas;          // the explored grid
};

// Uniform-with-replacement row resample; X and y rows stay paired.
void bootstrap_sample(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Rng& rng,
                      Eigen::MatrixXd& x_out, Eigen::VectorXd& y_out);

// Features whose bootstrap-selection count reaches ct * n_bootstraps.
std::vector<long> consensus_select(std::span<const long> counts, long n_bootstraps,
                                   double ct);

// Longest run of consecutive lambdas (descending order) whose selected set
// is unchanged; ties go to the run at larger lambda.
struct ConsistentRegion {
  std::vector<long> features;
  size_t start = 0;  // index into the lambda grid
  size_t length = 0;
};
ConsistentRegion largest_consistent_region(
    const std::vector<double>& lambdas,
    const std::vector<std::vector<long>>& selected_sets);

// Soft-Bolasso with consensus-threshold validation: a lambda grid from the
// training data, B bootstrap LASSO paths evaluated on that grid, per-CT
// lambda choice by largest consistent region (cross-validation fallback when
// the region covers fewer than percent_lcr of the grid), and the final CT
// picked on the validation set.
BolassoRun soft_bolasso(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y,
                        const Eigen::MatrixXd& val_x, const Eigen::VectorXd& val_y,
                        const BolassoConfig& cfg,
                        const std::vector<std::string>& feature_names = {});
BolassoRun soft_bolasso(const ScoreMatrix& train, const ScoreMatrix& val,
                        const BolassoConfig& cfg);

// Hybrid combiner H: per-CT union of the U- and B-class selections, OLS
// refit on the unioned columns, winner by validation MSE. Feature ids of the
// B class are offset by the U column count (the union_class_UB convention).
SelectionResult hybrid_H(const std::vector<SelectionResult>& sel_u,
                         const std::vector<SelectionResult>& sel_b,
                         const Eigen::MatrixXd& train_u, const Eigen::MatrixXd& train_b,
                         const Eigen::VectorXd& train_y, const Eigen::MatrixXd& val_u,
                         const Eigen::MatrixXd& val_b, const Eigen::VectorXd& val_y,
                         const std::vector<double>& ct_grid,
                         const std::vector<std::string>& names_u = {},
                         const std::vector<std::string>& names_b = {});

// Hybrid combiner H_II: explores all |CT|^2 (i, j) pairs.
SelectionResult hybrid_HII(const std::vector<SelectionResult>& sel_u,
                           const std::vector<SelectionResult>& sel_b,
                           const Eigen::MatrixXd& train_u, const Eigen::MatrixXd& train_b,
                           const Eigen::VectorXd& train_y, const Eigen::MatrixXd& val_u,
                           const Eigen::MatrixXd& val_b, const Eigen::VectorXd& val_y,
                           const std::vector<double>& ct_grid,
                           const std::vector<std::string>& names_u = {},
                           const std::vector<std::string>& names_b = {});

// Column concatenation of the two classes with class-tagged feature ids
// (U ids first, then B ids).
ScoreMatrix union_class_UB(const ScoreMatrix& train_u, const ScoreMatrix& train_b);

// Correlation-ranking baseline: features ranked by Pearson correlation with
// the target (descending), prefixes of the top-k evaluated on the validation
// set, minimising prefix returned.
SelectionResult baseline_correlation_select(const Eigen::MatrixXd& train_x,
                                            const Eigen::VectorXd& train_y,
                                            const Eigen::MatrixXd& val_x,
                                            const Eigen::VectorXd& val_y, long k,
                                            const std::vector<std::string>& names = {});
SelectionResult baseline_correlation_select(const ScoreMatrix& train,
                                            const ScoreMatrix& val, long k);

// OLS refit restricted to the given columns; empty set -> bias-only model.
LinearModel refit_subset(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const std::vector<long>& features);
double subset_mse(const LinearModel& model, const Eigen::MatrixXd& x,
                  const Eigen::VectorXd& y, const std::vector<long>& features);

void save_selection_json(const SelectionResult& result, const std::string& path);

}  // namespace nowcaster
