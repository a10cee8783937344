#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace nowcaster {

// Binary least-squares regression tree stored as a flat node vector;
// children[0] is the <= branch.
struct TreeNode {
  bool leaf = true;
  long feature = -1;
  double threshold = 0.0;
  long left = -1;
  long right = -1;
  double value = 0.0;  // mean response of the training rows at this node
  long count = 0;
  double sse = 0.0;  // sum of squared deviations at this node
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& x) const;
  long leaf_count() const;
  long depth() const;  // edges on the longest root-to-leaf path
  double training_sse() const;
};

struct TreeParams {
  long min_leaf = 5;
  long max_depth = -1;  // -1 = unlimited
};

// Greedy best-split fit: thresholds at midpoints of consecutive sorted
// unique values; gain ties resolved toward the lowest feature index, then
// the smallest threshold; recursion stops at min_leaf, max_depth or zero
// gain.
RegressionTree fit_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const TreeParams& params);

struct PruningStep {
  double alpha = 0.0;
  RegressionTree subtree;
  long leaf_count = 0;
  long depth = 0;
};

// Weakest-link (error-complexity) pruning sequence from the full tree down
// to the root-only tree; alphas strictly increase and subtrees are nested.
std::vector<PruningStep> prune_sequence(const RegressionTree& tree);

// Among subtrees retaining at least min_level_fraction of the full depth,
// the one minimising validation MSE; ties go to the smaller tree.
RegressionTree select_pruned(const std::vector<PruningStep>& seq,
                             const Eigen::MatrixXd& val_x, const Eigen::VectorXd& val_y,
                             double min_level_fraction);

struct TreeEnsemble {
  std::vector<RegressionTree> trees;  // bootstrap order
  long active_count = 0;              // trees used by default for prediction
  std::vector<uint64_t> tree_seeds;
};

TreeEnsemble fit_bagged_ensemble(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 long bootstraps, const TreeParams& params, uint64_t seed,
                                 int jobs = 1);

// argmin over t of the validation MSE of the first-t-trees average; ties go
// to the smaller t. Sets nothing; callers assign active_count.
long select_tree_count(const TreeEnsemble& ensemble, const Eigen::MatrixXd& val_x,
                       const Eigen::VectorXd& val_y);

double ensemble_predict(const TreeEnsemble& ensemble, const Eigen::VectorXd& x,
                        long tree_count = -1);

struct EnsemblePrediction {
  double mean = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Bootstrap standard error: sample std of the per-tree predictions divided
// by sqrt(t); the 95% interval uses the .975 normal quantile.
EnsemblePrediction ensemble_predict_ci(const TreeEnsemble& ensemble,
                                       const Eigen::VectorXd& x, long tree_count = -1);

// Per-feature mean (over trees) of the weighted impurity decrease collected
// at every split on that feature.
std::vector<double> variable_importance(const TreeEnsemble& ensemble, long n_features);

void save_tree_json(const RegressionTree& tree, const std::string& path);
void save_ensemble_json(const TreeEnsemble& ensemble, const std::string& path);
TreeEnsemble load_ensemble_json(const std::string& path);

// CSV (feature, delta) sorted by descending delta.
void save_importance_csv(const std::vector<double>& delta,
                         const std::vector<std::string>& names, const std::string& path);

}  // namespace nowcaster
