#include "nowcaster/cart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "nowcaster/io.hpp"
#include "nowcaster/linreg.hpp"
#include "nowcaster/parallel.hpp"
#include "nowcaster/rng.hpp"
#include "nowcaster/stats.hpp"

namespace nowcaster {

double RegressionTree::predict(const Eigen::VectorXd& x) const {
  long i = 0;
  while (!nodes[static_cast<size_t>(i)].leaf) {
    const TreeNode& node = nodes[static_cast<size_t>(i)];
    if (node.feature >= x.size()) {
      throw std::invalid_argument("predict: input misses split feature " +
                                  std::to_string(node.feature));
    }
    i = x(node.feature) <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<size_t>(i)].value;
}

Eigen::VectorXd RegressionTree::predict_rows(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (long r = 0; r < x.rows(); ++r) out(r) = predict(x.row(r).transpose());
  return out;
}

long RegressionTree::leaf_count() const {
  long count = 0;
  for (const TreeNode& node : nodes) {
    if (node.leaf) ++count;
  }
  return count;
}

namespace {

long depth_below(const std::vector<TreeNode>& nodes, long i) {
  const TreeNode& node = nodes[static_cast<size_t>(i)];
  if (node.leaf) return 0;
  return 1 + std::max(depth_below(nodes, node.left), depth_below(nodes, node.right));
}

double leaf_sse_below(const std::vector<TreeNode>& nodes, long i) {
  const TreeNode& node = nodes[static_cast<size_t>(i)];
  if (node.leaf) return node.sse;
  return leaf_sse_below(nodes, node.left) + leaf_sse_below(nodes, node.right);
}

long leaves_below(const std::vector<TreeNode>& nodes, long i) {
  const TreeNode& node = nodes[static_cast<size_t>(i)];
  if (node.leaf) return 1;
  return leaves_below(nodes, node.left) + leaves_below(nodes, node.right);
}

}  // namespace

long RegressionTree::depth() const { return depth_below(nodes, 0); }

double RegressionTree::training_sse() const { return leaf_sse_below(nodes, 0); }

namespace {

struct Builder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  const TreeParams& params;
  std::vector<TreeNode> nodes;

  long build(std::vector<long>& rows, long depth) {
    const long idx = static_cast<long>(nodes.size());
    nodes.emplace_back();
    const long n = static_cast<long>(rows.size());

    double sum = 0.0;
    double sum2_total = 0.0;
    for (long r : rows) {
      sum += y(r);
      sum2_total += y(r) * y(r);
    }
    const double mean_y = sum / static_cast<double>(n);
    double sse = 0.0;
    for (long r : rows) sse += (y(r) - mean_y) * (y(r) - mean_y);

    nodes[static_cast<size_t>(idx)].value = mean_y;
    nodes[static_cast<size_t>(idx)].count = n;
    nodes[static_cast<size_t>(idx)].sse = sse;

    const bool depth_ok = params.max_depth < 0 || depth < params.max_depth;
    if (n < 2 * params.min_leaf || !depth_ok || sse <= 0.0) return idx;

    long best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
    std::vector<std::pair<double, double>> vals(static_cast<size_t>(n));
    for (long j = 0; j < x.cols(); ++j) {
      for (long i = 0; i < n; ++i) {
        vals[static_cast<size_t>(i)] = {x(rows[static_cast<size_t>(i)], j),
                                        y(rows[static_cast<size_t>(i)])};
      }
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      double sum_l = 0.0, sum2_l = 0.0;
      for (long i = 0; i + 1 <= n - 1; ++i) {
        const double yv = vals[static_cast<size_t>(i)].second;
        sum_l += yv;
        sum2_l += yv * yv;
        const long n_l = i + 1;
        const long n_r = n - n_l;
        if (vals[static_cast<size_t>(i)].first == vals[static_cast<size_t>(i) + 1].first) {
          continue;  // no threshold between equal values
        }
        if (n_l < params.min_leaf || n_r < params.min_leaf) continue;
        const double sum_r = sum - sum_l;
        double sse_l = sum2_l - sum_l * sum_l / static_cast<double>(n_l);
        double sse_r = (sum2_total - sum2_l) - sum_r * sum_r / static_cast<double>(n_r);
        if (sse_l < 0.0) sse_l = 0.0;
        if (sse_r < 0.0) sse_r = 0.0;
        const double gain = sse - sse_l - sse_r;
        if (gain > best_gain * (1.0 + 1e-12) &&
            gain > 1e-12 * std::max(1.0, sse)) {
          best_gain = gain;
          best_feature = j;
          best_threshold = 0.5 * (vals[static_cast<size_t>(i)].first +
                                  vals[static_cast<size_t>(i) + 1].first);
        }
      }
    }

    if (best_feature < 0) return idx;

    std::vector<long> left_rows, right_rows;
    for (long r : rows) {
      (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes[static_cast<size_t>(idx)].leaf = false;
    nodes[static_cast<size_t>(idx)].feature = best_feature;
    nodes[static_cast<size_t>(idx)].threshold = best_threshold;
    const long left = build(left_rows, depth + 1);
    nodes[static_cast<size_t>(idx)].left = left;
    const long right = build(right_rows, depth + 1);
    nodes[static_cast<size_t>(idx)].right = right;
    return idx;
  }
};

}  // namespace

RegressionTree fit_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const TreeParams& params) {
  if (x.rows() < 1 || x.rows() != y.size()) {
    throw std::invalid_argument("fit_tree: empty data or row mismatch");
  }
  if (params.min_leaf < 1) throw std::invalid_argument("fit_tree: min_leaf must be >= 1");
  Builder builder{x, y, params, {}};
  std::vector<long> rows(static_cast<size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  builder.build(rows, 0);
  RegressionTree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

namespace {

// rebuilds a tree without orphaned nodes, preserving child order
long compact_into(const std::vector<TreeNode>& src, long i, std::vector<TreeNode>& dst) {
  const long idx = static_cast<long>(dst.size());
  dst.push_back(src[static_cast<size_t>(i)]);
  if (!src[static_cast<size_t>(i)].leaf) {
    const long left = compact_into(src, src[static_cast<size_t>(i)].left, dst);
    dst[static_cast<size_t>(idx)].left = left;
    const long right = compact_into(src, src[static_cast<size_t>(i)].right, dst);
    dst[static_cast<size_t>(idx)].right = right;
  }
  return idx;
}

RegressionTree compact(const std::vector<TreeNode>& nodes) {
  RegressionTree out;
  compact_into(nodes, 0, out.nodes);
  return out;
}

}  // namespace

std::vector<PruningStep> prune_sequence(const RegressionTree& tree) {
  std::vector<PruningStep> seq;
  std::vector<TreeNode> work = tree.nodes;

  auto snapshot = [&](double alpha) {
    PruningStep step;
    step.alpha = alpha;
    step.subtree = compact(work);
    step.leaf_count = step.subtree.leaf_count();
    step.depth = step.subtree.depth();
    seq.push_back(std::move(step));
  };

  snapshot(0.0);
  while (!work[0].leaf) {
    // weakest link: minimal (collapse error increase) / (leaves - 1)
    double min_g = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < work.size(); ++i) {
      if (work[i].leaf) continue;
      const double r_subtree = leaf_sse_below(work, static_cast<long>(i));
      const long leaves = leaves_below(work, static_cast<long>(i));
      const double g = (work[i].sse - r_subtree) / static_cast<double>(leaves - 1);
      min_g = std::min(min_g, g);
    }
    // collapse every node attaining the minimum (within round-off)
    const double cut = min_g + 1e-12 * std::max(1.0, std::abs(min_g));
    for (size_t i = 0; i < work.size(); ++i) {
      if (work[i].leaf) continue;
      const double r_subtree = leaf_sse_below(work, static_cast<long>(i));
      const long leaves = leaves_below(work, static_cast<long>(i));
      const double g = (work[i].sse - r_subtree) / static_cast<double>(leaves - 1);
      if (g <= cut) {
        work[i].leaf = true;
        work[i].left = work[i].right = -1;
        work[i].feature = -1;
      }
    }
    snapshot(min_g);
  }
  return seq;
}

RegressionTree select_pruned(const std::vector<PruningStep>& seq,
                             const Eigen::MatrixXd& val_x, const Eigen::VectorXd& val_y,
                             double min_level_fraction) {
  if (seq.empty()) throw std::invalid_argument("select_pruned: empty sequence");
  if (min_level_fraction < 0.0 || min_level_fraction > 1.0) {
    throw std::invalid_argument("select_pruned: fraction outside [0,1]");
  }
  const double required = min_level_fraction * static_cast<double>(seq.front().depth);

  double best_loss = std::numeric_limits<double>::infinity();
  const PruningStep* best = nullptr;
  for (const PruningStep& step : seq) {
    if (static_cast<double>(step.depth) < required - 1e-12) continue;
    const double loss = mse(step.subtree.predict_rows(val_x), val_y);
    if (loss <= best_loss) {  // <= so the smaller (later) tree wins ties
      best_loss = loss;
      best = &step;
    }
  }
  if (!best) {
    warn("select_pruned: no subtree retains the required depth; full tree returned");
    return seq.front().subtree;
  }
  return best->subtree;
}

TreeEnsemble fit_bagged_ensemble(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 long bootstraps, const TreeParams& params, uint64_t seed,
                                 int jobs) {
  if (bootstraps < 1) throw std::invalid_argument("fit_bagged_ensemble: bootstraps >= 1");
  TreeEnsemble ensemble;
  ensemble.trees.resize(static_cast<size_t>(bootstraps));
  ensemble.tree_seeds.resize(static_cast<size_t>(bootstraps));
  const long m = x.rows();
  parallel_for(static_cast<size_t>(bootstraps), jobs, [&](size_t b) {
    const uint64_t tree_seed = derive_seed(seed, seed_domain::kTree, b);
    ensemble.tree_seeds[b] = tree_seed;
    Rng rng(tree_seed);
    Eigen::MatrixXd xb(m, x.cols());
    Eigen::VectorXd yb(m);
    for (long r = 0; r < m; ++r) {
      const long pick = static_cast<long>(rng.next_below(static_cast<uint64_t>(m)));
      xb.row(r) = x.row(pick);
      yb(r) = y(pick);
    }
    ensemble.trees[b] = fit_tree(xb, yb, params);
  });
  ensemble.active_count = bootstraps;
  return ensemble;
}

long select_tree_count(const TreeEnsemble& ensemble, const Eigen::MatrixXd& val_x,
                       const Eigen::VectorXd& val_y) {
  if (val_x.rows() < 1) throw std::invalid_argument("select_tree_count: empty validation");
  const long n_trees = static_cast<long>(ensemble.trees.size());
  Eigen::MatrixXd preds(n_trees, val_x.rows());
  for (long t = 0; t < n_trees; ++t) {
    preds.row(t) = ensemble.trees[static_cast<size_t>(t)].predict_rows(val_x).transpose();
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(val_x.rows());
  double best_loss = std::numeric_limits<double>::infinity();
  long best_t = 1;
  for (long t = 1; t <= n_trees; ++t) {
    acc += preds.row(t - 1).transpose();
    const double loss = mse(acc / static_cast<double>(t), val_y);
    if (loss < best_loss) {
      best_loss = loss;
      best_t = t;
    }
  }
  return best_t;
}

namespace {

long resolve_count(const TreeEnsemble& ensemble, long tree_count) {
  const long available = static_cast<long>(ensemble.trees.size());
  const long t = tree_count < 0 ? ensemble.active_count : tree_count;
  if (t < 1 || t > available) {
    throw std::invalid_argument("ensemble: tree count out of range");
  }
  return t;
}

}  // namespace

double ensemble_predict(const TreeEnsemble& ensemble, const Eigen::VectorXd& x,
                        long tree_count) {
  const long t = resolve_count(ensemble, tree_count);
  double sum = 0.0;
  for (long i = 0; i < t; ++i) sum += ensemble.trees[static_cast<size_t>(i)].predict(x);
  return sum / static_cast<double>(t);
}

EnsemblePrediction ensemble_predict_ci(const TreeEnsemble& ensemble,
                                       const Eigen::VectorXd& x, long tree_count) {
  const long t = resolve_count(ensemble, tree_count);
  if (t < 2) throw std::runtime_error("ensemble_predict_ci: needs >= 2 trees");
  std::vector<double> preds(static_cast<size_t>(t));
  for (long i = 0; i < t; ++i) {
    preds[static_cast<size_t>(i)] = ensemble.trees[static_cast<size_t>(i)].predict(x);
  }
  EnsemblePrediction out;
  out.mean = mean(preds);
  out.se = stddev_sample(preds) / std::sqrt(static_cast<double>(t));
  out.ci_low = out.mean - kNormal975 * out.se;
  out.ci_high = out.mean + kNormal975 * out.se;
  return out;
}

std::vector<double> variable_importance(const TreeEnsemble& ensemble, long n_features) {
  std::vector<double> delta(static_cast<size_t>(n_features), 0.0);
  for (const RegressionTree& tree : ensemble.trees) {
    const double n_root = static_cast<double>(tree.nodes[0].count);
    for (const TreeNode& node : tree.nodes) {
      if (node.leaf) continue;
      const double gain = node.sse - tree.nodes[static_cast<size_t>(node.left)].sse -
                          tree.nodes[static_cast<size_t>(node.right)].sse;
      delta[static_cast<size_t>(node.feature)] += gain / n_root;
    }
  }
  for (double& d : delta) d /= static_cast<double>(ensemble.trees.size());
  return delta;
}

namespace {

nlohmann::json node_to_json(const std::vector<TreeNode>& nodes, long i) {
  const TreeNode& node = nodes[static_cast<size_t>(i)];
  nlohmann::json j;
  j["value"] = node.value;
  j["count"] = node.count;
  j["sse"] = node.sse;
  if (!node.leaf) {
    j["feature"] = node.feature;
    j["threshold"] = node.threshold;
    j["left"] = node_to_json(nodes, node.left);
    j["right"] = node_to_json(nodes, node.right);
  }
  return j;
}

long node_from_json(const nlohmann::json& j, std::vector<TreeNode>& nodes) {
  const long idx = static_cast<long>(nodes.size());
  nodes.emplace_back();
  nodes[static_cast<size_t>(idx)].value = j.at("value").get<double>();
  nodes[static_cast<size_t>(idx)].count = j.at("count").get<long>();
  nodes[static_cast<size_t>(idx)].sse = j.at("sse").get<double>();
  if (j.contains("feature")) {
    nodes[static_cast<size_t>(idx)].leaf = false;
    nodes[static_cast<size_t>(idx)].feature = j.at("feature").get<long>();
    nodes[static_cast<size_t>(idx)].threshold = j.at("threshold").get<double>();
    const long left = node_from_json(j.at("left"), nodes);
    nodes[static_cast<size_t>(idx)].left = left;
    const long right = node_from_json(j.at("right"), nodes);
    nodes[static_cast<size_t>(idx)].right = right;
  }
  return idx;
}

}  // namespace

void save_tree_json(const RegressionTree& tree, const std::string& path) {
  atomic_write_file(path, node_to_json(tree.nodes, 0).dump(2) + "\n");
}

void save_ensemble_json(const TreeEnsemble& ensemble, const std::string& path) {
  nlohmann::json j;
  j["active_count"] = ensemble.active_count;
  j["tree_seeds"] = ensemble.tree_seeds;
  nlohmann::json trees = nlohmann::json::array();
  for (const RegressionTree& tree : ensemble.trees) {
    trees.push_back(node_to_json(tree.nodes, 0));
  }
  j["trees"] = std::move(trees);
  atomic_write_file(path, j.dump() + "\n");
}

TreeEnsemble load_ensemble_json(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  TreeEnsemble ensemble;
  ensemble.active_count = j.at("active_count").get<long>();
  ensemble.tree_seeds = j.at("tree_seeds").get<std::vector<uint64_t>>();
  for (const nlohmann::json& tj : j.at("trees")) {
    RegressionTree tree;
    node_from_json(tj, tree.nodes);
    ensemble.trees.push_back(std::move(tree));
  }
  return ensemble;
}

void save_importance_csv(const std::vector<double>& delta,
                         const std::vector<std::string>& names, const std::string& path) {
  std::vector<size_t> order(delta.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return delta[a] > delta[b]; });
  std::string out = "feature,delta\n";
  for (size_t i : order) {
    out += i < names.size() ? names[i] : "f" + std::to_string(i);
    out += ',';
    out += format_double(delta[i]);
    out += '\n';
  }
  atomic_write_file(path, out);
}

}  // namespace nowcaster
