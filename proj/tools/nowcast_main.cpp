// Command-line front end: synth | features | score-matrix | train | infer |
// evaluate | mood | network | posting. Every command resolves its parameters
// as defaults < config file < flags, writes outputs atomically under --out,
// and echoes the fully resolved configuration to run.json.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nowcaster/bolasso.hpp"
#include "nowcaster/cart.hpp"
#include "nowcaster/corpus.hpp"
#include "nowcaster/cv.hpp"
#include "nowcaster/geonet.hpp"
#include "nowcaster/io.hpp"
#include "nowcaster/lars.hpp"
#include "nowcaster/mood.hpp"
#include "nowcaster/series.hpp"
#include "nowcaster/stats.hpp"
#include "nowcaster/synth.hpp"
#include "nowcaster/text.hpp"
#include "nowcaster/vsm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// parameter resolution: defaults < config file < command-line flags

struct Params {
  ordered_json values;      // resolved values, echoed into run.json
  json config;              // raw config file content
  std::set<std::string> known;

  void load_config(const std::string& path) {
    if (path.empty()) return;
    config = json::parse(nowcaster::read_text_file(path));
    if (!config.is_object()) throw std::runtime_error("config must be a JSON object");
  }

  void check_unknown() const {
    for (auto it = config.begin(); it != config.end(); ++it) {
      if (!known.contains(it.key())) {
        throw std::runtime_error("unknown config key: " + it.key());
      }
    }
  }

  template <typename T>
  T resolve(const CLI::App& cmd, const std::string& flag, const std::string& key,
            const T& cli_value, const T& default_value) {
    known.insert(key);
    T value = default_value;
    if (config.contains(key)) value = config.at(key).get<T>();
    if (cmd.count(flag) > 0) value = cli_value;
    values[key] = value;
    return value;
  }
};

void write_run_json(const Params& params, const std::string& command,
                    const fs::path& out_dir) {
  ordered_json run;
  run["command"] = command;
  run["params"] = params.values;
  nowcaster::atomic_write_file((out_dir / "run.json").string(), run.dump(2) + "\n");
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out.empty() ? "." : out);
  fs::create_directories(dir);
  return dir;
}

nowcaster::PipelineOptions make_pipeline(const std::string& stoplist_path, bool stem) {
  nowcaster::PipelineOptions pipeline;
  pipeline.stem = stem;
  if (!stoplist_path.empty()) pipeline.stoplist = nowcaster::load_stoplist(stoplist_path);
  return pipeline;
}

int64_t parse_interval_length(const std::string& name) {
  if (name == "day") return 86400;
  if (name == "hour") return 3600;
  if (name == "10min") return 600;
  throw std::runtime_error("unknown interval length: " + name + " (day|hour|10min)");
}

std::vector<double> column_of(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string config, out;
  uint64_t seed = 42;
  int jobs = 1;
  int days = 120;
  int posts_per_bin = 500;
  std::vector<std::string> locations;
  int signal_terms = 20;
  double signal_slope = 0.8;
  double signal_base = 0.05;
  int noise_terms = 180;
  double noise_rate = 0.1;
  int confounder_terms = 0;
  int confounder_spike = -1;
  int confounder_width = 5;
  std::string target = "rain";
  std::string start_date = "2009-07-01";
};

int run_synth(const CLI::App& cmd, SynthArgs& args) {
  Params params;
  params.load_config(args.config);
  const std::string out = params.resolve(cmd, "--out", "out", args.out, std::string("."));
  const uint64_t seed = params.resolve(cmd, "--seed", "seed", args.seed, uint64_t{42});
  params.resolve(cmd, "--jobs", "jobs", args.jobs, 1);
  const int days = params.resolve(cmd, "--days", "days", args.days, 120);
  const int posts = params.resolve(cmd, "--posts-per-bin", "posts_per_bin",
                                   args.posts_per_bin, 500);
  std::vector<std::string> locations =
      params.resolve(cmd, "--location", "locations", args.locations,
                     std::vector<std::string>{"avonford", "bexley", "carwick"});
  const int n_signal = params.resolve(cmd, "--signal-terms", "signal_terms",
                                      args.signal_terms, 20);
  const double slope = params.resolve(cmd, "--signal-slope", "signal_slope",
                                      args.signal_slope, 0.8);
  const double base = params.resolve(cmd, "--signal-base", "signal_base",
                                     args.signal_base, 0.05);
  const int n_noise = params.resolve(cmd, "--noise-terms", "noise_terms",
                                     args.noise_terms, 180);
  const double noise_rate = params.resolve(cmd, "--noise-rate", "noise_rate",
                                           args.noise_rate, 0.1);
  const int n_conf = params.resolve(cmd, "--confounder-terms", "confounder_terms",
                                    args.confounder_terms, 0);
  const int spike = params.resolve(cmd, "--confounder-spike", "confounder_spike",
                                   args.confounder_spike, -1);
  const int width = params.resolve(cmd, "--confounder-width", "confounder_width",
                                   args.confounder_width, 5);
  const std::string target_kind = params.resolve(cmd, "--target", "target", args.target,
                                                 std::string("rain"));
  const std::string start = params.resolve(cmd, "--start-date", "start_date",
                                           args.start_date, std::string("2009-07-01"));
  params.check_unknown();

  nowcaster::SynthSpec spec;
  spec.days = days;
  spec.locations = locations;
  spec.posts_per_bin = posts;
  spec.seed = seed;
  spec.start_date = nowcaster::parse_date(start);
  spec.target_kind = target_kind == "flu" ? nowcaster::TargetKind::FluLike
                                          : nowcaster::TargetKind::RainLike;
  for (const std::string& term : nowcaster::make_term_pool("sig", n_signal)) {
    spec.signal_terms.push_back({term, slope, base});
  }
  for (const std::string& term : nowcaster::make_term_pool("nse", n_noise)) {
    spec.noise_terms.emplace_back(term, noise_rate);
  }
  if (n_conf > 0) {
    const int day = spike >= 0 ? spike : days / 2;
    const std::vector<double> rates = nowcaster::gen_confounder_spike(days, day, width);
    for (const std::string& term : nowcaster::make_term_pool("cnf", n_conf)) {
      spec.confounder_terms.emplace_back(term, rates);
    }
  }

  const nowcaster::GroundTruthSeries target =
      nowcaster::gen_target_series(spec.target_kind, days, seed, spec.start_date);
  const nowcaster::SynthCorpus synth = nowcaster::gen_corpus(spec, target);

  const fs::path dir = prepare_out_dir(out);
  nowcaster::save_posts_jsonl(synth, (dir / "posts.jsonl").string());
  nowcaster::save_ground_truth_csv(
      nowcaster::expand_target_per_location(target, spec.locations),
      (dir / "ground_truth.csv").string());
  nowcaster::save_manifest_json(spec, (dir / "manifest.json").string());
  write_run_json(params, "synth", dir);

  // generated files must pass ingestion
  nowcaster::load_posts_jsonl((dir / "posts.jsonl").string(), 86400, {});
  return 0;
}

// ---------------------------------------------------------------------------
// features

struct FeaturesArgs {
  std::string config, out, posts, stoplist;
  std::vector<std::string> refs;
  uint64_t seed = 42;
  int jobs = 1;
  int arity = 1;
  long min_count = 10;
  bool no_stem = false;
};

int run_features(const CLI::App& cmd, FeaturesArgs& args) {
  Params params;
  params.load_config(args.config);
  const std::string out = params.resolve(cmd, "--out", "out", args.out, std::string("."));
  params.resolve(cmd, "--seed", "seed", args.seed, uint64_t{42});
  params.resolve(cmd, "--jobs", "jobs", args.jobs, 1);
  const std::string posts = params.resolve(cmd, "--posts", "posts", args.posts,
                                           std::string());
  const std::vector<std::string> refs =
      params.resolve(cmd, "--ref", "refs", args.refs, std::vector<std::string>{});
  const std::string stoplist_path = params.resolve(cmd, "--stoplist", "stoplist",
                                                   args.stoplist, std::string());
  const int arity = params.resolve(cmd, "--arity", "arity", args.arity, 1);
  const long min_count = params.resolve(cmd, "--min-count", "min_count", args.min_count,
                                        long{10});
  params.check_unknown();
  if (posts.empty() || refs.empty()) {
    throw std::runtime_error("features: --posts and at least one --ref are required");
  }

  const nowcaster::PipelineOptions pipeline = make_pipeline(stoplist_path, true);
  const nowcaster::TimeBinnedCorpus corpus =
      nowcaster::load_posts_jsonl(posts, 86400, pipeline);

  std::vector<std::string> docs;
  for (const std::string& ref : refs) docs.push_back(nowcaster::read_text_file(ref));
  const nowcaster::FeatureVocabulary vocab = nowcaster::build_candidate_vocabulary(
      docs, corpus, arity, min_count, pipeline.stoplist);

  const fs::path dir = prepare_out_dir(out);
  nowcaster::save_vocabulary(vocab, (dir / "vocabulary.txt").string());
  write_run_json(params, "features", dir);
  return 0;
}

// ---------------------------------------------------------------------------
// score-matrix

struct MatrixArgs {
  std::string config, out, posts, vocab, location, interval = "day", stoplist;
  uint64_t seed = 42;
  int jobs = 1;
  int arity = 1;
  bool raw_counts = false;
};

int run_score_matrix(const CLI::App& cmd, MatrixArgs& args) {
  Params params;
  params.load_config(args.config);
  const std::string out = params.resolve(cmd, "--out", "out", args.out, std::string("."));
  params.resolve(cmd, "--seed", "seed", args.seed, uint64_t{42});
  params.resolve(cmd, "--jobs", "jobs", args.jobs, 1);
  const std::string posts = params.resolve(cmd, "--posts", "posts", args.posts,
                                           std::string());
  const std::string vocab_path = params.resolve(cmd, "--vocab", "vocab", args.vocab,
                                                std::string());
  const std::string stoplist_path = params.resolve(cmd, "--stoplist", "stoplist",
                                                   args.stoplist, std::string());
  const std::string location = params.resolve(cmd, "--location", "location",
                                              args.location, std::string());
  const std::string interval = params.resolve(cmd, "--interval", "interval",
                                              args.interval, std::string("day"));
  const int arity = params.resolve(cmd, "--arity", "arity", args.arity, 1);
  const bool raw_counts = params.resolve(cmd, "--raw-counts", "raw_counts",
                                         args.raw_counts, false);
  params.check_unknown();
  if (posts.empty() || vocab_path.empty()) {
    throw std::runtime_error("score-matrix: --posts and --vocab are required");
  }

  const nowcaster::TimeBinnedCorpus corpus = nowcaster::load_posts_jsonl(
      posts, parse_interval_length(interval), make_pipeline(stoplist_path, true));
  const nowcaster::FeatureVocabulary vocab = nowcaster::load_vocabulary(
      vocab_path, arity == 1 ? nowcaster::FeatureClass::U : nowcaster::FeatureClass::B);
  if (vocab.size() == 0) throw std::runtime_error("score-matrix: empty vocabulary");

  std::optional<std::string> filter;
  if (!location.empty()) filter = location;
  const nowcaster::ScoreMatrix matrix =
      nowcaster::build_score_matrix(vocab, corpus, filter, !raw_counts);

  const fs::path dir = prepare_out_dir(out);
  nowcaster::save_score_matrix(matrix, (dir / "matrix.csv").string());
  write_run_json(params, "score-matrix", dir);

  // round-trip check: the CSV must reproduce the in-memory matrix exactly
  const nowcaster::ScoreMatrix back =
      nowcaster::load_score_matrix((dir / "matrix.csv").string(), vocab.feature_class);
  if (back.x.rows() != matrix.x.rows() || back.x.cols() != matrix.x.cols() ||
      back.x != matrix.x) {
    throw std::runtime_error("score-matrix: CSV round-trip mismatch");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config, out, matrix_u, matrix_b, truth;
  std::string learner = "bolasso", hybrid = "none";
  uint64_t seed = 42;
  int jobs = 1;
  double val_frac = 0.25;
  long bootstraps = 0;
  long max_features = 300;
  long baseline_k = 300;
  long tree_bootstraps = 150;
  long min_leaf = 5;
};

struct SplitRows {
  std::vector<long> train, val;
};

SplitRows split_by_intervals(const nowcaster::ScoreMatrix& m, double val_frac) {
  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (const std::string& label : m.row_interval) {
    if (seen.insert(label).second) labels.push_back(label);
  }
  const size_t n_val = std::max<size_t>(1, static_cast<size_t>(
      std::ceil(static_cast<double>(labels.size()) * val_frac)));
  if (n_val >= labels.size()) throw std::runtime_error("train: validation uses every interval");
  std::set<std::string> val_set(labels.end() - static_cast<long>(n_val), labels.end());
  SplitRows rows;
  for (long r = 0; r < m.rows(); ++r) {
    (val_set.contains(m.row_interval[static_cast<size_t>(r)]) ? rows.val : rows.train)
        .push_back(r);
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

int run_train(const CLI::App& cmd, TrainArgs& args) {
  Params params;
  params.load_config(args.config);
  const std::string out = params.resolve(cmd, "--out", "out", args.out, std::string("."));
  const uint64_t seed = params.resolve(cmd, "--seed", "seed", args.seed, uint64_t{42});
  const int jobs = params.resolve(cmd, "--jobs", "jobs", args.jobs, 1);
  const std::string matrix_u = params.resolve(cmd, "--matrix-u", "matrix_u",
                                              args.matrix_u, std::string());
  const std::string matrix_b = params.resolve(cmd, "--matrix-b", "matrix_b",
                                              args.matrix_b, std::string());
  const std::string truth_path = params.resolve(cmd, "--truth", "truth", args.truth,
                                                std::string());
  const std::string learner_name = params.resolve(cmd, "--learner", "learner",
                                                  args.learner, std::string("bolasso"));
  const std::string hybrid_name = params.resolve(cmd, "--hybrid", "hybrid", args.hybrid,
                                                 std::string("none"));
  const double val_frac = params.resolve(cmd, "--val-frac", "val_frac", args.val_frac,
                                         0.25);
  const long bootstraps = params.resolve(cmd, "--bootstraps", "bootstraps",
                                         args.bootstraps, long{0});
  const long max_features = params.resolve(cmd, "--max-features", "max_features",
                                           args.max_features, long{300});
  const long baseline_k = params.resolve(cmd, "--baseline-k", "baseline_k",
                                         args.baseline_k, long{300});
  const long tree_bootstraps = params.resolve(cmd, "--tree-bootstraps", "tree_bootstraps",
                                              args.tree_bootstraps, long{150});
  const long min_leaf = params.resolve(cmd, "--min-leaf", "min_leaf", args.min_leaf,
                                       long{5});
  params.check_unknown();
  if (matrix_u.empty() || truth_path.empty()) {
    throw std::runtime_error("train: --matrix-u and --truth are required");
  }

  const nowcaster::Learner learner = nowcaster::parse_learner(learner_name);
  const nowcaster::HybridMode hybrid = nowcaster::parse_hybrid(hybrid_name);
  if (learner != nowcaster::Learner::Bolasso &&
      (hybrid == nowcaster::HybridMode::H || hybrid == nowcaster::HybridMode::HII)) {
    throw std::runtime_error("train: H/H_II hybrids require the bolasso learner");
  }
  const bool needs_b = hybrid != nowcaster::HybridMode::None;
  if (needs_b && matrix_b.empty()) {
    throw std::runtime_error("train: hybrid modes need --matrix-b");
  }

  const nowcaster::GroundTruthSeries truth = nowcaster::load_ground_truth_csv(truth_path);
  nowcaster::ScoreMatrix u =
      nowcaster::load_score_matrix(matrix_u, nowcaster::FeatureClass::U);
  nowcaster::attach_target(u, truth);
  nowcaster::ScoreMatrix b;
  if (needs_b) {
    b = nowcaster::load_score_matrix(matrix_b, nowcaster::FeatureClass::B);
    nowcaster::attach_target(b, truth);
  }

  nowcaster::ScoreMatrix ub;
  const nowcaster::ScoreMatrix* primary = &u;
  if (hybrid == nowcaster::HybridMode::UB) {
    ub = nowcaster::union_class_UB(u, b);
    primary = &ub;
  }

  const SplitRows rows = split_by_intervals(*primary, val_frac);
  const Eigen::MatrixXd train_x = take_rows(primary->x, rows.train);
  const Eigen::VectorXd train_y = take_rows(primary->y, rows.train);
  const Eigen::MatrixXd val_x = take_rows(primary->x, rows.val);
  const Eigen::VectorXd val_y = take_rows(primary->y, rows.val);
  std::vector<std::string> names;
  for (const nowcaster::NGram& g : primary->vocab.entries) names.push_back(g.text());

  const fs::path dir = prepare_out_dir(out);

  if (learner == nowcaster::Learner::CartEnsemble) {
    nowcaster::TreeParams tree_params;
    tree_params.min_leaf = min_leaf;
    nowcaster::TreeEnsemble ensemble = nowcaster::fit_bagged_ensemble(
        train_x, train_y, tree_bootstraps, tree_params, seed, jobs);
    ensemble.active_count = nowcaster::select_tree_count(ensemble, val_x, val_y);
    nowcaster::save_ensemble_json(ensemble, (dir / "model.json").string());
    const std::vector<double> delta =
        nowcaster::variable_importance(ensemble, primary->cols());
    nowcaster::save_importance_csv(delta, names, (dir / "importance.csv").string());
    write_run_json(params, "train", dir);
    return 0;
  }

  nowcaster::SelectionResult best;
  std::vector<nowcaster::SelectionResult> diagnostics;
  if (learner == nowcaster::Learner::Baseline) {
    best = nowcaster::baseline_correlation_select(train_x, train_y, val_x, val_y,
                                                  baseline_k, names);
    diagnostics.push_back(best);
  } else {
    nowcaster::BolassoConfig bc;
    bc.seed = seed;
    bc.jobs = jobs;
    bc.bootstraps = bootstraps;
    bc.max_features = max_features;
    if (hybrid == nowcaster::HybridMode::H || hybrid == nowcaster::HybridMode::HII) {
      std::vector<std::string> names_u, names_b;
      for (const nowcaster::NGram& g : u.vocab.entries) names_u.push_back(g.text());
      for (const nowcaster::NGram& g : b.vocab.entries) names_b.push_back(g.text());
      const SplitRows rows_b = split_by_intervals(b, val_frac);
      nowcaster::BolassoConfig bu = bc;
      bu.seed = nowcaster::derive_seed(seed, 8, 0);
      nowcaster::BolassoConfig bb = bc;
      bb.seed = nowcaster::derive_seed(seed, 8, 1);
      const Eigen::MatrixXd train_bx = take_rows(b.x, rows_b.train);
      const Eigen::MatrixXd val_bx = take_rows(b.x, rows_b.val);
      const nowcaster::BolassoRun ru =
          nowcaster::soft_bolasso(train_x, train_y, val_x, val_y, bu, names_u);
      const nowcaster::BolassoRun rb =
          nowcaster::soft_bolasso(train_bx, train_y, val_bx, val_y, bb, names_b);
      diagnostics = ru.per_ct;
      if (hybrid == nowcaster::HybridMode::H) {
        best = nowcaster::hybrid_H(ru.per_ct, rb.per_ct, train_x, train_bx, train_y,
                                   val_x, val_bx, val_y, bc.ct_grid, names_u, names_b);
      } else {
        best = nowcaster::hybrid_HII(ru.per_ct, rb.per_ct, train_x, train_bx, train_y,
                                     val_x, val_bx, val_y, bc.ct_grid, names_u, names_b);
      }
    } else {
      const nowcaster::BolassoRun run =
          nowcaster::soft_bolasso(train_x, train_y, val_x, val_y, bc, names);
      best = run.best;
      diagnostics = run.per_ct;
    }
  }

  nowcaster::save_selection_json(best, (dir / "model.json").string());
  nowcaster::save_linear_model_csv(best.model, (dir / "selected_features.csv").string());
  {
    std::ostringstream diag;
    diag << "ct,n_features,validation_rmse\n";
    for (const nowcaster::SelectionResult& r : diagnostics) {
      diag << nowcaster::format_double(r.ct) << ',' << r.features.size() << ','
           << nowcaster::format_double(r.validation_rmse()) << '\n';
    }
    nowcaster::atomic_write_file((dir / "diagnostics.csv").string(), diag.str());
  }
  write_run_json(params, "train", dir);
  return 0;
}

// ---------------------------------------------------------------------------
// infer / evaluate

struct InferArgs {
  std::string config, out, model, matrix, truth;
  uint64_t seed = 42;
  int jobs = 1;
  bool no_threshold = false;
  bool weekly_smoothing = false;
};

int run_infer(const CLI::App& cmd, InferArgs& args) {
  Params params;
  params.load_config(args.config);
  const std::string out = params.resolve(cmd, "--out", "out", args.out, std::string("."));
  params.resolve(cmd, "--seed", "seed", args.seed, uint64_t{42});
  params.resolve(cmd, "--jobs", "jobs", args.jobs, 1);
  const std::string model_path = params.resolve(cmd, "--model", "model", args.model,
                                                std::string());
  const std::string matrix_path = params.resolve(cmd, "--matrix", "matrix", args.matrix,
                                                 std::string());
  const std::string truth_path = params.resolve(cmd, "--truth", "truth", args.truth,
                                                std::string());
  const bool no_threshold = params.resolve(cmd, "--no-threshold", "no_threshold",
                                           args.no_threshold, false);
  const bool weekly = params.resolve(cmd, "--weekly-smoothing", "weekly_smoothing",
                                     args.weekly_smoothing, false);
  params.check_unknown();
  if (model_path.empty() || matrix_path.empty()) {
    throw std::runtime_error("infer: --model and --matrix are required");
  }

  nowcaster::ScoreMatrix m =
      nowcaster::load_score_matrix(matrix_path, nowcaster::FeatureClass::U);
  const bool have_truth = !truth_path.empty();
  if (have_truth) {
    nowcaster::attach_target(m, nowcaster::load_ground_truth_csv(truth_path));
  }

  const json model = json::parse(nowcaster::read_text_file(model_path));
  std::vector<double> raw(static_cast<size_t>(m.rows()), 0.0);
  std::vector<double> ci_low, ci_high;
  bool has_ci = false;

  if (model.contains("trees")) {
    const nowcaster::TreeEnsemble ensemble = nowcaster::load_ensemble_json(model_path);
    has_ci = ensemble.active_count >= 2;
    ci_low.resize(raw.size());
    ci_high.resize(raw.size());
    for (long r = 0; r < m.rows(); ++r) {
      const Eigen::VectorXd x = m.x.row(r).transpose();
      if (has_ci) {
        const nowcaster::EnsemblePrediction p = nowcaster::ensemble_predict_ci(ensemble, x);
        raw[static_cast<size_t>(r)] = p.mean;
        ci_low[static_cast<size_t>(r)] = p.ci_low;
        ci_high[static_cast<size_t>(r)] = p.ci_high;
      } else {
        raw[static_cast<size_t>(r)] = nowcaster::ensemble_predict(ensemble, x);
      }
    }
  } else {
    const std::vector<std::string> features =
        model.at("features").get<std::vector<std::string>>();
    const std::vector<double> weights = model.at("weights").get<std::vector<double>>();
    const double bias = model.at("bias").get<double>();
    std::vector<long> cols;
    for (const std::string& name : features) {
      std::string text = name;
      std::replace(text.begin(), text.end(), '|', ' ');
      const long idx = m.vocab.index_of(text);
      if (idx < 0) throw std::runtime_error("infer: matrix lacks feature " + name);
      cols.push_back(idx);
    }
    for (long r = 0; r < m.rows(); ++r) {
      double v = bias;
      for (size_t i = 0; i < cols.size(); ++i) v += weights[i] * m.x(r, cols[i]);
      raw[static_cast<size_t>(r)] = v;
    }
  }

  std::vector<double> inferred = no_threshold ? raw : nowcaster::threshold_negative(raw);
  std::vector<double> smoothed =
      weekly ? nowcaster::smooth_series_weekly(inferred) : inferred;

  const fs::path dir = prepare_out_dir(out);
  std::ostringstream csv;
  csv << "interval,region,actual,inferred,inferred_smoothed";
  if (has_ci) csv << ",ci_low,ci_high";
  csv << '\n';
  for (long r = 0; r < m.rows(); ++r) {
    const size_t i = static_cast<size_t>(r);
    std::string region = m.row_location[i];
    if (region.empty()) region = "all";
    csv << m.row_interval[i] << ',' << region << ','
        << (have_truth ? nowcaster::format_double(m.y(r)) : std::string("")) << ','
        << nowcaster::format_double(inferred[i]) << ','
        << nowcaster::format_double(smoothed[i]);
    if (has_ci) {
      csv << ',' << nowcaster::format_double(ci_low[i]) << ','
          << nowcaster::format_double(ci_high[i]);
    }
    csv << '\n';
  }
  nowcaster::atomic_write_file((dir / "inference.csv").string(), csv.str());

  if (have_truth) {
    const std::vector<double> actual = column_of(m.y);
    ordered_json metrics;
    metrics["rmse"] = nowcaster::rmse(inferred, actual);
    metrics["mae"] = nowcaster::mae(inferred, actual);
    metrics["pearson"] = nowcaster::pearson_correlation(inferred, actual);
    nowcaster::atomic_write_file((dir / "metrics.json").string(), metrics.dump(2) + "\n");
  }
  write_run_json(params, "infer", dir);
  return 0;
}

struct EvaluateArgs {
  std::string config, out, inference, truth;
  uint64_t seed = 42;
  int jobs = 1;
};

int run_evaluate(const CLI::App& cmd, EvaluateArgs& args) {
  Params params;
  params.load_config(args.config);
  const std::string out = params.resolve(cmd, "--out", "out", args.out, std::string("."));
  params.resolve(cmd, "--seed", "seed", args.seed, uint64_t{42});
  params.resolve(cmd, "--jobs", "jobs", args.jobs, 1);
  const std::string inference_path = params.resolve(cmd, "--inference", "inference",
                                                    args.inference, std::string());
  const std::string truth_path = params.resolve(cmd, "--truth", "truth", args.truth,
                                                std::string());
  params.check_unknown();
  if (inference_path.empty()) throw std::runtime_error("evaluate: --inference required");

  const std::vector<std::string> lines = nowcaster::read_lines(inference_path);
  if (lines.size() < 2) throw std::runtime_error("evaluate: empty inference file");
  const std::vector<std::string> header = nowcaster::split_csv_line(lines[0]);
  const auto col = [&](const std::string& name) -> long {
    for (size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return static_cast<long>(c);
    }
    return -1;
  };
  const long c_interval = col("interval");
  const long c_region = col("region");
  const long c_actual = col("actual");
  const long c_inferred = col("inferred");
  if (c_interval < 0 || c_inferred < 0) {
    throw std::runtime_error("evaluate: inference CSV needs interval and inferred columns");
  }

  std::optional<nowcaster::GroundTruthSeries> truth;
  if (!truth_path.empty()) truth = nowcaster::load_ground_truth_csv(truth_path);

  std::vector<double> predicted, actual;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> fields = nowcaster::split_csv_line(lines[i]);
    predicted.push_back(std::stod(fields[static_cast<size_t>(c_inferred)]));
    if (truth) {
      std::string region =
          c_region >= 0 ? fields[static_cast<size_t>(c_region)] : std::string("all");
      if (region == "all" && truth->regions().size() == 1) region = truth->regions()[0];
      actual.push_back(truth->lookup(
          nowcaster::parse_date(fields[static_cast<size_t>(c_interval)]), region));
    } else {
      if (c_actual < 0 || fields[static_cast<size_t>(c_actual)].empty()) {
        throw std::runtime_error("evaluate: no actual column and no --truth given");
      }
      actual.push_back(std::stod(fields[static_cast<size_t>(c_actual)]));
    }
  }

  ordered_json metrics;
  metrics["rmse"] = nowcaster::rmse(predicted, actual);
  metrics["mae"] = nowcaster::mae(predicted, actual);
  metrics["pearson"] = nowcaster::pearson_correlation(predicted, actual);

  const fs::path dir = prepare_out_dir(out);
  nowcaster::atomic_write_file((dir / "metrics.json").string(), metrics.dump(2) + "\n");
  write_run_json(params, "evaluate", dir);
  return 0;
}

// ---------------------------------------------------------------------------
// mood

struct MoodArgs {
  std::string config, out, posts, interval = "hour", scheme = "MSFMS", stoplist;
  std::vector<std::string> lexicons;  // name=path
  uint64_t seed = 42;
  int jobs = 1;
  int permutations = 1000;
  bool global_z = false;
};

int run_mood(const CLI::App& cmd, MoodArgs& args) {
  Params params;
  params.load_config(args.config);
  const std::string out = params.resolve(cmd, "--out", "out", args.out, std::string("."));
  const uint64_t seed = params.resolve(cmd, "--seed", "seed", args.seed, uint64_t{42});
  params.resolve(cmd, "--jobs", "jobs", args.jobs, 1);
  const std::string posts = params.resolve(cmd, "--posts", "posts", args.posts,
                                           std::string());
  const std::string interval = params.resolve(cmd, "--interval", "interval",
                                              args.interval, std::string("hour"));
  const std::string scheme_name = params.resolve(cmd, "--scheme", "scheme", args.scheme,
                                                 std::string("MSFMS"));
  const std::string stoplist_path = params.resolve(cmd, "--stoplist", "stoplist",
                                                   args.stoplist, std::string());
  const std::vector<std::string> lexicon_args =
      params.resolve(cmd, "--lexicon", "lexicons", args.lexicons,
                     std::vector<std::string>{});
  const int permutations = params.resolve(cmd, "--permutations", "permutations",
                                          args.permutations, 1000);
  const bool global_z = params.resolve(cmd, "--global-z", "global_z", args.global_z,
                                       false);
  params.check_unknown();
  if (posts.empty() || lexicon_args.empty()) {
    throw std::runtime_error("mood: --posts and at least one --lexicon are required");
  }
  if (scheme_name != "MFMS" && scheme_name != "MSFMS") {
    throw std::runtime_error("mood: scheme must be MFMS or MSFMS");
  }

  const int64_t interval_seconds = parse_interval_length(interval);
  const nowcaster::TimeBinnedCorpus corpus = nowcaster::load_posts_jsonl(
      posts, interval_seconds, make_pipeline(stoplist_path, true));

  std::vector<nowcaster::MoodLexicon> lexicons;
  for (const std::string& arg : lexicon_args) {
    const size_t eq = arg.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("mood: lexicon must be name=path, got " + arg);
    }
    lexicons.push_back(nowcaster::load_lexicon(arg.substr(eq + 1), arg.substr(0, eq)));
  }

  std::vector<nowcaster::MoodSeries> series;
  for (const nowcaster::MoodLexicon& lex : lexicons) {
    series.push_back(scheme_name == "MFMS" ? nowcaster::mfms(corpus, lex)
                                           : nowcaster::msfms(corpus, lex));
  }

  const fs::path dir = prepare_out_dir(out);
  std::ostringstream csv;
  csv << "interval";
  for (const nowcaster::MoodLexicon& lex : lexicons) {
    csv << ',' << lex.name << "_raw," << lex.name << "_z";
  }
  csv << '\n';
  std::vector<std::vector<double>> zscaled;
  for (const nowcaster::MoodSeries& s : series) {
    zscaled.push_back(nowcaster::zscore_scaled(s.values, 10.0, !global_z));
  }
  for (size_t i = 0; i < corpus.interval_count; ++i) {
    csv << corpus.interval_label(i);
    for (size_t l = 0; l < series.size(); ++l) {
      csv << ',' << nowcaster::format_double(series[l].values[i]) << ','
          << nowcaster::format_double(zscaled[l][i]);
    }
    csv << '\n';
  }
  nowcaster::atomic_write_file((dir / "mood.csv").string(), csv.str());

  ordered_json tests;
  for (size_t l = 0; l < series.size(); ++l) {
    ordered_json entry;
    const std::vector<double>& values = series[l].values;
    if (interval_seconds == 3600 && values.size() >= 48) {
      // whole days only, from the first midnight bin
      size_t first = 0;
      while (first < corpus.interval_count && corpus.hour_of_interval(first) != 0) ++first;
      const size_t n_days = (values.size() - first) / 24;
      if (n_days >= 2) {
        std::vector<double> aligned(values.begin() + static_cast<long>(first),
                                    values.begin() + static_cast<long>(first + n_days * 24));
        const nowcaster::CircadianPattern pattern = nowcaster::circadian_aggregate(aligned);
        Eigen::MatrixXd daily(static_cast<long>(n_days), 24);
        for (size_t d = 0; d < n_days; ++d) {
          for (size_t h = 0; h < 24; ++h) {
            daily(static_cast<long>(d), static_cast<long>(h)) = aligned[d * 24 + h];
          }
        }
        entry["stability_p"] = nowcaster::stability_pvalue(
            pattern.mean, daily, permutations, nowcaster::derive_seed(seed, 20, l));
        std::vector<int> lags{24};
        if (aligned.size() > 168) lags.push_back(168);
        const std::vector<double> pvals = nowcaster::periodicity_pvalue(
            aligned, lags, permutations, nowcaster::derive_seed(seed, 21, l));
        for (size_t k = 0; k < lags.size(); ++k) {
          entry["periodicity_p_lag" + std::to_string(lags[k])] = pvals[k];
        }
      }
    } else if (values.size() > 7) {
      std::vector<int> lags{1, 7};
      const std::vector<double> pvals = nowcaster::periodicity_pvalue(
          values, lags, permutations, nowcaster::derive_seed(seed, 21, l));
      entry["periodicity_p_lag1"] = pvals[0];
      entry["periodicity_p_lag7"] = pvals[1];
    }
    tests[lexicons[l].name] = std::move(entry);
  }
  nowcaster::atomic_write_file((dir / "mood_tests.json").string(), tests.dump(2) + "\n");
  write_run_json(params, "mood", dir);
  return 0;
}

// ---------------------------------------------------------------------------
// network / posting

struct NetworkArgs {
  std::string config, out, posts, interval = "day", stoplist;
  uint64_t seed = 42;
  int jobs = 1;
  size_t alpha = 100;
  double min_distance = 20.0;
  int windows = 2;
  int swaps = 1000;
};

int run_network(const CLI::App& cmd, NetworkArgs& args) {
  Params params;
  params.load_config(args.config);
  const std::string out = params.resolve(cmd, "--out", "out", args.out, std::string("."));
  const uint64_t seed = params.resolve(cmd, "--seed", "seed", args.seed, uint64_t{42});
  params.resolve(cmd, "--jobs", "jobs", args.jobs, 1);
  const std::string posts = params.resolve(cmd, "--posts", "posts", args.posts,
                                           std::string());
  const std::string interval = params.resolve(cmd, "--interval", "interval",
                                              args.interval, std::string("day"));
  const std::string stoplist_path = params.resolve(cmd, "--stoplist", "stoplist",
                                                   args.stoplist, std::string());
  const size_t alpha = params.resolve(cmd, "--alpha", "alpha", args.alpha, size_t{100});
  const double min_distance = params.resolve(cmd, "--min-distance", "min_distance",
                                             args.min_distance, 20.0);
  const int windows = params.resolve(cmd, "--windows", "windows", args.windows, 2);
  const int swaps = params.resolve(cmd, "--swaps", "swaps", args.swaps, 1000);
  params.check_unknown();
  if (posts.empty()) throw std::runtime_error("network: --posts is required");
  if (windows < 1) throw std::runtime_error("network: --windows must be >= 1");

  const nowcaster::TimeBinnedCorpus corpus = nowcaster::load_posts_jsonl(
      posts, parse_interval_length(interval), make_pipeline(stoplist_path, true));

  const std::vector<nowcaster::LocationPairStats> stats =
      nowcaster::average_similarity(corpus, min_distance);
  const std::map<std::string, double> impact = nowcaster::impact_scores(stats);
  const nowcaster::SimilarityNetwork net = nowcaster::build_network(stats, impact, alpha);

  const fs::path dir = prepare_out_dir(out);
  nowcaster::save_network_csv(net, (dir / "edges.csv").string(),
                              (dir / "nodes.csv").string());

  // networks over consecutive windows and their similarity-score series
  ordered_json tests;
  std::ostringstream ss_csv;
  ss_csv << "window,ss_with_previous\n";
  if (windows >= 2 && corpus.interval_count >= static_cast<size_t>(windows)) {
    std::vector<nowcaster::SimilarityNetwork> nets;
    for (int w = 0; w < windows; ++w) {
      const size_t lo = corpus.interval_count * static_cast<size_t>(w) /
                        static_cast<size_t>(windows);
      const size_t hi = corpus.interval_count * static_cast<size_t>(w + 1) /
                        static_cast<size_t>(windows);
      // sub-corpus over the window's intervals
      std::vector<nowcaster::Post> sub_posts;
      for (size_t i = lo; i < hi; ++i) {
        for (size_t pi : corpus.posts_in_interval(i)) sub_posts.push_back(corpus.posts[pi]);
      }
      if (sub_posts.empty()) throw std::runtime_error("network: empty window");
      const nowcaster::TimeBinnedCorpus sub =
          nowcaster::bin_posts(std::move(sub_posts), corpus.interval_seconds);
      const std::vector<nowcaster::LocationPairStats> sub_stats =
          nowcaster::average_similarity(sub, min_distance);
      nets.push_back(nowcaster::build_network(
          sub_stats, nowcaster::impact_scores(sub_stats), alpha));
    }
    ordered_json pairs = ordered_json::array();
    for (size_t w = 1; w < nets.size(); ++w) {
      const double ss = nowcaster::similarity_score(nets[w - 1], nets[w]);
      ss_csv << w << ',' << nowcaster::format_double(ss) << '\n';
      ordered_json pair;
      pair["t1"] = w - 1;
      pair["t2"] = w;
      pair["ss"] = ss;
      pair["stability_p"] = nowcaster::network_stability_pvalue(
          nets[w - 1], nets[w], swaps, nowcaster::derive_seed(seed, 30, w));
      pairs.push_back(std::move(pair));
    }
    tests["window_pairs"] = std::move(pairs);
  }
  nowcaster::atomic_write_file((dir / "ss_series.csv").string(), ss_csv.str());
  nowcaster::atomic_write_file((dir / "network_tests.json").string(),
                               tests.dump(2) + "\n");
  write_run_json(params, "network", dir);
  return 0;
}

struct PostingArgs {
  std::string config, out, posts, day_filter = "all";
  uint64_t seed = 42;
  int jobs = 1;
  int permutations = 1000;
};

int run_posting(const CLI::App& cmd, PostingArgs& args) {
  Params params;
  params.load_config(args.config);
  const std::string out = params.resolve(cmd, "--out", "out", args.out, std::string("."));
  const uint64_t seed = params.resolve(cmd, "--seed", "seed", args.seed, uint64_t{42});
  params.resolve(cmd, "--jobs", "jobs", args.jobs, 1);
  const std::string posts = params.resolve(cmd, "--posts", "posts", args.posts,
                                           std::string());
  const std::string filter_name = params.resolve(cmd, "--day-filter", "day_filter",
                                                 args.day_filter, std::string("all"));
  const int permutations = params.resolve(cmd, "--permutations", "permutations",
                                          args.permutations, 1000);
  params.check_unknown();
  if (posts.empty()) throw std::runtime_error("posting: --posts is required");

  nowcaster::DayFilter filter = nowcaster::DayFilter::All;
  if (filter_name == "weekday") {
    filter = nowcaster::DayFilter::Weekday;
  } else if (filter_name == "weekend") {
    filter = nowcaster::DayFilter::Weekend;
  } else if (filter_name != "all") {
    throw std::runtime_error("posting: day filter must be all|weekday|weekend");
  }

  const nowcaster::TimeBinnedCorpus corpus =
      nowcaster::load_posts_jsonl(posts, 3600, make_pipeline("", true));
  const nowcaster::HourlyPattern pattern =
      nowcaster::hourly_volume_pattern(corpus, filter, permutations, seed);

  const fs::path dir = prepare_out_dir(out);
  std::ostringstream csv;
  csv << "hour,share\n";
  for (int h = 0; h < 24; ++h) {
    csv << h << ',' << nowcaster::format_double(pattern.share[static_cast<size_t>(h)])
        << '\n';
  }
  nowcaster::atomic_write_file((dir / "posting.csv").string(), csv.str());

  ordered_json tests;
  tests["stability_p"] = pattern.stability_p;
  tests["days"] = pattern.days;
  nowcaster::atomic_write_file((dir / "posting_tests.json").string(),
                               tests.dump(2) + "\n");
  write_run_json(params, "posting", dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"text-stream nowcasting toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--config", synth_args.config);
  synth->add_option("--out", synth_args.out);
  synth->add_option("--seed", synth_args.seed);
  synth->add_option("--jobs", synth_args.jobs);
  synth->add_option("--days", synth_args.days);
  synth->add_option("--posts-per-bin", synth_args.posts_per_bin);
  synth->add_option("--location", synth_args.locations);
  synth->add_option("--signal-terms", synth_args.signal_terms);
  synth->add_option("--signal-slope", synth_args.signal_slope);
  synth->add_option("--signal-base", synth_args.signal_base);
  synth->add_option("--noise-terms", synth_args.noise_terms);
  synth->add_option("--noise-rate", synth_args.noise_rate);
  synth->add_option("--confounder-terms", synth_args.confounder_terms);
  synth->add_option("--confounder-spike", synth_args.confounder_spike);
  synth->add_option("--confounder-width", synth_args.confounder_width);
  synth->add_option("--target", synth_args.target);
  synth->add_option("--start-date", synth_args.start_date);

  FeaturesArgs features_args;
  CLI::App* features = app.add_subcommand("features", "build a candidate vocabulary");
  features->add_option("--config", features_args.config);
  features->add_option("--out", features_args.out);
  features->add_option("--seed", features_args.seed);
  features->add_option("--jobs", features_args.jobs);
  features->add_option("--posts", features_args.posts);
  features->add_option("--ref", features_args.refs);
  features->add_option("--stoplist", features_args.stoplist);
  features->add_option("--arity", features_args.arity);
  features->add_option("--min-count", features_args.min_count);

  MatrixArgs matrix_args;
  CLI::App* matrix = app.add_subcommand("score-matrix", "build a score matrix");
  matrix->add_option("--config", matrix_args.config);
  matrix->add_option("--out", matrix_args.out);
  matrix->add_option("--seed", matrix_args.seed);
  matrix->add_option("--jobs", matrix_args.jobs);
  matrix->add_option("--posts", matrix_args.posts);
  matrix->add_option("--vocab", matrix_args.vocab);
  matrix->add_option("--stoplist", matrix_args.stoplist);
  matrix->add_option("--location", matrix_args.location);
  matrix->add_option("--interval", matrix_args.interval);
  matrix->add_option("--arity", matrix_args.arity);
  matrix->add_flag("--raw-counts", matrix_args.raw_counts);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "select features and fit a model");
  train->add_option("--config", train_args.config);
  train->add_option("--out", train_args.out);
  train->add_option("--seed", train_args.seed);
  train->add_option("--jobs", train_args.jobs);
  train->add_option("--matrix-u", train_args.matrix_u);
  train->add_option("--matrix-b", train_args.matrix_b);
  train->add_option("--truth", train_args.truth);
  train->add_option("--learner", train_args.learner);
  train->add_option("--hybrid", train_args.hybrid);
  train->add_option("--val-frac", train_args.val_frac);
  train->add_option("--bootstraps", train_args.bootstraps);
  train->add_option("--max-features", train_args.max_features);
  train->add_option("--baseline-k", train_args.baseline_k);
  train->add_option("--tree-bootstraps", train_args.tree_bootstraps);
  train->add_option("--min-leaf", train_args.min_leaf);

  InferArgs infer_args;
  CLI::App* infer = app.add_subcommand("infer", "apply a model to a score matrix");
  infer->add_option("--config", infer_args.config);
  infer->add_option("--out", infer_args.out);
  infer->add_option("--seed", infer_args.seed);
  infer->add_option("--jobs", infer_args.jobs);
  infer->add_option("--model", infer_args.model);
  infer->add_option("--matrix", infer_args.matrix);
  infer->add_option("--truth", infer_args.truth);
  infer->add_flag("--no-threshold", infer_args.no_threshold);
  infer->add_flag("--weekly-smoothing", infer_args.weekly_smoothing);

  EvaluateArgs evaluate_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "metrics for an inference CSV");
  evaluate->add_option("--config", evaluate_args.config);
  evaluate->add_option("--out", evaluate_args.out);
  evaluate->add_option("--seed", evaluate_args.seed);
  evaluate->add_option("--jobs", evaluate_args.jobs);
  evaluate->add_option("--inference", evaluate_args.inference);
  evaluate->add_option("--truth", evaluate_args.truth);

  MoodArgs mood_args;
  CLI::App* mood = app.add_subcommand("mood", "lexicon mood scoring");
  mood->add_option("--config", mood_args.config);
  mood->add_option("--out", mood_args.out);
  mood->add_option("--seed", mood_args.seed);
  mood->add_option("--jobs", mood_args.jobs);
  mood->add_option("--posts", mood_args.posts);
  mood->add_option("--interval", mood_args.interval);
  mood->add_option("--scheme", mood_args.scheme);
  mood->add_option("--stoplist", mood_args.stoplist);
  mood->add_option("--lexicon", mood_args.lexicons);
  mood->add_option("--permutations", mood_args.permutations);
  mood->add_flag("--global-z", mood_args.global_z);

  NetworkArgs network_args;
  CLI::App* network = app.add_subcommand("network", "content-similarity networks");
  network->add_option("--config", network_args.config);
  network->add_option("--out", network_args.out);
  network->add_option("--seed", network_args.seed);
  network->add_option("--jobs", network_args.jobs);
  network->add_option("--posts", network_args.posts);
  network->add_option("--interval", network_args.interval);
  network->add_option("--stoplist", network_args.stoplist);
  network->add_option("--alpha", network_args.alpha);
  network->add_option("--min-distance", network_args.min_distance);
  network->add_option("--windows", network_args.windows);
  network->add_option("--swaps", network_args.swaps);

  PostingArgs posting_args;
  CLI::App* posting = app.add_subcommand("posting", "posting-time patterns");
  posting->add_option("--config", posting_args.config);
  posting->add_option("--out", posting_args.out);
  posting->add_option("--seed", posting_args.seed);
  posting->add_option("--jobs", posting_args.jobs);
  posting->add_option("--posts", posting_args.posts);
  posting->add_option("--day-filter", posting_args.day_filter);
  posting->add_option("--permutations", posting_args.permutations);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(*synth, synth_args);
    if (features->parsed()) return run_features(*features, features_args);
    if (matrix->parsed()) return run_score_matrix(*matrix, matrix_args);
    if (train->parsed()) return run_train(*train, train_args);
    if (infer->parsed()) return run_infer(*infer, infer_args);
    if (evaluate->parsed()) return run_evaluate(*evaluate, evaluate_args);
    if (mood->parsed()) return run_mood(*mood, mood_args);
    if (network->parsed()) return run_network(*network, network_args);
    if (posting->parsed()) return run_posting(*posting, posting_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
