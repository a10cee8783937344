#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nowcaster/corpus.hpp"
#include "nowcaster/text.hpp"

namespace nowcaster {

// Per-interval (and per-location when stacked) feature scores with an
// optionally attached target vector.
struct ScoreMatrix {
  Eigen::MatrixXd x;  // rows x |vocabulary|
  FeatureVocabulary vocab;
  std::vector<std::string> row_interval;
  std::vector<std::string> row_location;  // empty strings when not stacked
  Eigen::VectorXd y;                      // size 0 when no target attached

  long rows() const { return x.rows(); }
  long cols() const { return x.cols(); }
  bool has_target() const { return y.size() == x.rows(); }
  bool stacked() const;
};

// Number of occurrences of the n-gram in a token sequence.
long count_occurrences(std::span<const Token> tokens, const NGram& gram);
bool contains_gram(std::span<const Token> tokens, const NGram& gram);

// Normalised marker frequency over a set of posts. boolean_mode restricts
// the per-post contribution to presence (0/1), so the score lies in [0,1];
// otherwise raw occurrence counts are summed. Throws on empty posts.
double marker_score(const NGram& marker, std::span<const Post> posts, bool boolean_mode);

// Score of one (interval, location) bin straight from the corpus.
double marker_score_bin(const NGram& marker, const TimeBinnedCorpus& corpus,
                        size_t interval, size_t location, bool boolean_mode);

// Row per interval; when the corpus has several locations and no filter is
// given, rows are stacked location-major (all intervals of the first
// location, then the next). Empty bins produce zero rows and a warning.
ScoreMatrix build_score_matrix(const FeatureVocabulary& vocab,
                               const TimeBinnedCorpus& corpus,
                               const std::optional<std::string>& location_filter,
                               bool boolean_mode);

// Mean Boolean marker score over the marker set (f(T, M) in the tweet-score
// scheme). Throws when markers or posts are empty.
double topic_score(std::span<const NGram> markers, std::span<const Post> posts);

struct WeightedTopicScore {
  double total = 0.0;
  std::vector<double> subscores;  // one per marker
};

WeightedTopicScore weighted_topic_score(std::span<const NGram> markers,
                                        std::span<const double> weights,
                                        std::span<const Post> posts);

// TF-IDF weights, rows = documents, columns = vocabulary terms.
// tf is max-normalised within each document over vocabulary terms; idf uses
// the natural log. A document with no vocabulary terms yields a zero row.
Eigen::MatrixXd tf_idf(std::span<const std::vector<Token>> documents,
                       const FeatureVocabulary& vocab);

void save_score_matrix(const ScoreMatrix& m, const std::string& path);
ScoreMatrix load_score_matrix(const std::string& path, FeatureClass feature_class);

}  // namespace nowcaster
