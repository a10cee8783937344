#include "nowcaster/vsm.hpp"

#include <algorithm>
#include <ranges>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "nowcaster/io.hpp"

namespace nowcaster {

bool ScoreMatrix::stacked() const {
  for (const std::string& loc : row_location) {
    if (!loc.empty()) return true;
  }
  return false;
}

long count_occurrences(std::span<const Token> tokens, const NGram& gram) {
  const size_t n = gram.arity();
  if (tokens.size() < n || n == 0) return 0;
  long count = 0;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    bool match = true;
    for (size_t k = 0; k < n; ++k) {
      if (tokens[i + k] != gram.tokens[k]) {
        match = false;
        break;
      }
    }
    if (match) ++count;
  }
  return count;
}

bool contains_gram(std::span<const Token> tokens, const NGram& gram) {
  return count_occurrences(tokens, gram) > 0;
}

namespace {

double score_from_posts(const NGram& marker, auto&& post_range, size_t n_posts,
                        bool boolean_mode) {
  if (n_posts == 0) throw std::invalid_argument("marker_score: empty posts");
  double sum = 0.0;
  for (const Post& p : post_range) {
    const long c = count_occurrences(p.tokens, marker);
    sum += boolean_mode ? (c > 0 ? 1.0 : 0.0) : static_cast<double>(c);
  }
  return sum / static_cast<double>(n_posts);
}

}  // namespace

double marker_score(const NGram& marker, std::span<const Post> posts, bool boolean_mode) {
  return score_from_posts(marker, posts, posts.size(), boolean_mode);
}

double marker_score_bin(const NGram& marker, const TimeBinnedCorpus& corpus,
                        size_t interval, size_t location, bool boolean_mode) {
  const auto indices = corpus.bin(interval, location);
  auto range = indices | std::views::transform(
                             [&](size_t i) -> const Post& { return corpus.posts[i]; });
  return score_from_posts(marker, range, indices.size(), boolean_mode);
}

ScoreMatrix build_score_matrix(const FeatureVocabulary& vocab,
                               const TimeBinnedCorpus& corpus,
                               const std::optional<std::string>& location_filter,
                               bool boolean_mode) {
  if (corpus.interval_count == 0) throw std::invalid_argument("corpus has no intervals");

  std::vector<size_t> location_ids;
  if (location_filter) {
    location_ids.push_back(corpus.location_index(*location_filter));
  } else {
    for (size_t l = 0; l < corpus.locations.size(); ++l) location_ids.push_back(l);
  }
  const bool stacked = !location_filter && corpus.locations.size() > 1;

  // arities present in the vocabulary (mixed for class UB)
  std::set<int> arities;
  for (const NGram& g : vocab.entries) arities.insert(static_cast<int>(g.arity()));

  ScoreMatrix m;
  m.vocab = vocab;
  m.vocab.rebuild_index();
  const size_t n_rows = location_ids.size() * corpus.interval_count;
  m.x = Eigen::MatrixXd::Zero(static_cast<long>(n_rows), static_cast<long>(vocab.size()));
  m.row_interval.resize(n_rows);
  m.row_location.resize(n_rows);

  size_t row = 0;
  std::vector<double> acc(vocab.size());
  std::vector<long> touched;
  for (size_t loc : location_ids) {
    for (size_t interval = 0; interval < corpus.interval_count; ++interval, ++row) {
      m.row_interval[row] = corpus.interval_label(interval);
      m.row_location[row] = stacked || location_filter ? corpus.locations[loc] : "";
      const auto indices = corpus.bin(interval, loc);
      if (indices.empty()) {
        warn("empty bin: interval " + corpus.interval_label(interval) + ", location " +
             corpus.locations[loc] + "; scores set to 0");
        continue;
      }
      std::fill(acc.begin(), acc.end(), 0.0);
      touched.clear();
      for (size_t pi : indices) {
        const Post& p = corpus.posts[pi];
        for (int n : arities) {
          if (p.tokens.size() < static_cast<size_t>(n)) continue;
          if (boolean_mode) {
            // each marker counted at most once per post
            touched.clear();
            for (size_t i = 0; i + n <= p.tokens.size(); ++i) {
              NGram g;
              g.tokens.assign(p.tokens.begin() + i, p.tokens.begin() + i + n);
              const long idx = m.vocab.index_of(g.text());
              if (idx >= 0 &&
                  std::find(touched.begin(), touched.end(), idx) == touched.end()) {
                touched.push_back(idx);
              }
            }
            for (long idx : touched) acc[idx] += 1.0;
          } else {
            for (size_t i = 0; i + n <= p.tokens.size(); ++i) {
              NGram g;
              g.tokens.assign(p.tokens.begin() + i, p.tokens.begin() + i + n);
              const long idx = m.vocab.index_of(g.text());
              if (idx >= 0) acc[idx] += 1.0;
            }
          }
        }
      }
      const double n_posts = static_cast<double>(indices.size());
      for (size_t c = 0; c < vocab.size(); ++c) {
        m.x(static_cast<long>(row), static_cast<long>(c)) = acc[c] / n_posts;
      }
    }
  }
  return m;
}

double topic_score(std::span<const NGram> markers, std::span<const Post> posts) {
  if (markers.empty() || posts.empty()) {
    throw std::invalid_argument("topic_score: markers and posts must be non-empty");
  }
  double sum = 0.0;
  for (const Post& p : posts) {
    for (const NGram& marker : markers) {
      if (contains_gram(p.tokens, marker)) sum += 1.0;
    }
  }
  return sum / (static_cast<double>(markers.size()) * static_cast<double>(posts.size()));
}

WeightedTopicScore weighted_topic_score(std::span<const NGram> markers,
                                        std::span<const double> weights,
                                        std::span<const Post> posts) {
  if (markers.size() != weights.size()) {
    throw std::invalid_argument("weighted_topic_score: |weights| != |markers|");
  }
  if (markers.empty() || posts.empty()) {
    throw std::invalid_argument("weighted_topic_score: markers and posts must be non-empty");
  }
  WeightedTopicScore out;
  out.subscores.resize(markers.size(), 0.0);
  const double kn = static_cast<double>(markers.size()) * static_cast<double>(posts.size());
  for (size_t i = 0; i < markers.size(); ++i) {
    double count = 0.0;
    for (const Post& p : posts) {
      if (contains_gram(p.tokens, markers[i])) count += 1.0;
    }
    out.subscores[i] = weights[i] * count / kn;
    out.total += out.subscores[i];
  }
  return out;
}

Eigen::MatrixXd tf_idf(std::span<const std::vector<Token>> documents,
                       const FeatureVocabulary& vocab) {
  const long m = static_cast<long>(documents.size());
  const long n = static_cast<long>(vocab.size());
  if (m < 1) throw std::invalid_argument("tf_idf: need at least one document");

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(m, n);
  for (long j = 0; j < m; ++j) {
    for (long i = 0; i < n; ++i) {
      counts(j, i) =
          static_cast<double>(count_occurrences(documents[j], vocab.entries[i]));
    }
  }

  Eigen::VectorXd df = Eigen::VectorXd::Zero(n);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < m; ++j) {
      if (counts(j, i) > 0) df(i) += 1.0;
    }
  }

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, n);
  for (long j = 0; j < m; ++j) {
    const double max_count = counts.row(j).maxCoeff();
    if (max_count == 0.0) {
      warn("tf_idf: document " + std::to_string(j) + " contains no vocabulary terms");
      continue;
    }
    for (long i = 0; i < n; ++i) {
      if (counts(j, i) == 0.0 || df(i) == 0.0) continue;
      const double tf = counts(j, i) / max_count;
      const double idf = std::log(static_cast<double>(m) / df(i));
      w(j, i) = tf * idf;
    }
  }
  return w;
}

void save_score_matrix(const ScoreMatrix& m, const std::string& path) {
  std::ostringstream out;
  const bool stacked = m.stacked();
  out << "interval";
  if (stacked) out << ",location";
  for (const NGram& g : m.vocab.entries) out << ',' << g.csv_label();
  out << '\n';
  for (long r = 0; r < m.rows(); ++r) {
    out << m.row_interval[static_cast<size_t>(r)];
    if (stacked) out << ',' << m.row_location[static_cast<size_t>(r)];
    for (long c = 0; c < m.cols(); ++c) out << ',' << format_double(m.x(r, c));
    out << '\n';
  }
  atomic_write_file(path, out.str());
}

ScoreMatrix load_score_matrix(const std::string& path, FeatureClass feature_class) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty score matrix file: " + path);

  const std::vector<std::string> header = split_csv_line(lines[0]);
  if (header.empty() || header[0] != "interval") {
    throw std::runtime_error("bad score matrix header in " + path);
  }
  const bool stacked = header.size() > 1 && header[1] == "location";
  const size_t id_cols = stacked ? 2 : 1;

  ScoreMatrix m;
  m.vocab.feature_class = feature_class;
  for (size_t c = id_cols; c < header.size(); ++c) {
    NGram g;
    std::istringstream ss(header[c]);
    Token t;
    while (std::getline(ss, t, '|')) g.tokens.push_back(t);
    m.vocab.entries.push_back(std::move(g));
  }
  m.vocab.rebuild_index();

  const long n_rows = static_cast<long>(lines.size()) - 1;
  m.x = Eigen::MatrixXd::Zero(n_rows, static_cast<long>(m.vocab.size()));
  m.row_interval.resize(static_cast<size_t>(n_rows));
  m.row_location.resize(static_cast<size_t>(n_rows));
  for (long r = 0; r < n_rows; ++r) {
    const std::vector<std::string> fields = split_csv_line(lines[static_cast<size_t>(r) + 1]);
    if (fields.size() != header.size()) {
      throw std::runtime_error("row width mismatch in " + path);
    }
    m.row_interval[static_cast<size_t>(r)] = fields[0];
    if (stacked) m.row_location[static_cast<size_t>(r)] = fields[1];
    for (size_t c = id_cols; c < fields.size(); ++c) {
      m.x(r, static_cast<long>(c - id_cols)) = std::stod(fields[c]);
    }
  }
  return m;
}

}  // namespace nowcaster
