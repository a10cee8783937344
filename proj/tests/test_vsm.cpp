#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "nowcaster/io.hpp"
#include "nowcaster/rng.hpp"
#include "nowcaster/vsm.hpp"

using namespace nowcaster;

namespace {

Post make_post(const std::string& id, int64_t time, const std::string& loc,
               const std::string& text) {
  Post p;
  p.id = id;
  p.time = time;
  p.location = loc;
  p.tokens = tokenize(text);
  return p;
}

NGram gram(const std::string& text) {
  NGram g;
  std::string token;
  for (char c : text) {
    if (c == ' ') {
      g.tokens.push_back(token);
      token.clear();
    } else {
      token += c;
    }
  }
  g.tokens.push_back(token);
  return g;
}

}  // namespace

TEST_CASE("marker_score") {
  std::vector<Post> posts = {
      make_post("a", 0, "x", "rain rain rain today"),
      make_post("b", 1, "x", "sunny day"),
      make_post("c", 2, "x", "rain tomorrow"),
      make_post("d", 3, "x", "clear skies"),
  };
  CHECK(marker_score(gram("snow"), posts, true) == 0.0);
  CHECK(marker_score(gram("rain"), posts, true) == doctest::Approx(0.5).epsilon(1e-15));
  // 3 occurrences in one post of two, raw-count mode
  std::vector<Post> two = {posts[0], posts[1]};
  CHECK(marker_score(gram("rain"), two, false) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_AS(marker_score(gram("rain"), std::vector<Post>{}, true),
                  std::invalid_argument);
}

TEST_CASE("boolean scores stay in [0,1] and ignore duplication") {
  std::vector<Post> posts;
  for (int i = 0; i < 6; ++i) {
    posts.push_back(make_post(std::to_string(i), i, "x",
                              i % 2 ? "rain rain rain" : "dry spell"));
  }
  const double score = marker_score(gram("rain"), posts, true);
  CHECK(score >= 0.0);
  CHECK(score <= 1.0);
  std::vector<Post> doubled = posts;
  doubled.insert(doubled.end(), posts.begin(), posts.end());
  CHECK(marker_score(gram("rain"), doubled, true) == doctest::Approx(score).epsilon(1e-15));
}

namespace {

TimeBinnedCorpus synth_corpus_5x3() {
  // 5 daily intervals, 1 location, varying term mix
  std::vector<Post> posts;
  Rng rng(99);
  const char* terms[] = {"rain", "wet", "flood"};
  int id = 0;
  for (int day = 0; day < 5; ++day) {
    const int n_posts = 3 + static_cast<int>(rng.next_below(4));
    for (int p = 0; p < n_posts; ++p) {
      std::string text = "filler";
      for (const char* t : terms) {
        if (rng.next_double() < 0.4) {
          text += ' ';
          text += t;
        }
      }
      posts.push_back(make_post("p" + std::to_string(id++), (14000 + day) * 86400 + p, "x",
                                text));
    }
  }
  return bin_posts(std::move(posts), 86400);
}

FeatureVocabulary vocab_of(const std::vector<std::string>& texts, FeatureClass cls) {
  FeatureVocabulary v;
  v.feature_class = cls;
  for (const std::string& t : texts) v.entries.push_back(gram(t));
  v.rebuild_index();
  return v;
}

}  // namespace

TEST_CASE("build_score_matrix equals the cell-wise oracle") {
  const TimeBinnedCorpus corpus = synth_corpus_5x3();
  const FeatureVocabulary vocab = vocab_of({"flood", "rain", "wet"}, FeatureClass::U);
  const ScoreMatrix m = build_score_matrix(vocab, corpus, std::nullopt, true);
  REQUIRE(m.rows() == 5);
  REQUIRE(m.cols() == 3);
  for (size_t i = 0; i < corpus.interval_count; ++i) {
    for (size_t c = 0; c < vocab.size(); ++c) {
      const double oracle = marker_score_bin(vocab.entries[c], corpus, i, 0, true);
      CHECK(m.x(static_cast<long>(i), static_cast<long>(c)) ==
            doctest::Approx(oracle).epsilon(1e-15));
    }
  }
}

TEST_CASE("score matrix edge cases") {
  std::vector<Post> posts = {make_post("a", 0, "x", "rain here"),
                             make_post("b", 10, "x", "rain there")};
  const TimeBinnedCorpus corpus = bin_posts(std::move(posts), 86400);

  const ScoreMatrix one = build_score_matrix(vocab_of({"rain"}, FeatureClass::U), corpus,
                                             std::nullopt, true);
  REQUIRE(one.rows() == 1);
  CHECK(one.x(0, 0) == 1.0);

  FeatureVocabulary empty;
  empty.feature_class = FeatureClass::U;
  empty.rebuild_index();
  const ScoreMatrix zero_cols = build_score_matrix(empty, corpus, std::nullopt, true);
  CHECK(zero_cols.rows() == 1);
  CHECK(zero_cols.cols() == 0);
}

TEST_CASE("empty bins produce zero rows and a warning") {
  std::vector<Post> posts = {make_post("a", 0, "x", "rain"),
                             make_post("b", 2 * 86400, "x", "rain")};
  const TimeBinnedCorpus corpus = bin_posts(std::move(posts), 86400);
  int warnings = 0;
  set_warn_handler([&](const std::string&) { ++warnings; });
  const ScoreMatrix m = build_score_matrix(vocab_of({"rain"}, FeatureClass::U), corpus,
                                           std::nullopt, true);
  set_warn_handler(nullptr);
  REQUIRE(m.rows() == 3);
  CHECK(m.x(1, 0) == 0.0);
  CHECK(warnings == 1);
}

TEST_CASE("topic_score") {
  std::vector<Post> posts;
  for (int i = 0; i < 4; ++i) {
    posts.push_back(make_post(std::to_string(i), i, "x",
                              i < 2 ? "flu fever aches" : "sunny walk"));
  }
  // one marker in every post
  std::vector<Post> all;
  for (int i = 0; i < 3; ++i) all.push_back(make_post(std::to_string(i), i, "x", "flu"));
  CHECK(topic_score(std::vector<NGram>{gram("flu")}, all) == 1.0);

  // one marker in half the posts, one absent
  const std::vector<NGram> two{gram("flu"), gram("cough")};
  CHECK(topic_score(two, posts) == doctest::Approx(0.25).epsilon(1e-15));

  // equals the mean of Boolean marker scores
  const std::vector<NGram> three{gram("flu"), gram("fever"), gram("sunny")};
  double mean_scores = 0.0;
  for (const NGram& g : three) mean_scores += marker_score(g, posts, true);
  mean_scores /= 3.0;
  CHECK(topic_score(three, posts) == doctest::Approx(mean_scores).epsilon(1e-12));

  // invariance under marker and post reordering
  std::vector<NGram> reordered{three[2], three[0], three[1]};
  std::vector<Post> shuffled{posts[3], posts[0], posts[2], posts[1]};
  CHECK(topic_score(reordered, shuffled) == doctest::Approx(topic_score(three, posts)));

  CHECK_THROWS_AS(topic_score(std::vector<NGram>{}, posts), std::invalid_argument);
  CHECK_THROWS_AS(topic_score(two, std::vector<Post>{}), std::invalid_argument);
}

TEST_CASE("weighted_topic_score") {
  std::vector<Post> posts;
  for (int i = 0; i < 5; ++i) {
    posts.push_back(make_post(std::to_string(i), i, "x",
                              i % 2 ? "flu fever" : "fever dream"));
  }
  const std::vector<NGram> markers{gram("flu"), gram("fever"), gram("dream")};

  const std::vector<double> ones{1.0, 1.0, 1.0};
  const WeightedTopicScore w1 = weighted_topic_score(markers, ones, posts);
  CHECK(w1.total == doctest::Approx(topic_score(markers, posts)).epsilon(1e-12));

  const std::vector<double> zeros{0.0, 0.0, 0.0};
  CHECK(weighted_topic_score(markers, zeros, posts).total == 0.0);

  // brute-force double sum oracle
  const std::vector<double> weights{0.3, -1.2, 2.5};
  const WeightedTopicScore got = weighted_topic_score(markers, weights, posts);
  const double kn = static_cast<double>(markers.size() * posts.size());
  double expect_total = 0.0;
  for (size_t i = 0; i < markers.size(); ++i) {
    double count = 0.0;
    for (const Post& p : posts) {
      if (contains_gram(p.tokens, markers[i])) count += 1.0;
    }
    const double sub = weights[i] * count / kn;
    CHECK(got.subscores[i] == doctest::Approx(sub).epsilon(1e-12));
    expect_total += sub;
  }
  CHECK(got.total == doctest::Approx(expect_total).epsilon(1e-12));

  CHECK_THROWS_AS(weighted_topic_score(markers, std::vector<double>{1.0}, posts),
                  std::invalid_argument);
}

TEST_CASE("tf_idf") {
  const FeatureVocabulary vocab = vocab_of({"a", "b"}, FeatureClass::U);
  // doc1: a a b ; doc2: a
  std::vector<std::vector<Token>> docs{{"a", "a", "b"}, {"a"}};
  const Eigen::MatrixXd w = tf_idf(docs, vocab);

  // term in every document -> idf 0
  CHECK(w(0, 0) == 0.0);
  CHECK(w(1, 0) == 0.0);
  // term absent from a document -> 0
  CHECK(w(1, 1) == 0.0);
  // hand case: tf(b, doc1) = 1/2, idf(b) = ln(2)
  CHECK(w(0, 1) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));

  // non-negative everywhere; doubling counts in one document keeps its tf
  CHECK((w.array() >= 0.0).all());
  std::vector<std::vector<Token>> scaled{{"a", "a", "a", "a", "b", "b"}, {"a"}};
  const Eigen::MatrixXd w2 = tf_idf(scaled, vocab);
  CHECK(w2(0, 1) == doctest::Approx(w(0, 1)).epsilon(1e-12));
}

TEST_CASE("score matrix CSV round-trip is exact") {
  const TimeBinnedCorpus corpus = synth_corpus_5x3();
  const FeatureVocabulary vocab = vocab_of({"flood", "rain", "wet"}, FeatureClass::U);
  ScoreMatrix m = build_score_matrix(vocab, corpus, std::nullopt, true);
  m.x(0, 0) = 1.0 / 3.0;  // a value with no short decimal form
  const std::string path = "/tmp/nowcaster_test_matrix.csv";
  save_score_matrix(m, path);
  const ScoreMatrix back = load_score_matrix(path, FeatureClass::U);
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  CHECK(back.x == m.x);
  CHECK(back.row_interval == m.row_interval);
  std::remove(path.c_str());
}
