#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nowcaster/io.hpp"
#include "nowcaster/mood.hpp"
#include "nowcaster/rng.hpp"
#include "nowcaster/stats.hpp"
#include "test_oracles.hpp"

using namespace nowcaster;
using namespace test_oracles;

namespace {

Post hourly_post(int id, int64_t hour_index, const std::string& text) {
  Post p;
  p.id = std::to_string(id);
  p.time = hour_index * 3600;
  p.location = "town";
  p.tokens = tokenize(text);
  return p;
}

MoodLexicon lexicon_of(const std::string& name, std::vector<Token> stems) {
  MoodLexicon lex;
  lex.name = name;
  std::sort(stems.begin(), stems.end());
  lex.stems = std::move(stems);
  return lex;
}

// deterministic corpus over `hours` hourly bins with word probabilities
TimeBinnedCorpus random_mood_corpus(int hours, int posts_per_hour, uint64_t seed) {
  Rng rng(seed);
  std::vector<Post> posts;
  int id = 0;
  const char* words[] = {"joy", "grin", "smile", "calm", "blue"};
  for (int h = 0; h < hours; ++h) {
    for (int p = 0; p < posts_per_hour; ++p) {
      std::string text = "base";
      for (const char* w : words) {
        if (rng.next_double() < 0.3) {
          text += ' ';
          text += w;
        }
      }
      posts.push_back(hourly_post(id++, h, text));
    }
  }
  return bin_posts(std::move(posts), 3600);
}

}  // namespace

TEST_CASE("mfms basics and per-cell oracle") {
  // one stem appearing once per post scores 1 everywhere
  std::vector<Post> posts;
  for (int h = 0; h < 3; ++h) {
    for (int p = 0; p < 4; ++p) {
      posts.push_back(hourly_post(h * 10 + p, h, "joy and calm"));
    }
  }
  const TimeBinnedCorpus corpus = bin_posts(std::move(posts), 3600);
  const MoodSeries ones = mfms(corpus, lexicon_of("joy", {"joy"}));
  for (double v : ones.values) CHECK(v == 1.0);

  const MoodSeries zero = mfms(corpus, lexicon_of("anger", {"rage"}));
  for (double v : zero.values) CHECK(v == 0.0);

  // random corpus matches an independent count/N/mean recomputation
  const TimeBinnedCorpus random = random_mood_corpus(6, 10, 4);
  const MoodLexicon lex = lexicon_of("mix", {"joy", "grin", "blue"});
  const MoodSeries series = mfms(random, lex);
  for (size_t i = 0; i < random.interval_count; ++i) {
    const std::vector<size_t> ids = random.posts_in_interval(i);
    double mean_freq = 0.0;
    for (const Token& stem : lex.stems) {
      long count = 0;
      for (size_t pi : ids) {
        const auto& toks = random.posts[pi].tokens;
        if (std::find(toks.begin(), toks.end(), stem) != toks.end()) ++count;
      }
      mean_freq += static_cast<double>(count) / static_cast<double>(ids.size());
    }
    mean_freq /= static_cast<double>(lex.stems.size());
    CHECK(series.values[i] == doctest::Approx(mean_freq).epsilon(1e-12));
  }

  CHECK_THROWS_AS(mfms(corpus, MoodLexicon{"empty", {}}), std::invalid_argument);
}

TEST_CASE("mfms is linear in the lexicon") {
  const TimeBinnedCorpus corpus = random_mood_corpus(8, 12, 9);
  const MoodLexicon a = lexicon_of("a", {"joy", "grin"});
  const MoodLexicon b = lexicon_of("b", {"blue", "calm", "smile"});
  const MoodLexicon both = lexicon_of("ab", {"joy", "grin", "blue", "calm", "smile"});

  const MoodSeries sa = mfms(corpus, a);
  const MoodSeries sb = mfms(corpus, b);
  const MoodSeries sboth = mfms(corpus, both);
  for (size_t i = 0; i < sboth.values.size(); ++i) {
    const double expect = (2.0 * sa.values[i] + 3.0 * sb.values[i]) / 5.0;
    CHECK(sboth.values[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("msfms standardisation properties") {
  const TimeBinnedCorpus corpus = random_mood_corpus(10, 8, 12);

  // single term: z-scored series with mean 0
  const MoodSeries single = msfms(corpus, lexicon_of("one", {"joy"}));
  double mean_val = 0.0;
  for (double v : single.values) mean_val += v;
  CHECK(std::abs(mean_val / static_cast<double>(single.values.size())) < 1e-10);

  // output mean over intervals is 0 for any lexicon
  const MoodSeries multi = msfms(corpus, lexicon_of("many", {"joy", "grin", "blue"}));
  double total = 0.0;
  for (double v : multi.values) total += v;
  CHECK(std::abs(total / static_cast<double>(multi.values.size())) < 1e-10);

  // invariance under independent positive rescaling of each term's counts
  const MoodLexicon lex = lexicon_of("many", {"joy", "grin", "blue"});
  const Eigen::MatrixXd freq = term_frequencies(corpus, lex);
  Eigen::MatrixXd scaled = freq;
  scaled.col(0) *= 3.7;
  scaled.col(1) *= 0.2;
  scaled.col(2) *= 12.0;
  const MoodSeries base = msfms_from_frequencies(freq, 3600);
  const MoodSeries rescaled = msfms_from_frequencies(scaled, 3600);
  for (size_t i = 0; i < base.values.size(); ++i) {
    CHECK(rescaled.values[i] == doctest::Approx(base.values[i]).epsilon(1e-10));
  }

  // zero-variance terms are dropped with a warning
  Eigen::MatrixXd with_const(4, 2);
  with_const << 1, 5, 2, 5, 3, 5, 4, 5;
  int warnings = 0;
  set_warn_handler([&](const std::string&) { ++warnings; });
  const MoodSeries dropped = msfms_from_frequencies(with_const, 3600);
  set_warn_handler(nullptr);
  CHECK(warnings == 1);
  const std::vector<double> z = zscores(std::vector<double>{1, 2, 3, 4});
  for (size_t i = 0; i < 4; ++i) {
    CHECK(dropped.values[i] == doctest::Approx(z[i]).epsilon(1e-12));
  }

  // all-degenerate lexicon is an error
  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(4, 2, 0.5);
  CHECK_THROWS_AS(msfms_from_frequencies(constant, 3600), std::runtime_error);
}

TEST_CASE("circadian_aggregate") {
  // identical days: zero-width intervals
  std::vector<double> two_days;
  for (int d = 0; d < 2; ++d) {
    for (int h = 0; h < 24; ++h) two_days.push_back(static_cast<double>(h));
  }
  const CircadianPattern same = circadian_aggregate(two_days);
  for (int h = 0; h < 24; ++h) {
    CHECK(same.mean[static_cast<size_t>(h)] == h);
    CHECK(same.ci_low[static_cast<size_t>(h)] == same.ci_high[static_cast<size_t>(h)]);
  }

  // single day: means equal that day
  std::vector<double> one_day(two_days.begin(), two_days.begin() + 24);
  const CircadianPattern single = circadian_aggregate(one_day);
  for (int h = 0; h < 24; ++h) CHECK(single.mean[static_cast<size_t>(h)] == h);

  // random input matches a column-mean oracle; deviations sum to zero
  Rng rng(31);
  std::vector<double> values(24 * 5);
  for (double& v : values) v = rng.normal();
  const CircadianPattern pattern = circadian_aggregate(values);
  double grand = 0.0;
  for (double v : values) grand += v;
  grand /= static_cast<double>(values.size());
  double deviation_sum = 0.0;
  for (int h = 0; h < 24; ++h) {
    double col = 0.0;
    for (int d = 0; d < 5; ++d) col += values[static_cast<size_t>(d * 24 + h)];
    col /= 5.0;
    CHECK(pattern.mean[static_cast<size_t>(h)] == doctest::Approx(col).epsilon(1e-12));
    deviation_sum += pattern.mean[static_cast<size_t>(h)] - grand;
  }
  CHECK(std::abs(deviation_sum) < 1e-10);

  CHECK_THROWS_AS(circadian_aggregate(std::vector<double>(23, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("stability_pvalue calibration") {
  Rng rng(77);
  // aligned days: permutations destroy the alignment, p near 0
  std::vector<double> shape(24);
  for (int h = 0; h < 24; ++h) shape[static_cast<size_t>(h)] = std::sin(h / 24.0 * 6.283);
  Eigen::MatrixXd days(12, 24);
  for (long d = 0; d < 12; ++d) {
    for (long h = 0; h < 24; ++h) {
      days(d, h) = shape[static_cast<size_t>(h)] + 0.05 * rng.normal();
    }
  }
  const double p_aligned = stability_pvalue(shape, days, 200, 3);
  CHECK(p_aligned < 0.01);

  // iid noise days: p clearly above the significance threshold most times
  int above = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng noise(seed + 1000);
    Eigen::MatrixXd random_days(6, 24);
    for (long d = 0; d < 6; ++d) {
      for (long h = 0; h < 24; ++h) random_days(d, h) = noise.normal();
    }
    std::vector<double> avg(24, 0.0);
    for (long h = 0; h < 24; ++h) {
      for (long d = 0; d < 6; ++d) avg[static_cast<size_t>(h)] += random_days(d, h);
      avg[static_cast<size_t>(h)] /= 6.0;
    }
    if (stability_pvalue(avg, random_days, 200, seed) > 0.05) ++above;
  }
  CHECK(above >= 18);

  // k=1 with a fixed seed is deterministic
  CHECK(stability_pvalue(shape, days, 1, 5) == stability_pvalue(shape, days, 1, 5));

  // constant day rows are skipped with a warning
  Eigen::MatrixXd with_flat = days;
  with_flat.row(0).setConstant(1.0);
  int warnings = 0;
  set_warn_handler([&](const std::string&) { ++warnings; });
  stability_pvalue(shape, with_flat, 10, 5);
  set_warn_handler(nullptr);
  CHECK(warnings == 1);
}

TEST_CASE("autocorrelation") {
  // square wave with period 24 peaks at lags 24 and 48
  std::vector<double> wave(24 * 8);
  for (size_t t = 0; t < wave.size(); ++t) wave[t] = (t / 12) % 2 == 0 ? 1.0 : -1.0;
  const Autocorrelation ac = autocorrelation(wave, 60);
  CHECK(ac.acf[23] > 0.9);  // lag 24
  CHECK(ac.acf[47] > 0.8);  // lag 48
  CHECK(ac.acf[11] < 0.0);  // half period anti-correlates
  CHECK(ac.bound == doctest::Approx(1.959964 / std::sqrt(192.0)).epsilon(1e-12));

  // white noise stays inside the bounds at ~95% of lags
  Rng rng(123);
  std::vector<double> noise(400);
  for (double& v : noise) v = rng.normal();
  const Autocorrelation nc = autocorrelation(noise, 40);
  int inside = 0;
  for (double r : nc.acf) {
    if (std::abs(r) <= nc.bound) ++inside;
  }
  CHECK(inside >= 36);

  CHECK_THROWS_AS(autocorrelation(std::vector<double>(5, 1.0), 5),
                  std::invalid_argument);
}

TEST_CASE("periodicity_pvalue") {
  std::vector<double> wave(24 * 6);
  for (size_t t = 0; t < wave.size(); ++t) {
    wave[t] = std::sin(static_cast<double>(t) / 24.0 * 6.28318530717958648);
  }
  const std::vector<int> lags{24};
  const std::vector<double> p = periodicity_pvalue(wave, lags, 1000, 9);
  CHECK(p[0] <= 0.001);

  // iid noise: p above 0.05 most of the time
  int above = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 50);
    std::vector<double> noise(120);
    for (double& v : noise) v = rng.normal();
    if (periodicity_pvalue(noise, lags, 200, seed)[0] > 0.05) ++above;
  }
  CHECK(above >= 16);

  CHECK(periodicity_pvalue(wave, lags, 100, 4) == periodicity_pvalue(wave, lags, 100, 4));
}

TEST_CASE("na_minus_pa") {
  auto series_of = [](std::vector<double> v) {
    MoodSeries s;
    s.values = std::move(v);
    s.scheme = MoodScheme::MSFMS;
    return s;
  };
  const MoodSeries equal = series_of({1, 2, 3});
  const MoodSeries zero_joy = series_of({0, 0, 0});

  const MoodSeries none = na_minus_pa(equal, equal, equal, equal);
  for (double v : none.values) CHECK(v == 0.0);

  const MoodSeries na_only = na_minus_pa(equal, equal, equal, zero_joy);
  CHECK(na_only.values == std::vector<double>{1, 2, 3});

  const MoodSeries a = series_of({1, 4});
  const MoodSeries f = series_of({2, 5});
  const MoodSeries s = series_of({3, 6});
  const MoodSeries j = series_of({1, 1});
  const MoodSeries mix = na_minus_pa(a, f, s, j);
  CHECK(mix.values[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mix.values[1] == doctest::Approx(4.0).epsilon(1e-15));

  MoodSeries wrong = series_of({1});
  CHECK_THROWS_AS(na_minus_pa(a, f, s, wrong), std::invalid_argument);
}

TEST_CASE("zscore_scaled") {
  CHECK_THROWS_AS(zscore_scaled(std::vector<double>{2, 2, 2}), std::runtime_error);

  Rng rng(61);
  std::vector<double> series(50);
  for (double& v : series) v = rng.normal() * 3.0 + 5.0;

  const std::vector<double> global = zscore_scaled(series, 10.0, false);
  double mu = 0.0;
  for (double v : global) mu += v;
  mu /= static_cast<double>(global.size());
  CHECK(std::abs(mu) < 1e-10);
  CHECK(stddev_population(global) == doctest::Approx(10.0).epsilon(1e-10));

  // running mode at the final element equals global stats of the full prefix
  const std::vector<double> running = zscore_scaled(series, 10.0, true);
  CHECK(running.back() == doctest::Approx(global.back()).epsilon(1e-10));
  CHECK(running[0] == 0.0);  // single-element prefix has no spread
}

TEST_CASE("pca_project") {
  // points on a line in 2-d: the first component explains everything
  Eigen::MatrixXd line(6, 2);
  for (long i = 0; i < 6; ++i) {
    line(i, 0) = static_cast<double>(i);
    line(i, 1) = 2.0 * static_cast<double>(i) + 1.0;
  }
  const PcaResult lr = pca_project(line, 1);
  CHECK(lr.explained_ratio(0) == doctest::Approx(1.0).epsilon(1e-10));

  // full reconstruction from all components
  Rng rng(71);
  const Eigen::MatrixXd data = random_matrix(20, 4, rng);
  const PcaResult full = pca_project(data, 4);
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  const Eigen::MatrixXd rebuilt = full.coordinates * full.components.transpose();
  CHECK((rebuilt - centered).cwiseAbs().maxCoeff() < 1e-8);

  // components orthonormal, eigenvalues descending
  const Eigen::MatrixXd gram = full.components.transpose() * full.components;
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
  for (int c = 1; c < 4; ++c) {
    CHECK(full.explained_variance(c) <= full.explained_variance(c - 1) + 1e-12);
  }

  // row permutation leaves coordinates unchanged (up to the same rows)
  Eigen::MatrixXd permuted(20, 4);
  std::vector<long> order(20);
  for (long i = 0; i < 20; ++i) order[static_cast<size_t>(i)] = (i * 7) % 20;
  for (long i = 0; i < 20; ++i) permuted.row(i) = data.row(order[static_cast<size_t>(i)]);
  const PcaResult pr = pca_project(permuted, 2);
  const PcaResult base = pca_project(data, 2);
  for (long i = 0; i < 20; ++i) {
    for (int c = 0; c < 2; ++c) {
      CHECK(pr.coordinates(i, c) ==
            doctest::Approx(base.coordinates(order[static_cast<size_t>(i)], c))
                .epsilon(1e-8));
    }
  }

  CHECK_THROWS_AS(pca_project(data, 5), std::invalid_argument);
  // dims must stay below the row count: two rows support one dimension only
  CHECK_THROWS_AS(pca_project(line.topRows(2), 2), std::invalid_argument);
}

TEST_CASE("lexicon file loading") {
  const std::string path = "/tmp/nowcaster_test_lexicon.txt";
  atomic_write_file(path, "joy\nsmile\ngrin\n\nsmile\n");
  const MoodLexicon lex = load_lexicon(path, "joy");
  CHECK(lex.stems == std::vector<Token>{"grin", "joy", "smile"});
  std::remove(path.c_str());
}
