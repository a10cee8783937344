#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nowcaster/corpus.hpp"

namespace nowcaster {

struct MoodLexicon {
  std::string name;
  std::vector<Token> stems;  // sorted, unique, stemmed
};

// One stem per line.
MoodLexicon load_lexicon(const std::string& path, const std::string& name);

enum class MoodScheme { MFMS, MSFMS };

struct MoodSeries {
  std::vector<double> values;  // one per interval (all locations pooled)
  MoodScheme scheme = MoodScheme::MFMS;
  int64_t interval_seconds = 3600;
};

// Per-interval normalised term frequencies: rows = intervals, cols = lexicon
// stems; frequency = posts containing the stem / posts in the interval.
// Empty intervals score 0 and are flagged.
Eigen::MatrixXd term_frequencies(const TimeBinnedCorpus& corpus, const MoodLexicon& lexicon);

// Mean Frequency Mood Scoring: per-interval mean of the term frequencies.
MoodSeries mfms(const TimeBinnedCorpus& corpus, const MoodLexicon& lexicon);

// Mean Standardised Frequency Mood Scoring: each term's frequency series is
// z-scored over the intervals, then averaged across terms. Zero-variance
// terms are dropped with a warning; all-degenerate lexicons are an error.
MoodSeries msfms(const TimeBinnedCorpus& corpus, const MoodLexicon& lexicon);
MoodSeries msfms_from_frequencies(const Eigen::MatrixXd& freq, int64_t interval_seconds);

struct CircadianPattern {
  std::array<double, 24> mean{};
  std::array<double, 24> ci_low{};
  std::array<double, 24> ci_high{};
  size_t days = 0;
};

// Per-hour mean across days with a 95% CI on the sample mean; input length
// must be a multiple of 24 (hour-major within day).
CircadianPattern circadian_aggregate(std::span<const double> values);

// Permutation stability test: per day, the fraction of shuffled patterns
// whose correlation with the average pattern reaches the observed one;
// p-value is the mean fraction over days. Constant days are skipped.
double stability_pvalue(std::span<const double> avg_pattern,
                        const Eigen::MatrixXd& daily_patterns, int k, uint64_t seed);

struct Autocorrelation {
  std::vector<double> acf;  // lags 1..max_lag
  double bound = 0.0;       // +-1.959964 / sqrt(N)
};

Autocorrelation autocorrelation(std::span<const double> series, int max_lag);
double autocorrelation_at(std::span<const double> series, int lag);

// Per-lag fraction of permutations whose autocorrelation reaches the
// observed one.
std::vector<double> periodicity_pvalue(std::span<const double> series,
                                       std::span<const int> lags, int k, uint64_t seed);

// mean(anger, fear, sadness) - joy, elementwise.
MoodSeries na_minus_pa(const MoodSeries& anger, const MoodSeries& fear,
                       const MoodSeries& sadness, const MoodSeries& joy);

// ((x - mu) / sigma) * scale. With running_stats, mu and sigma come from the
// prefix up to each element (the dynamic-mean display convention); a prefix
// with zero variance scores 0.
std::vector<double> zscore_scaled(std::span<const double> series, double scale = 10.0,
                                  bool running_stats = false);

struct PcaResult {
  Eigen::MatrixXd coordinates;        // n x dims
  Eigen::MatrixXd components;         // d x dims, orthonormal columns
  Eigen::VectorXd explained_variance;  // descending eigenvalues (dims)
  Eigen::VectorXd explained_ratio;     // fraction of total variance (dims)
};

// Eigendecomposition of the population covariance; components sorted by
// descending eigenvalue with the largest-magnitude loading made positive.
PcaResult pca_project(const Eigen::MatrixXd& data, int dims = 2);

}  // namespace nowcaster
