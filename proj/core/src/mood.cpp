#include "nowcaster/mood.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "nowcaster/io.hpp"
#include "nowcaster/rng.hpp"
#include "nowcaster/stats.hpp"

namespace nowcaster {

MoodLexicon load_lexicon(const std::string& path, const std::string& name) {
  MoodLexicon lexicon;
  lexicon.name = name;
  std::set<Token> stems;
  for (const std::string& line : read_lines(path)) {
    if (!line.empty()) stems.insert(line);
  }
  if (stems.empty()) throw std::runtime_error("empty lexicon: " + path);
  lexicon.stems.assign(stems.begin(), stems.end());
  return lexicon;
}

Eigen::MatrixXd term_frequencies(const TimeBinnedCorpus& corpus, const MoodLexicon& lexicon) {
  if (lexicon.stems.empty()) throw std::invalid_argument("term_frequencies: empty lexicon");
  const long n_intervals = static_cast<long>(corpus.interval_count);
  const long n_terms = static_cast<long>(lexicon.stems.size());

  std::unordered_map<std::string, long> term_index;
  for (long t = 0; t < n_terms; ++t) term_index.emplace(lexicon.stems[static_cast<size_t>(t)], t);

  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(n_intervals, n_terms);
  std::vector<long> touched;
  for (long i = 0; i < n_intervals; ++i) {
    const std::vector<size_t> post_ids = corpus.posts_in_interval(static_cast<size_t>(i));
    if (post_ids.empty()) {
      warn("term_frequencies: empty interval " +
           corpus.interval_label(static_cast<size_t>(i)) + "; scored 0");
      continue;
    }
    for (size_t pi : post_ids) {
      // a stem counts once per containing post
      touched.clear();
      for (const Token& tok : corpus.posts[pi].tokens) {
        auto it = term_index.find(tok);
        if (it != term_index.end() &&
            std::find(touched.begin(), touched.end(), it->second) == touched.end()) {
          touched.push_back(it->second);
        }
      }
      for (long t : touched) freq(i, t) += 1.0;
    }
    freq.row(i) /= static_cast<double>(post_ids.size());
  }
  return freq;
}

MoodSeries mfms(const TimeBinnedCorpus& corpus, const MoodLexicon& lexicon) {
  const Eigen::MatrixXd freq = term_frequencies(corpus, lexicon);
  MoodSeries series;
  series.scheme = MoodScheme::MFMS;
  series.interval_seconds = corpus.interval_seconds;
  series.values.resize(static_cast<size_t>(freq.rows()));
  for (long i = 0; i < freq.rows(); ++i) {
    series.values[static_cast<size_t>(i)] = freq.row(i).mean();
  }
  return series;
}

MoodSeries msfms_from_frequencies(const Eigen::MatrixXd& freq, int64_t interval_seconds) {
  if (freq.rows() < 2) throw std::invalid_argument("msfms: need >= 2 intervals");
  const long n_terms = freq.cols();

  Eigen::MatrixXd standardized(freq.rows(), n_terms);
  long kept = 0;
  for (long t = 0; t < n_terms; ++t) {
    const double mu = freq.col(t).mean();
    const double sd =
        std::sqrt((freq.col(t).array() - mu).square().sum() / static_cast<double>(freq.rows()));
    if (sd == 0.0) {
      warn("msfms: term column " + std::to_string(t) + " has zero variance; dropped");
      continue;
    }
    standardized.col(kept) = (freq.col(t).array() - mu) / sd;
    ++kept;
  }
  if (kept == 0) throw std::runtime_error("msfms: every term has zero variance");

  MoodSeries series;
  series.scheme = MoodScheme::MSFMS;
  series.interval_seconds = interval_seconds;
  series.values.resize(static_cast<size_t>(freq.rows()));
  for (long i = 0; i < freq.rows(); ++i) {
    series.values[static_cast<size_t>(i)] =
        standardized.row(i).head(kept).mean();
  }
  return series;
}

MoodSeries msfms(const TimeBinnedCorpus& corpus, const MoodLexicon& lexicon) {
  return msfms_from_frequencies(term_frequencies(corpus, lexicon), corpus.interval_seconds);
}

CircadianPattern circadian_aggregate(std::span<const double> values) {
  if (values.empty() || values.size() % 24 != 0) {
    throw std::invalid_argument("circadian_aggregate: length must be a multiple of 24");
  }
  CircadianPattern pattern;
  pattern.days = values.size() / 24;
  if (pattern.days < 2) warn("circadian_aggregate: single day, no confidence interval");
  for (int h = 0; h < 24; ++h) {
    std::vector<double> column(pattern.days);
    for (size_t d = 0; d < pattern.days; ++d) column[d] = values[d * 24 + static_cast<size_t>(h)];
    const double mu = mean(column);
    pattern.mean[static_cast<size_t>(h)] = mu;
    double half = 0.0;
    if (pattern.days >= 2) {
      half = kNormal975 * stddev_sample(column) / std::sqrt(static_cast<double>(pattern.days));
    }
    pattern.ci_low[static_cast<size_t>(h)] = mu - half;
    pattern.ci_high[static_cast<size_t>(h)] = mu + half;
  }
  return pattern;
}

double stability_pvalue(std::span<const double> avg_pattern,
                        const Eigen::MatrixXd& daily_patterns, int k, uint64_t seed) {
  if (k < 1) throw std::invalid_argument("stability_pvalue: k must be >= 1");
  if (static_cast<long>(avg_pattern.size()) != daily_patterns.cols()) {
    throw std::invalid_argument("stability_pvalue: pattern width mismatch");
  }
  const long n_days = daily_patterns.rows();
  std::vector<double> avg(avg_pattern.begin(), avg_pattern.end());

  double fraction_sum = 0.0;
  long used_days = 0;
  for (long d = 0; d < n_days; ++d) {
    std::vector<double> day(daily_patterns.cols());
    for (long h = 0; h < daily_patterns.cols(); ++h) day[static_cast<size_t>(h)] = daily_patterns(d, h);

    bool degenerate = false;
    const double observed = pearson_correlation(avg, day, &degenerate);
    if (degenerate) {
      warn("stability_pvalue: constant pattern on day " + std::to_string(d) + "; skipped");
      continue;
    }
    Rng rng(derive_seed(seed, seed_domain::kPermutation, static_cast<uint64_t>(d)));
    long exceed = 0;
    std::vector<double> shuffled = day;
    for (int rep = 0; rep < k; ++rep) {
      rng.shuffle(shuffled);
      if (pearson_correlation(avg, shuffled) >= observed) ++exceed;
    }
    fraction_sum += static_cast<double>(exceed) / static_cast<double>(k);
    ++used_days;
  }
  if (used_days == 0) throw std::runtime_error("stability_pvalue: every day degenerate");
  return fraction_sum / static_cast<double>(used_days);
}

double autocorrelation_at(std::span<const double> series, int lag) {
  const long n = static_cast<long>(series.size());
  if (lag < 1 || lag >= n) throw std::invalid_argument("autocorrelation: bad lag");
  const double mu = mean(series);
  double denom = 0.0;
  for (double v : series) denom += (v - mu) * (v - mu);
  if (denom == 0.0) return 0.0;
  double num = 0.0;
  for (long t = 0; t + lag < n; ++t) {
    num += (series[static_cast<size_t>(t)] - mu) *
           (series[static_cast<size_t>(t + lag)] - mu);
  }
  return num / denom;
}

Autocorrelation autocorrelation(std::span<const double> series, int max_lag) {
  if (max_lag < 1 || static_cast<size_t>(max_lag) >= series.size()) {
    throw std::invalid_argument("autocorrelation: max_lag must be in [1, N)");
  }
  Autocorrelation out;
  out.bound = kNormal975 / std::sqrt(static_cast<double>(series.size()));
  out.acf.reserve(static_cast<size_t>(max_lag));
  for (int lag = 1; lag <= max_lag; ++lag) out.acf.push_back(autocorrelation_at(series, lag));
  return out;
}

std::vector<double> periodicity_pvalue(std::span<const double> series,
                                       std::span<const int> lags, int k, uint64_t seed) {
  if (k < 1) throw std::invalid_argument("periodicity_pvalue: k must be >= 1");
  std::vector<double> observed;
  observed.reserve(lags.size());
  for (int lag : lags) observed.push_back(autocorrelation_at(series, lag));

  std::vector<long> exceed(lags.size(), 0);
  Rng rng(derive_seed(seed, seed_domain::kPermutation, 0));
  std::vector<double> shuffled(series.begin(), series.end());
  for (int rep = 0; rep < k; ++rep) {
    rng.shuffle(shuffled);
    for (size_t li = 0; li < lags.size(); ++li) {
      if (autocorrelation_at(shuffled, lags[li]) >= observed[li]) ++exceed[li];
    }
  }
  std::vector<double> pvalues(lags.size());
  for (size_t li = 0; li < lags.size(); ++li) {
    pvalues[li] = static_cast<double>(exceed[li]) / static_cast<double>(k);
  }
  return pvalues;
}

MoodSeries na_minus_pa(const MoodSeries& anger, const MoodSeries& fear,
                       const MoodSeries& sadness, const MoodSeries& joy) {
  const size_t n = anger.values.size();
  if (fear.values.size() != n || sadness.values.size() != n || joy.values.size() != n) {
    throw std::invalid_argument("na_minus_pa: length mismatch");
  }
  if (fear.scheme != anger.scheme || sadness.scheme != anger.scheme ||
      joy.scheme != anger.scheme) {
    throw std::invalid_argument("na_minus_pa: mixed scoring schemes");
  }
  MoodSeries out;
  out.scheme = anger.scheme;
  out.interval_seconds = anger.interval_seconds;
  out.values.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.values[i] =
        (anger.values[i] + fear.values[i] + sadness.values[i]) / 3.0 - joy.values[i];
  }
  return out;
}

std::vector<double> zscore_scaled(std::span<const double> series, double scale,
                                  bool running_stats) {
  if (series.empty()) throw std::invalid_argument("zscore_scaled: empty series");
  std::vector<double> out(series.size());
  if (!running_stats) {
    const double mu = mean(series);
    const double sd = stddev_population(series);
    if (sd == 0.0) throw std::runtime_error("zscore_scaled: series is constant");
    for (size_t i = 0; i < series.size(); ++i) out[i] = (series[i] - mu) / sd * scale;
    return out;
  }
  double sum = 0.0, sum2 = 0.0;
  for (size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    sum2 += series[i] * series[i];
    const double n = static_cast<double>(i + 1);
    const double mu = sum / n;
    double var = sum2 / n - mu * mu;
    if (var < 0.0) var = 0.0;
    const double sd = std::sqrt(var);
    out[i] = sd == 0.0 ? 0.0 : (series[i] - mu) / sd * scale;
  }
  return out;
}

PcaResult pca_project(const Eigen::MatrixXd& data, int dims) {
  const long n = data.rows();
  const long d = data.cols();
  if (dims < 1 || dims > std::min(n - 1, d)) {
    throw std::invalid_argument("pca_project: dims must be in [1, min(n-1, d)]");
  }
  const Eigen::RowVectorXd mu = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca_project: eigensolver failed");

  PcaResult out;
  out.components.resize(d, dims);
  out.explained_variance.resize(dims);
  const double total = std::max(solver.eigenvalues().sum(), 0.0);
  // eigenvalues come out ascending; take the top `dims` in descending order
  for (int c = 0; c < dims; ++c) {
    const long src = d - 1 - c;
    Eigen::VectorXd component = solver.eigenvectors().col(src);
    long arg_max = 0;
    component.cwiseAbs().maxCoeff(&arg_max);
    if (component(arg_max) < 0.0) component = -component;
    out.components.col(c) = component;
    out.explained_variance(c) = std::max(solver.eigenvalues()(src), 0.0);
  }
  out.coordinates = centered * out.components;
  out.explained_ratio = total > 0.0
                            ? Eigen::VectorXd(out.explained_variance / total)
                            : Eigen::VectorXd(Eigen::VectorXd::Zero(dims));
  return out;
}

}  // namespace nowcaster
