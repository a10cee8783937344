#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nowcaster/corpus.hpp"
#include "nowcaster/series.hpp"

namespace nowcaster {

enum class TargetKind { FluLike, RainLike };

struct SignalTerm {
  std::string term;
  double slope = 0.0;  // contribution of the normalised target
  double base = 0.0;   // baseline appearance probability
};

struct SynthSpec {
  int days = 0;
  std::vector<std::string> locations;
  int posts_per_bin = 0;
  std::vector<SignalTerm> signal_terms;
  std::vector<std::pair<std::string, double>> noise_terms;  // term, constant rate
  std::vector<std::pair<std::string, std::vector<double>>> confounder_terms;  // term, per-day rate
  TargetKind target_kind = TargetKind::RainLike;
  uint64_t seed = 0;
  int64_t start_date = 14426;  // 2009-07-01
};

// Daily target series for the synthetic benchmark. Rain-like days are 0
// with probability 0.6 and exponential(lambda = 0.569) otherwise; flu-like
// values come from weekly log-normal(mu = 2.82451, sigma = 0.9254) anchors
// interpolated into daily steps. Single region "all".
GroundTruthSeries gen_target_series(TargetKind kind, int days, uint64_t seed,
                                    int64_t start_date = 14426);

// Near-zero baseline with a single triangular peak of the given width (in
// days) centred at spike_day; peak rate 0.8.
std::vector<double> gen_confounder_spike(int days, int spike_day, int width);

struct SynthCorpus {
  TimeBinnedCorpus corpus;
  std::vector<std::string> signal_support;  // ground-truth signal terms
  std::vector<std::string> jsonl_lines;     // canonical posts JSONL content
};

// Per (location, day) bin, posts_per_bin posts; each signal term appears in
// a post with probability clamp(base + slope * normalised_target, 0, 1),
// noise terms at constant rates, confounder terms at their per-day rates.
// Generation is deterministic given the seed; bins use independent
// (seed, location, day) sub-streams.
SynthCorpus gen_corpus(const SynthSpec& spec, const GroundTruthSeries& target);

// Expands the single-region target to one row per (date, location).
GroundTruthSeries expand_target_per_location(const GroundTruthSeries& target,
                                             const std::vector<std::string>& locations);

void save_posts_jsonl(const SynthCorpus& synth, const std::string& path);
void save_manifest_json(const SynthSpec& spec, const std::string& path);

// Convenience terms for benchmarks: stemming-stable lowercase words.
std::vector<std::string> make_term_pool(const std::string& prefix, int count);

}  // namespace nowcaster
