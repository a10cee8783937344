#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nowcaster/corpus.hpp"
#include "nowcaster/rng.hpp"

namespace nowcaster {

// Cosine of the angle between two vectors; a zero vector yields 0 and sets
// the degenerate flag.
double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         bool* degenerate = nullptr);

// Great-circle distance, Earth radius 6371 km.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

struct LocationPairStats {
  std::string loc_a, loc_b;  // loc_a < loc_b lexicographically
  double distance_km = 0.0;
  std::vector<double> per_interval;  // cosine similarity where both docs non-empty
  double average = 0.0;
  size_t skipped_intervals = 0;
};

// TF-IDF documents per (location, interval), pairwise per-interval cosine
// similarities and their mean. Pairs closer than min_distance_km are
// excluded; pair-intervals with an empty document on either side are
// skipped.
std::vector<LocationPairStats> average_similarity(const TimeBinnedCorpus& corpus,
                                                  double min_distance_km = 20.0);

// Mean average-similarity over the surviving pairs containing the location.
double impact_score(const std::string& location,
                    std::span<const LocationPairStats> stats);

std::map<std::string, double> impact_scores(std::span<const LocationPairStats> stats);

struct NetworkEdge {
  std::string src, dst;
  double avg_similarity = 0.0;

  bool operator==(const NetworkEdge&) const = default;
};

struct SimilarityNetwork {
  std::vector<NetworkEdge> edges;
  std::map<std::string, double> impact;  // per node
  size_t alpha = 0;
};

// Top-alpha pairs by average similarity become directed edges from the
// higher to the lower impact score; IS ties point toward the
// lexicographically larger name.
SimilarityNetwork build_network(std::span<const LocationPairStats> stats,
                                const std::map<std::string, double>& impact,
                                size_t alpha = 100);

// Jaccard overlap of the directed edge sets; two empty networks score 1
// (flagged).
double similarity_score(const SimilarityNetwork& a, const SimilarityNetwork& b,
                        bool* both_empty = nullptr);

// One degree-preserving double-edge swap: (v->x, y->z) becomes (v->z, y->x).
// Proposals creating self-loops or duplicate edges are resampled up to the
// retry cap; on exhaustion the network is left unchanged.
void edge_swap(SimilarityNetwork& net, Rng& rng, int retry_cap = 100);

// Randomisation test: n sequential swaps on a copy of net_t1; after each
// swap, success when SS(net_t1, randomised) >= SS(net_t1, net_t2).
double network_stability_pvalue(const SimilarityNetwork& net_t1,
                                const SimilarityNetwork& net_t2, int n_swaps,
                                uint64_t seed);

enum class DayFilter { All, Weekday, Weekend };

struct HourlyPattern {
  std::array<double, 24> share{};  // mean per-hour fraction of daily volume
  double stability_p = 1.0;
  size_t days = 0;
};

// Percentage of daily posts per hourly interval averaged over days, with the
// permutation stability test (correlation statistic) as p-value.
HourlyPattern hourly_volume_pattern(const TimeBinnedCorpus& corpus, DayFilter filter,
                                    int k = 1000, uint64_t seed = 0);

void save_network_csv(const SimilarityNetwork& net, const std::string& edges_path,
                      const std::string& nodes_path);

}  // namespace nowcaster
