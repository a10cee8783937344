#include "nowcaster/geonet.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "nowcaster/io.hpp"
#include "nowcaster/mood.hpp"
#include "nowcaster/stats.hpp"

namespace nowcaster {

double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         bool* degenerate) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  if (degenerate) *degenerate = false;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  const double phi1 = lat1 * kDegToRad;
  const double phi2 = lat2 * kDegToRad;
  const double dphi = (lat2 - lat1) * kDegToRad;
  const double dlambda = (lon2 - lon1) * kDegToRad;
  const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) *
                       std::sin(dlambda / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

namespace {

using SparseDoc = std::unordered_map<std::string, double>;

double sparse_cosine(const SparseDoc& a, const SparseDoc& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [term, w] : a) na += w * w;
  for (const auto& [term, w] : b) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  const SparseDoc& small = a.size() <= b.size() ? a : b;
  const SparseDoc& large = a.size() <= b.size() ? b : a;
  for (const auto& [term, w] : small) {
    auto it = large.find(term);
    if (it != large.end()) dot += w * it->second;
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

std::vector<LocationPairStats> average_similarity(const TimeBinnedCorpus& corpus,
                                                  double min_distance_km) {
  const size_t n_loc = corpus.locations.size();
  if (n_loc < 2) throw std::invalid_argument("average_similarity: need >= 2 locations");
  const size_t n_int = corpus.interval_count;

  // raw term counts per (location, interval) document
  std::vector<SparseDoc> counts(n_loc * n_int);
  std::unordered_map<std::string, long> doc_freq;
  for (size_t loc = 0; loc < n_loc; ++loc) {
    for (size_t i = 0; i < n_int; ++i) {
      SparseDoc& doc = counts[loc * n_int + i];
      for (size_t pi : corpus.bin(i, loc)) {
        for (const Token& tok : corpus.posts[pi].tokens) doc[tok] += 1.0;
      }
      for (const auto& [term, c] : doc) ++doc_freq[term];
    }
  }

  // idf over the entire collection of (location x interval) documents
  const double n_docs = static_cast<double>(n_loc * n_int);
  std::vector<SparseDoc> docs(n_loc * n_int);
  for (size_t d = 0; d < counts.size(); ++d) {
    const SparseDoc& raw = counts[d];
    if (raw.empty()) continue;
    double max_count = 0.0;
    for (const auto& [term, c] : raw) max_count = std::max(max_count, c);
    for (const auto& [term, c] : raw) {
      const double idf = std::log(n_docs / static_cast<double>(doc_freq[term]));
      docs[d][term] = (c / max_count) * idf;
    }
  }

  std::vector<LocationPairStats> stats;
  for (size_t a = 0; a < n_loc; ++a) {
    for (size_t b = a + 1; b < n_loc; ++b) {
      const double dist = haversine_km(corpus.location_lat[a], corpus.location_lon[a],
                                       corpus.location_lat[b], corpus.location_lon[b]);
      if (dist < min_distance_km) continue;

      LocationPairStats pair;
      pair.loc_a = corpus.locations[a];
      pair.loc_b = corpus.locations[b];
      pair.distance_km = dist;
      for (size_t i = 0; i < n_int; ++i) {
        const SparseDoc& da = docs[a * n_int + i];
        const SparseDoc& db = docs[b * n_int + i];
        if (da.empty() || db.empty()) {
          ++pair.skipped_intervals;
          continue;
        }
        pair.per_interval.push_back(sparse_cosine(da, db));
      }
      if (pair.skipped_intervals > 0) {
        warn("average_similarity: pair " + pair.loc_a + "/" + pair.loc_b + " skipped " +
             std::to_string(pair.skipped_intervals) + " empty interval(s)");
      }
      if (pair.per_interval.empty()) {
        warn("average_similarity: pair " + pair.loc_a + "/" + pair.loc_b +
             " has no usable intervals; excluded");
        continue;
      }
      pair.average = mean(pair.per_interval);
      stats.push_back(std::move(pair));
    }
  }
  return stats;
}

double impact_score(const std::string& location,
                    std::span<const LocationPairStats> stats) {
  double sum = 0.0;
  long count = 0;
  for (const LocationPairStats& pair : stats) {
    if (pair.loc_a == location || pair.loc_b == location) {
      sum += pair.average;
      ++count;
    }
  }
  if (count == 0) {
    throw std::runtime_error("impact_score: location " + location +
                             " appears in no surviving pair");
  }
  return sum / static_cast<double>(count);
}

std::map<std::string, double> impact_scores(std::span<const LocationPairStats> stats) {
  std::set<std::string> names;
  for (const LocationPairStats& pair : stats) {
    names.insert(pair.loc_a);
    names.insert(pair.loc_b);
  }
  std::map<std::string, double> scores;
  for (const std::string& name : names) scores[name] = impact_score(name, stats);
  return scores;
}

SimilarityNetwork build_network(std::span<const LocationPairStats> stats,
                                const std::map<std::string, double>& impact,
                                size_t alpha) {
  std::vector<const LocationPairStats*> ranked;
  ranked.reserve(stats.size());
  for (const LocationPairStats& pair : stats) ranked.push_back(&pair);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const LocationPairStats* a, const LocationPairStats* b) {
                     if (a->average != b->average) return a->average > b->average;
                     if (a->loc_a != b->loc_a) return a->loc_a < b->loc_a;
                     return a->loc_b < b->loc_b;
                   });

  SimilarityNetwork net;
  net.alpha = alpha;
  net.impact = impact;
  if (alpha > ranked.size()) {
    warn("build_network: alpha " + std::to_string(alpha) + " exceeds " +
         std::to_string(ranked.size()) + " pairs; using all pairs");
  }
  const size_t take = std::min(alpha, ranked.size());
  for (size_t i = 0; i < take; ++i) {
    const LocationPairStats& pair = *ranked[i];
    const double is_a = impact.at(pair.loc_a);
    const double is_b = impact.at(pair.loc_b);
    NetworkEdge edge;
    edge.avg_similarity = pair.average;
    if (is_a > is_b) {
      edge.src = pair.loc_a;
      edge.dst = pair.loc_b;
    } else if (is_b > is_a) {
      edge.src = pair.loc_b;
      edge.dst = pair.loc_a;
    } else {
      // tie: point toward the lexicographically larger name
      edge.src = std::min(pair.loc_a, pair.loc_b);
      edge.dst = std::max(pair.loc_a, pair.loc_b);
    }
    net.edges.push_back(std::move(edge));
  }
  return net;
}

double similarity_score(const SimilarityNetwork& a, const SimilarityNetwork& b,
                        bool* both_empty) {
  if (both_empty) *both_empty = false;
  std::set<std::pair<std::string, std::string>> ea, eb;
  for (const NetworkEdge& e : a.edges) ea.emplace(e.src, e.dst);
  for (const NetworkEdge& e : b.edges) eb.emplace(e.src, e.dst);
  if (ea.empty() && eb.empty()) {
    if (both_empty) *both_empty = true;
    return 1.0;
  }
  size_t inter = 0;
  for (const auto& e : ea) {
    if (eb.contains(e)) ++inter;
  }
  const size_t uni = ea.size() + eb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

void edge_swap(SimilarityNetwork& net, Rng& rng, int retry_cap) {
  const size_t n = net.edges.size();
  if (n < 2) return;
  std::set<std::pair<std::string, std::string>> present;
  for (const NetworkEdge& e : net.edges) present.emplace(e.src, e.dst);

  for (int attempt = 0; attempt < retry_cap; ++attempt) {
    const size_t i = static_cast<size_t>(rng.next_below(n));
    size_t j = static_cast<size_t>(rng.next_below(n - 1));
    if (j >= i) ++j;
    const NetworkEdge& e1 = net.edges[i];
    const NetworkEdge& e2 = net.edges[j];
    // (v->x, y->z) becomes (v->z, y->x)
    const std::pair<std::string, std::string> new1{e1.src, e2.dst};
    const std::pair<std::string, std::string> new2{e2.src, e1.dst};
    if (new1.first == new1.second || new2.first == new2.second) continue;  // self-loop
    if (new1 == new2) continue;
    std::set<std::pair<std::string, std::string>> rest = present;
    rest.erase({e1.src, e1.dst});
    rest.erase({e2.src, e2.dst});
    if (rest.contains(new1) || rest.contains(new2)) continue;  // duplicate edge

    net.edges[i].dst = new1.second;
    net.edges[j].dst = new2.second;
    return;
  }
  warn("edge_swap: no admissible swap found within the retry cap");
}

double network_stability_pvalue(const SimilarityNetwork& net_t1,
                                const SimilarityNetwork& net_t2, int n_swaps,
                                uint64_t seed) {
  if (n_swaps < 1) throw std::invalid_argument("network_stability_pvalue: n_swaps >= 1");
  const double observed = similarity_score(net_t1, net_t2);
  SimilarityNetwork randomized = net_t1;
  Rng rng(derive_seed(seed, seed_domain::kSwap, 0));
  long successes = 0;
  for (int s = 0; s < n_swaps; ++s) {
    edge_swap(randomized, rng);
    if (similarity_score(net_t1, randomized) >= observed) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(n_swaps);
}

HourlyPattern hourly_volume_pattern(const TimeBinnedCorpus& corpus, DayFilter filter,
                                    int k, uint64_t seed) {
  if (corpus.interval_seconds != 3600) {
    throw std::invalid_argument("hourly_volume_pattern: corpus must be hourly-binned");
  }
  // per-day 24-hour post counts over all locations
  std::map<size_t, std::array<double, 24>> day_counts;
  for (size_t i = 0; i < corpus.interval_count; ++i) {
    const size_t day = corpus.day_of_interval(i);
    const int hour = corpus.hour_of_interval(i);
    const size_t posts = corpus.posts_in_interval(i).size();
    day_counts.try_emplace(day).first->second[static_cast<size_t>(hour)] +=
        static_cast<double>(posts);
  }

  const int64_t day0 = corpus.start_epoch / 86400;
  std::vector<std::array<double, 24>> daily_shares;
  for (const auto& [day, counts] : day_counts) {
    const int dow = day_of_week(day0 + static_cast<int64_t>(day));
    const bool weekend = dow >= 5;
    if (filter == DayFilter::Weekday && weekend) continue;
    if (filter == DayFilter::Weekend && !weekend) continue;
    double total = 0.0;
    for (double c : counts) total += c;
    if (total == 0.0) {
      warn("hourly_volume_pattern: day " + std::to_string(day) + " has no posts; skipped");
      continue;
    }
    std::array<double, 24> share{};
    for (size_t h = 0; h < 24; ++h) share[h] = counts[h] / total;
    daily_shares.push_back(share);
  }
  if (daily_shares.empty()) {
    throw std::runtime_error("hourly_volume_pattern: no usable days after filtering");
  }

  HourlyPattern pattern;
  pattern.days = daily_shares.size();
  for (size_t h = 0; h < 24; ++h) {
    double sum = 0.0;
    for (const auto& share : daily_shares) sum += share[h];
    pattern.share[h] = sum / static_cast<double>(daily_shares.size());
  }

  Eigen::MatrixXd daily(static_cast<long>(daily_shares.size()), 24);
  for (size_t d = 0; d < daily_shares.size(); ++d) {
    for (size_t h = 0; h < 24; ++h) daily(static_cast<long>(d), static_cast<long>(h)) = daily_shares[d][h];
  }
  try {
    pattern.stability_p = stability_pvalue(pattern.share, daily, k, seed);
  } catch (const std::runtime_error&) {
    warn("hourly_volume_pattern: every day is flat; stability test undefined, p set to 1");
    pattern.stability_p = 1.0;
  }
  return pattern;
}

void save_network_csv(const SimilarityNetwork& net, const std::string& edges_path,
                      const std::string& nodes_path) {
  std::ostringstream edges;
  edges << "src,dst,avg_similarity\n";
  for (const NetworkEdge& e : net.edges) {
    edges << e.src << ',' << e.dst << ',' << format_double(e.avg_similarity) << '\n';
  }
  atomic_write_file(edges_path, edges.str());

  std::ostringstream nodes;
  nodes << "location,impact_score\n";
  for (const auto& [name, score] : net.impact) {
    nodes << name << ',' << format_double(score) << '\n';
  }
  atomic_write_file(nodes_path, nodes.str());
}

}  // namespace nowcaster
