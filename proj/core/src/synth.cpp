#include "nowcaster/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "nowcaster/io.hpp"
#include "nowcaster/rng.hpp"

namespace nowcaster {

GroundTruthSeries gen_target_series(TargetKind kind, int days, uint64_t seed,
                                    int64_t start_date) {
  GroundTruthSeries series;
  Rng rng(derive_seed(seed, seed_domain::kSynthBin, 0));

  if (kind == TargetKind::RainLike) {
    for (int d = 0; d < days; ++d) {
      const double value = rng.next_double() < 0.6 ? 0.0 : rng.exponential(0.569);
      series.points.push_back({start_date + d, "all", value});
    }
    return series;
  }

  if (days < 14) throw std::invalid_argument("flu-like target needs >= 14 days");
  GroundTruthSeries weekly;
  const int n_anchors = days / 7 + 2;
  for (int w = 0; w < n_anchors; ++w) {
    weekly.points.push_back({start_date + 7 * w, "all", rng.log_normal(2.82451, 0.9254)});
  }
  GroundTruthSeries daily = interpolate_weekly(weekly);
  daily.points.resize(static_cast<size_t>(days));
  return daily;
}

std::vector<double> gen_confounder_spike(int days, int spike_day, int width) {
  if (spike_day < 0 || spike_day >= days || width < 1) {
    throw std::invalid_argument("gen_confounder_spike: bad spike position");
  }
  constexpr double kPeakRate = 0.8;
  std::vector<double> rates(static_cast<size_t>(days), 0.0);
  const int half = width / 2;
  for (int d = spike_day - half; d <= spike_day + half; ++d) {
    if (d < 0 || d >= days) continue;
    const double falloff =
        1.0 - static_cast<double>(std::abs(d - spike_day)) / static_cast<double>(half + 1);
    rates[static_cast<size_t>(d)] = kPeakRate * falloff;
  }
  rates[static_cast<size_t>(spike_day)] = kPeakRate;
  return rates;
}

namespace {

const std::vector<std::string>& filler_pool() {
  static const std::vector<std::string> pool = make_term_pool("flr", 50);
  return pool;
}

}  // namespace

std::vector<std::string> make_term_pool(const std::string& prefix, int count) {
  std::vector<std::string> terms;
  terms.reserve(static_cast<size_t>(count));
  for (int i = 0; static_cast<int>(terms.size()) < count; ++i) {
    std::string word = prefix;
    word += static_cast<char>('a' + (i / 26) % 26);
    word += static_cast<char>('a' + i % 26);
    if (i >= 26 * 26) word += static_cast<char>('a' + (i / (26 * 26)) % 26);
    // terms must survive the text pipeline unchanged
    if (porter_stem(word) == word) terms.push_back(std::move(word));
  }
  return terms;
}

SynthCorpus gen_corpus(const SynthSpec& spec, const GroundTruthSeries& target) {
  if (spec.signal_terms.empty() && spec.noise_terms.empty() &&
      spec.confounder_terms.empty()) {
    throw std::invalid_argument("gen_corpus: no terms specified");
  }
  if (spec.days < 1 || spec.posts_per_bin < 1 || spec.locations.empty()) {
    throw std::invalid_argument("gen_corpus: days, posts_per_bin and locations required");
  }
  for (const auto& [term, rates] : spec.confounder_terms) {
    if (rates.size() != static_cast<size_t>(spec.days)) {
      throw std::invalid_argument("gen_corpus: confounder rate series length mismatch");
    }
  }

  // min-max normalised target per day
  std::vector<double> raw(static_cast<size_t>(spec.days));
  for (int d = 0; d < spec.days; ++d) {
    raw[static_cast<size_t>(d)] = target.lookup(spec.start_date + d, "all");
  }
  const double lo = *std::min_element(raw.begin(), raw.end());
  const double hi = *std::max_element(raw.begin(), raw.end());
  std::vector<double> norm(raw.size(), 0.0);
  if (hi > lo) {
    for (size_t d = 0; d < raw.size(); ++d) norm[d] = (raw[d] - lo) / (hi - lo);
  }

  SynthCorpus out;
  out.jsonl_lines.reserve(static_cast<size_t>(spec.days) * spec.locations.size() *
                          static_cast<size_t>(spec.posts_per_bin));
  for (const SignalTerm& s : spec.signal_terms) out.signal_support.push_back(s.term);

  std::vector<Post> posts;
  const auto& fillers = filler_pool();
  for (size_t loc = 0; loc < spec.locations.size(); ++loc) {
    // synthetic city coordinates on a sparse grid (>= 150 km apart)
    const double lat = 51.0 + 1.5 * static_cast<double>(loc);
    const double lon = -1.0 - 0.5 * static_cast<double>(loc);
    for (int d = 0; d < spec.days; ++d) {
      Rng rng(derive_seed(spec.seed, seed_domain::kSynthBin,
                          1 + loc * 1000003ULL + static_cast<uint64_t>(d)));
      const double y_norm = norm[static_cast<size_t>(d)];
      for (int p = 0; p < spec.posts_per_bin; ++p) {
        std::string text;
        auto add_term = [&](const std::string& term) {
          if (!text.empty()) text += ' ';
          text += term;
        };
        for (const SignalTerm& s : spec.signal_terms) {
          const double prob = std::clamp(s.base + s.slope * y_norm, 0.0, 1.0);
          if (rng.next_double() < prob) add_term(s.term);
        }
        for (const auto& [term, rate] : spec.noise_terms) {
          if (rng.next_double() < rate) add_term(term);
        }
        for (const auto& [term, rates] : spec.confounder_terms) {
          if (rng.next_double() < rates[static_cast<size_t>(d)]) add_term(term);
        }
        const int n_fillers = 2 + static_cast<int>(rng.next_below(3));
        for (int f = 0; f < n_fillers; ++f) {
          add_term(fillers[rng.next_below(fillers.size())]);
        }

        Post post;
        post.id = spec.locations[loc] + "-" + std::to_string(d) + "-" + std::to_string(p);
        post.time = (spec.start_date + d) * 86400 +
                    static_cast<int64_t>(rng.next_below(86400));
        post.location = spec.locations[loc];
        post.lat = lat;
        post.lon = lon;
        post.tokens = tokenize(text);

        nlohmann::ordered_json j;
        j["id"] = post.id;
        j["time"] = format_iso8601_utc(post.time);
        j["loc"] = post.location;
        j["lat"] = post.lat;
        j["lon"] = post.lon;
        j["text"] = text;
        out.jsonl_lines.push_back(j.dump());

        posts.push_back(std::move(post));
      }
    }
  }
  out.corpus = bin_posts(std::move(posts), 86400);
  return out;
}

GroundTruthSeries expand_target_per_location(const GroundTruthSeries& target,
                                             const std::vector<std::string>& locations) {
  GroundTruthSeries out;
  for (const GroundTruthPoint& p : target.points) {
    for (const std::string& loc : locations) {
      out.points.push_back({p.date, loc, p.value});
    }
  }
  out.sort_points();
  return out;
}

void save_posts_jsonl(const SynthCorpus& synth, const std::string& path) {
  std::string content;
  for (const std::string& line : synth.jsonl_lines) {
    content += line;
    content += '\n';
  }
  atomic_write_file(path, content);
}

void save_manifest_json(const SynthSpec& spec, const std::string& path) {
  nlohmann::json j;
  std::vector<std::string> signal, noise, confounder;
  for (const SignalTerm& s : spec.signal_terms) signal.push_back(s.term);
  for (const auto& [term, rate] : spec.noise_terms) noise.push_back(term);
  for (const auto& [term, rates] : spec.confounder_terms) confounder.push_back(term);
  j["signal_terms"] = signal;
  j["noise_terms"] = noise;
  j["confounder_terms"] = confounder;
  j["seed"] = spec.seed;
  j["days"] = spec.days;
  j["posts_per_bin"] = spec.posts_per_bin;
  j["locations"] = spec.locations;
  atomic_write_file(path, j.dump(2) + "\n");
}

}  // namespace nowcaster
