#include "nowcaster/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "nowcaster/io.hpp"

namespace nowcaster {

size_t TimeBinnedCorpus::location_index(const std::string& name) const {
  auto it = location_lookup.find(name);
  if (it == location_lookup.end()) {
    throw std::invalid_argument("unknown location: " + name);
  }
  return it->second;
}

std::span<const size_t> TimeBinnedCorpus::bin(size_t interval, size_t location) const {
  return bins[interval * locations.size() + location];
}

std::vector<size_t> TimeBinnedCorpus::posts_in_interval(size_t interval) const {
  std::vector<size_t> out;
  for (size_t loc = 0; loc < locations.size(); ++loc) {
    const auto& b = bin(interval, loc);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

std::string TimeBinnedCorpus::interval_label(size_t interval) const {
  const int64_t start = interval_start(interval);
  if (interval_seconds == 86400) return format_date(start / 86400);
  return format_iso8601_utc(start);
}

size_t TimeBinnedCorpus::day_of_interval(size_t interval) const {
  const int64_t day0 = start_epoch / 86400;
  return static_cast<size_t>(interval_start(interval) / 86400 - day0);
}

int TimeBinnedCorpus::hour_of_interval(size_t interval) const {
  return static_cast<int>((interval_start(interval) % 86400) / 3600);
}

TimeBinnedCorpus bin_posts(std::vector<Post> posts, int64_t interval_seconds) {
  if (posts.empty()) throw std::invalid_argument("bin_posts: no posts");
  if (interval_seconds <= 0) throw std::invalid_argument("bin_posts: bad interval length");

  TimeBinnedCorpus corpus;
  corpus.posts = std::move(posts);
  corpus.interval_seconds = interval_seconds;

  int64_t min_time = corpus.posts.front().time;
  int64_t max_time = min_time;
  for (const Post& p : corpus.posts) {
    if (p.location.empty()) throw std::runtime_error("post without location: " + p.id);
    min_time = std::min(min_time, p.time);
    max_time = std::max(max_time, p.time);
  }
  corpus.start_epoch = (min_time / interval_seconds) * interval_seconds;
  if (min_time < 0 && min_time % interval_seconds != 0) {
    corpus.start_epoch -= interval_seconds;
  }
  corpus.interval_count =
      static_cast<size_t>((max_time - corpus.start_epoch) / interval_seconds) + 1;

  for (const Post& p : corpus.posts) {
    if (!corpus.location_lookup.contains(p.location)) {
      corpus.location_lookup.emplace(p.location, 0);
      corpus.locations.push_back(p.location);
    }
  }
  std::sort(corpus.locations.begin(), corpus.locations.end());
  corpus.location_lat.assign(corpus.locations.size(), 0.0);
  corpus.location_lon.assign(corpus.locations.size(), 0.0);
  for (size_t i = 0; i < corpus.locations.size(); ++i) {
    corpus.location_lookup[corpus.locations[i]] = i;
  }
  std::vector<bool> coord_seen(corpus.locations.size(), false);

  corpus.bins.assign(corpus.interval_count * corpus.locations.size(), {});
  for (size_t i = 0; i < corpus.posts.size(); ++i) {
    const Post& p = corpus.posts[i];
    const size_t interval =
        static_cast<size_t>((p.time - corpus.start_epoch) / interval_seconds);
    const size_t loc = corpus.location_lookup[p.location];
    corpus.bins[interval * corpus.locations.size() + loc].push_back(i);
    if (!coord_seen[loc]) {
      corpus.location_lat[loc] = p.lat;
      corpus.location_lon[loc] = p.lon;
      coord_seen[loc] = true;
    }
  }
  return corpus;
}

TimeBinnedCorpus load_posts_jsonl(const std::string& path, int64_t interval_seconds,
                                  const PipelineOptions& pipeline) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open posts file: " + path);

  std::vector<Post> posts;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Post p;
    p.id = j.at("id").get<std::string>();
    p.time = parse_iso8601_utc(j.at("time").get<std::string>());
    p.location = j.at("loc").get<std::string>();
    p.lat = j.at("lat").get<double>();
    p.lon = j.at("lon").get<double>();
    p.tokens = preprocess_text(j.at("text").get<std::string>(), pipeline.stoplist,
                               pipeline.stem);
    posts.push_back(std::move(p));
  }
  return bin_posts(std::move(posts), interval_seconds);
}

}  // namespace nowcaster
