#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nowcaster/text.hpp"

namespace nowcaster {

struct Post {
  std::string id;
  int64_t time = 0;  // epoch seconds, UTC
  std::string location;
  double lat = 0.0;
  double lon = 0.0;
  std::vector<Token> tokens;  // post-pipeline (stop-filtered, stemmed)
};

// Posts grouped into (interval x location) bins. Intervals are contiguous
// and sorted; a bin may be empty.
struct TimeBinnedCorpus {
  std::vector<Post> posts;
  int64_t interval_seconds = 86400;
  int64_t start_epoch = 0;  // aligned to an interval boundary
  size_t interval_count = 0;
  std::vector<std::string> locations;  // sorted, unique
  std::vector<double> location_lat;
  std::vector<double> location_lon;

  size_t location_index(const std::string& name) const;
  // indices into `posts` for one bin
  std::span<const size_t> bin(size_t interval, size_t location) const;
  std::vector<size_t> posts_in_interval(size_t interval) const;

  // date for daily bins, ISO start otherwise
  std::string interval_label(size_t interval) const;
  int64_t interval_start(size_t interval) const {
    return start_epoch + static_cast<int64_t>(interval) * interval_seconds;
  }
  // day index (relative to the first day) and hour-of-day of a bin
  size_t day_of_interval(size_t interval) const;
  int hour_of_interval(size_t interval) const;

  std::vector<std::vector<size_t>> bins;  // [interval * |locations| + location]
  std::unordered_map<std::string, size_t> location_lookup;
};

// Assigns every post to its bin and derives the contiguous interval range
// from the post timestamps.
TimeBinnedCorpus bin_posts(std::vector<Post> posts, int64_t interval_seconds);

struct PipelineOptions {
  std::unordered_set<Token> stoplist;
  bool stem = true;
};

// Reads the canonical posts JSONL ({"id","time","loc","lat","lon","text"}),
// runs the text pipeline on each post and bins the result.
TimeBinnedCorpus load_posts_jsonl(const std::string& path, int64_t interval_seconds,
                                  const PipelineOptions& pipeline);

}  // namespace nowcaster
