#include "nowcaster/series.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nowcaster/io.hpp"

namespace nowcaster {

std::vector<std::string> GroundTruthSeries::regions() const {
  std::set<std::string> names;
  for (const GroundTruthPoint& p : points) names.insert(p.region);
  return {names.begin(), names.end()};
}

std::vector<GroundTruthPoint> GroundTruthSeries::for_region(const std::string& region) const {
  std::vector<GroundTruthPoint> out;
  for (const GroundTruthPoint& p : points) {
    if (p.region == region) out.push_back(p);
  }
  return out;
}

double GroundTruthSeries::lookup(int64_t date, const std::string& region) const {
  for (const GroundTruthPoint& p : points) {
    if (p.date == date && p.region == region) return p.value;
  }
  throw std::runtime_error("ground truth missing for " + format_date(date) + " / " + region);
}

void GroundTruthSeries::sort_points() {
  std::stable_sort(points.begin(), points.end(),
                   [](const GroundTruthPoint& a, const GroundTruthPoint& b) {
                     return a.region != b.region ? a.region < b.region : a.date < b.date;
                   });
}

GroundTruthSeries load_ground_truth_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || split_csv_line(lines[0]) != std::vector<std::string>{"date", "region", "value"}) {
    throw std::runtime_error("bad ground truth header in " + path);
  }
  GroundTruthSeries series;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> fields = split_csv_line(lines[i]);
    if (fields.size() != 3) throw std::runtime_error("bad ground truth row in " + path);
    GroundTruthPoint p;
    p.date = parse_date(fields[0]);
    p.region = fields[1];
    p.value = std::stod(fields[2]);
    if (!std::isfinite(p.value)) throw std::runtime_error("non-finite ground truth value");
    series.points.push_back(std::move(p));
  }
  series.sort_points();
  return series;
}

void save_ground_truth_csv(const GroundTruthSeries& series, const std::string& path) {
  std::ostringstream out;
  out << "date,region,value\n";
  for (const GroundTruthPoint& p : series.points) {
    out << format_date(p.date) << ',' << p.region << ',' << format_double(p.value) << '\n';
  }
  atomic_write_file(path, out.str());
}

GroundTruthSeries interpolate_weekly(const GroundTruthSeries& weekly) {
  GroundTruthSeries daily;
  for (const std::string& region : weekly.regions()) {
    const std::vector<GroundTruthPoint> anchors = weekly.for_region(region);
    if (anchors.size() < 2) {
      throw std::runtime_error("interpolate_weekly: region " + region +
                               " needs >= 2 weekly points");
    }
    for (size_t i = 0; i + 1 < anchors.size(); ++i) {
      if (anchors[i + 1].date - anchors[i].date != 7) {
        warn("interpolate_weekly: anchors " + format_date(anchors[i].date) + " and " +
             format_date(anchors[i + 1].date) + " are not 7 days apart");
      }
      const double step = (anchors[i + 1].value - anchors[i].value) / 7.0;
      for (int j = 0; j < 7; ++j) {
        daily.points.push_back({anchors[i].date + j, region,
                                anchors[i].value + step * static_cast<double>(j)});
      }
    }
  }
  daily.sort_points();
  return daily;
}

std::vector<double> moving_average(std::span<const double> series, int n) {
  if (n < 1 || n % 2 == 0) throw std::invalid_argument("moving_average: n must be odd");
  const long k = static_cast<long>(series.size());
  const long half = n / 2;
  std::vector<double> out(series.size());
  for (long j = 0; j < k; ++j) {
    long lo, hi;  // inclusive window bounds
    if (j < half) {
      lo = 0;
      hi = 2 * j;  // symmetric shrink: 2j-1 elements in 1-based terms
    } else {
      lo = j - half;
      hi = std::min(j + half, k - 1);  // clipped at the series end
    }
    double sum = 0.0;
    for (long i = lo; i <= hi; ++i) sum += series[static_cast<size_t>(i)];
    out[static_cast<size_t>(j)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::vector<double> threshold_negative(std::span<const double> series) {
  std::vector<double> out(series.begin(), series.end());
  for (double& v : out) v = std::max(v, 0.0);
  return out;
}

double smooth_inference_weekly(double current, std::span<const double> previous_raw) {
  if (previous_raw.size() != 6) {
    throw std::invalid_argument("smooth_inference_weekly: exactly 6 previous values");
  }
  double sum = current;
  for (double v : previous_raw) sum += v;
  return sum / 7.0;
}

std::vector<double> smooth_series_weekly(std::span<const double> raw) {
  std::vector<double> out(raw.size());
  bool padded = false;
  for (size_t i = 0; i < raw.size(); ++i) {
    double window[6] = {0, 0, 0, 0, 0, 0};
    for (size_t j = 0; j < 6; ++j) {
      if (i >= j + 1) {
        window[j] = raw[i - j - 1];
      } else {
        padded = true;
      }
    }
    out[i] = smooth_inference_weekly(raw[i], window);
  }
  if (padded) warn("smooth_series_weekly: zero-padded before the series start");
  return out;
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size() || predicted.empty()) {
    throw std::invalid_argument("rmse: length mismatch");
  }
  double acc = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(predicted.size()));
}

double mae(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size() || predicted.empty()) {
    throw std::invalid_argument("mae: length mismatch");
  }
  double acc = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) acc += std::abs(predicted[i] - actual[i]);
  return acc / static_cast<double>(predicted.size());
}

void attach_target(ScoreMatrix& m, const GroundTruthSeries& truth) {
  const std::vector<std::string> regions = truth.regions();
  m.y.resize(m.rows());
  for (long r = 0; r < m.rows(); ++r) {
    const int64_t date = parse_date(m.row_interval[static_cast<size_t>(r)]);
    std::string region = m.row_location[static_cast<size_t>(r)];
    if (region.empty()) {
      if (regions.size() != 1) {
        throw std::runtime_error(
            "attach_target: unstacked matrix needs a single-region truth series");
      }
      region = regions.front();
    }
    m.y(r) = truth.lookup(date, region);
  }
}

}  // namespace nowcaster
