#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nowcaster/vsm.hpp"

namespace nowcaster {

struct GroundTruthPoint {
  int64_t date = 0;  // days since epoch
  std::string region;
  double value = 0.0;
};

struct GroundTruthSeries {
  std::vector<GroundTruthPoint> points;  // sorted by (region, date)

  std::vector<std::string> regions() const;
  std::vector<GroundTruthPoint> for_region(const std::string& region) const;
  double lookup(int64_t date, const std::string& region) const;
  void sort_points();
};

// CSV `date,region,value` with ISO dates.
GroundTruthSeries load_ground_truth_csv(const std::string& path);
void save_ground_truth_csv(const GroundTruthSeries& series, const std::string& path);

// Daily values from weekly anchors: d1 = r_i and six linear steps of
// (r_{i+1} - r_i) / 7 per consecutive anchor pair, per region.
GroundTruthSeries interpolate_weekly(const GroundTruthSeries& weekly);

// Centred n-point moving average (n odd). The left edge shrinks the window
// symmetrically (2j-1 elements); the right edge clips the window at the
// series end, matching the trailing-window weekly smoothing.
std::vector<double> moving_average(std::span<const double> series, int n);

// max(x, 0) elementwise; applied only at test/inference time.
std::vector<double> threshold_negative(std::span<const double> series);

// Mean of the current inference and the six previous unsmoothed ones.
double smooth_inference_weekly(double current, std::span<const double> previous_raw);
// Applies the weekly smoothing along a series, zero-padding (with a warning)
// before the first element.
std::vector<double> smooth_series_weekly(std::span<const double> raw);

double rmse(std::span<const double> predicted, std::span<const double> actual);
double mae(std::span<const double> predicted, std::span<const double> actual);

// Aligns the score-matrix rows with ground truth by (interval date, region)
// and stores the target in m.y. Unstacked matrices require a single-region
// truth series.
void attach_target(ScoreMatrix& m, const GroundTruthSeries& truth);

}  // namespace nowcaster
