#include "nowcaster/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace nowcaster {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double variance_population(std::span<const double> xs) {
  const double mu = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  return acc / static_cast<double>(xs.size());
}

double stddev_population(std::span<const double> xs) {
  return std::sqrt(variance_population(xs));
}

double variance_sample(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample variance needs >= 2 values");
  const double mu = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  return acc / static_cast<double>(xs.size() - 1);
}

double stddev_sample(std::span<const double> xs) { return std::sqrt(variance_sample(xs)); }

double pearson_correlation(std::span<const double> x, std::span<const double> y,
                           bool* degenerate) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need >= 2 values");
  if (degenerate) *degenerate = false;
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  double r = sxy / std::sqrt(sxx * syy);
  if (r > 1.0) r = 1.0;
  if (r < -1.0) r = -1.0;
  return r;
}

std::vector<double> zscores(std::span<const double> xs) {
  const double mu = mean(xs);
  const double sd = stddev_population(xs);
  if (sd == 0.0) throw std::runtime_error("zscores: series is constant");
  std::vector<double> out(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - mu) / sd;
  return out;
}

}  // namespace nowcaster
