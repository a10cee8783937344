#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nowcaster {

double mean(std::span<const double> xs);

// Population variance (1/N divisor), the convention used for z-scores and
// feature standardisation throughout the library.
double variance_population(std::span<const double> xs);
double stddev_population(std::span<const double> xs);

// Sample variance (1/(N-1) divisor), used for bootstrap standard errors.
double variance_sample(std::span<const double> xs);
double stddev_sample(std::span<const double> xs);

// Pearson correlation coefficient in [-1, 1]. Either vector constant ->
// defined as 0; `degenerate`, when given, is set in that case.
double pearson_correlation(std::span<const double> x, std::span<const double> y,
                           bool* degenerate = nullptr);

// z-scores with population sigma; throws if the series is constant.
std::vector<double> zscores(std::span<const double> xs);

// .975 normal quantile, used for every 95% confidence interval.
inline constexpr double kNormal975 = 1.959964;

}  // namespace nowcaster
