#pragma once

#include <span>
#include <vector>

namespace lss {

/// A Monte Carlo mean with its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Sample mean and standard error (sample standard deviation / √M).
Estimate mean_estimate(std::span<const double> samples);

/// Linear-interpolation quantile (R type 7); q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Least-squares nonincreasing fit (pool-adjacent-violators).
std::vector<double> antitonic_fit(std::span<const double> values);

/// Largest |value − fit| of the nonincreasing least-squares fit.
double antitonic_residual(std::span<const double> values);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace lss
