#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ssmp {

struct KsResult {
    double statistic = 0.0;
    double critical_5 = 0.0;
    double critical_1 = 0.0;
};

/// Asymptotic Kolmogorov constant c(level) = sqrt(-log(level / 2) / 2).
double ks_constant(double level);

/// Two-sample Kolmogorov-Smirnov statistic with asymptotic critical values
/// c(level) * sqrt((n + m) / (n m)). Infinite entries are allowed.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample statistic against a continuous CDF; critical values c(level) / sqrt(n).
KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Pairwise (cascade) summation; order-deterministic.
double pairwise_sum(std::span<const double> values);

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;
};

/// Sample mean and its standard error sd / sqrt(n).
MeanEstimate mean_and_se(std::span<const double> values);

}  // namespace ssmp
