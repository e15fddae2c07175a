#include "ssmp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssmp {

double ks_constant(double level) { return std::sqrt(-std::log(level / 2.0) / 2.0); }

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample requires nonempty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    if (std::any_of(x.begin(), x.end(), [](double v) { return std::isnan(v); }) ||
        std::any_of(y.begin(), y.end(), [](double v) { return std::isnan(v); }))
        throw std::invalid_argument("ks_two_sample: NaN in sample");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    const double scale = std::sqrt((n + m) / (n * m));
    return {d, ks_constant(0.05) * scale, ks_constant(0.01) * scale};
}

KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw std::invalid_argument("ks_one_sample requires a nonempty sample");
    std::vector<double> x(sample.begin(), sample.end());
    if (std::any_of(x.begin(), x.end(), [](double v) { return std::isnan(v); }))
        throw std::invalid_argument("ks_one_sample: NaN in sample");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double f = cdf(x[k]);
        d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
    }
    const double scale = 1.0 / std::sqrt(n);
    return {d, ks_constant(0.05) * scale, ks_constant(0.01) * scale};
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MeanEstimate mean_and_se(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean_and_se requires samples");
    const double n = static_cast<double>(values.size());
    const double mean = pairwise_sum(values) / n;
    if (values.size() == 1) return {mean, 0.0};
    std::vector<double> sq(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) sq[k] = (values[k] - mean) * (values[k] - mean);
    const double var = pairwise_sum(sq) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

}  // namespace ssmp
