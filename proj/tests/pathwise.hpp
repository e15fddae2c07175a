#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ssmp/lamperti.hpp"

// Pathwise comparisons shared by the unit tests and the acceptance runner.
//
// Transforms that compress time are resampled on a grid fine enough that no
// input step is skipped: the inversion clock runs at speed ||X||^(2 alpha), the
// Lamperti clock at ||X||^alpha. The map back to the original clock uses a
// quarter step.
namespace pathwise {

using namespace ssmp;

inline constexpr double kRefine = 8.0;
inline constexpr double kValueTol = 1e-9;

inline double max_norm(const SsmpPath& p) {
    double m = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) m = std::max(m, norm(p.values[k]));
    return m;
}

inline SsmpPath fine_inversion(const SsmpPath& x) {
    const double h = x.step;
    const double m = std::max(1.0, max_norm(x));
    const auto table = additive_functional(x, Weight::norm_power(-2.0 * x.alpha));
    return invert_path(x, {.out_horizon = table.sup(), .out_step = h / (kRefine * std::pow(m, 2.0 * x.alpha))});
}

/// Jitter between X and invert_path(invert_path(X)) on [0, 0.9 horizon].
inline double involution_distance(const SsmpPath& x, double max_shift) {
    const SsmpPath xh = fine_inversion(x);
    const SsmpPath back = invert_path(xh, {.out_horizon = x.horizon(), .out_step = x.step / 4.0});
    return jitter_distance(x, back, 0.9 * x.horizon(), kValueTol, max_shift);
}

/// Jitter between the xi of lamperti_inverse(invert_path(X)) and minus the xi of lamperti_inverse(X).
inline double conjugation_distance(const SsmpPath& x, double max_shift) {
    const double m = std::max(1.0, max_norm(x));
    const double step = x.step / (kRefine * std::pow(m, x.alpha));
    const MapPath direct = lamperti_inverse(x, {.out_step = step});
    const MapPath dual = lamperti_inverse(fine_inversion(x), {.out_horizon = direct.horizon(), .out_step = step});
    std::vector<double> negated(dual.xi);
    for (double& v : negated) v = -v;
    return jitter_distance(direct.xi, step, negated, step, 0.9 * direct.horizon(), kValueTol, max_shift);
}

/// Jitter between X and lamperti_forward(lamperti_inverse(X)) on [0, horizon (1 - h)].
/// A MAP cut short by the divergence guard has no lifetime marker; the window then
/// stops one step before the reproduced path ends.
inline double round_trip_distance(const SsmpPath& x, double max_shift) {
    const double h = x.step;
    const double m = std::max(1.0, max_norm(x));
    const auto table = additive_functional(x, Weight::norm_power(-x.alpha));
    const MapPath map = lamperti_inverse(x, {.out_horizon = table.sup(), .out_step = h / (kRefine * std::pow(m, x.alpha))});
    const SsmpPath y = lamperti_forward(map, x.alpha, {.out_horizon = x.horizon(), .out_step = h / 4.0});
    double window = x.horizon() * (1.0 - h);
    if (!y.absorption) window = std::min(window, y.horizon() - h);
    return jitter_distance(x, y, window, kValueTol, max_shift);
}

}  // namespace pathwise
