#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ssmp/paths.hpp"

namespace ssmp {

/// Integrand of an additive functional.
struct Weight {
    enum class Kind { ExpAlphaXi, NormPower, EmbedRadius };
    Kind kind = Kind::NormPower;
    double parameter = 0.0;

    /// exp(alpha * xi) on a MAP path.
    static Weight exp_alpha_xi(double alpha) { return {Kind::ExpAlphaXi, alpha}; }
    /// ||X||^p on an ssMp path (p = -alpha, -2 alpha, ...).
    static Weight norm_power(double p) { return {Kind::NormPower, p}; }
    /// (||X_s||^2 + s^(2/alpha))^(-alpha/2) on an ssMp path.
    static Weight embed_radius(double alpha) { return {Kind::EmbedRadius, alpha}; }
};

/// Cumulative additive functional of a step-interpolated path.
///
/// Segment m covers the functional range [boundaries[m], boundaries[m+1]) and
/// carries the path value at grid index m. The last boundary is the supremum of
/// the known range: the functional at the lifetime, at the horizon, or at the
/// point where the integrand blew up.
struct TimeChangeTable {
    double step = 0.0;
    std::vector<double> boundaries;
    double end_time = 0.0;
    bool ended_by_lifetime = false;
    std::optional<std::size_t> divergent_segment;

    double sup() const { return boundaries.back(); }
    std::size_t segments() const { return boundaries.size() - 1; }
    /// Functional value at the grid time k * step (k <= segments()).
    double at_grid(std::size_t k) const { return boundaries.at(k); }
    /// Lifetime of the time-changed path, if it is finite.
    std::optional<double> transformed_lifetime() const;
    /// Index of the segment containing s, or nothing when s is outside the known range.
    std::optional<std::size_t> segment_at(double s) const;
};

struct FunctionalOptions {
    /// The functional is declared divergent from the first grid point whose
    /// integrand exceeds this value. Defaults to 1 / step^2.
    std::optional<double> divergence_threshold;
};

TimeChangeTable additive_functional(const MapPath& path, Weight weight, const FunctionalOptions& options = {});
TimeChangeTable additive_functional(const SsmpPath& path, Weight weight, const FunctionalOptions& options = {});

/// Smallest grid time t with F(t) > s. Throws std::out_of_range when s is at or
/// beyond the supremum of the table.
double invert_table(const TimeChangeTable& table, double s);

struct ResampleOptions {
    std::optional<double> out_horizon;  // defaults to the input horizon
    std::optional<double> out_step;     // defaults to the input step
    FunctionalOptions functional;
};

/// X_t = theta_{tau_t} exp(xi_{tau_t}) with tau the inverse of int exp(alpha xi).
SsmpPath lamperti_forward(const MapPath& path, double alpha, const ResampleOptions& options = {});

/// xi_t = log||X_{A_t}||, theta_t = X_{A_t} / ||X_{A_t}|| with A the inverse of
/// int ||X||^-alpha. The result carries sphere-valued theta.
MapPath lamperti_inverse(const SsmpPath& path, const ResampleOptions& options = {});

/// X_{gamma_t} / ||X_{gamma_t}||^2 with gamma the inverse of int ||X||^(-2 alpha).
SsmpPath invert_path(const SsmpPath& path, const ResampleOptions& options = {});

/// MAP with theta in S_d of an ssMp with infinite lifetime, obtained by adjoining
/// the deterministic coordinate s^(1/alpha). Throws if the path is absorbed or the
/// forward functional of the result fails to cover the input horizon.
MapPath embed_unabsorbed(const SsmpPath& path, double alpha, const ResampleOptions& options = {});

/// First `dim` coordinates of each point.
SsmpPath project(const SsmpPath& path, std::size_t dim);

/// Largest absolute coordinate difference between two step-interpolated paths on
/// [0, window]; a dead point compares as the origin.
double sup_distance(const SsmpPath& a, const SsmpPath& b, double window);

/// Time-jitter distance between two sampled paths on [0, window]: for every grid
/// point of either path, the time to the nearest grid point of the other path
/// holding the same value (within value_tol); the maximum over all points.
/// Returns infinity when some value has no match within `max_shift`.
double jitter_distance(const SsmpPath& a, const SsmpPath& b, double window, double value_tol, double max_shift);
double jitter_distance(std::span<const double> a, double step_a, std::span<const double> b, double step_b,
                       double window, double value_tol, double max_shift);

}  // namespace ssmp
