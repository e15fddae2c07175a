#include "ssmp/lamperti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssmp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shared accumulation loop. `alive(k)` tells whether grid point k precedes the
// lifetime, `weight(k)` evaluates the integrand there.
template <class Alive, class WeightAt>
TimeChangeTable accumulate(std::size_t points, double step, std::optional<double> lifetime, Alive alive,
                           WeightAt weight, const FunctionalOptions& options) {
    if (points == 0) throw std::invalid_argument("empty path");
    if (!(step > 0.0)) throw std::invalid_argument("path step must be positive");
    const double threshold = options.divergence_threshold.value_or(1.0 / (step * step));

    TimeChangeTable table;
    table.step = step;
    table.boundaries.reserve(points);
    table.boundaries.push_back(0.0);
    table.end_time = step * static_cast<double>(points - 1);
    if (!alive(0)) {
        table.ended_by_lifetime = true;
        table.end_time = 0.0;
        return table;
    }
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < points; ++k) {
        const double w = weight(k);
        if (!(w <= threshold)) {
            table.divergent_segment = k;
            table.end_time = step * static_cast<double>(k);
            return table;
        }
        if (alive(k + 1)) {
            total = total + w * step;
            table.boundaries.push_back(total);
            continue;
        }
        const double length = *lifetime - step * static_cast<double>(k);
        total = total + w * length;
        table.boundaries.push_back(total);
        table.ended_by_lifetime = true;
        table.end_time = *lifetime;
        return table;
    }
    return table;
}

double norm_power(std::span<const double> x, double p) {
    const double r = norm(x);
    if (r == 0.0 && p < 0.0) throw std::invalid_argument("weight undefined: zero value before absorption");
    return std::pow(r, p);
}

struct OutputGrid {
    double step = 0.0;
    std::size_t intervals = 0;

    // A lifetime at the end of the requested window still counts as observed.
    bool covers(double time) const { return time <= step * static_cast<double>(intervals) * (1.0 + 1e-12); }
};

OutputGrid output_grid(double in_horizon, double in_step, const ResampleOptions& options) {
    const double horizon = options.out_horizon.value_or(in_horizon);
    const double step = options.out_step.value_or(in_step);
    if (!(horizon > 0.0)) return {step, 0};
    const std::size_t n = grid_intervals(horizon, std::min(step, horizon));
    return {horizon / static_cast<double>(n), n};
}

// Walks the output grid; stops at the first time the transformed path is unknown.
template <class Emit, class EmitDead>
double resample(const TimeChangeTable& table, const OutputGrid& grid, Emit emit, EmitDead emit_dead) {
    const auto lifetime = table.transformed_lifetime();
    double last = 0.0;
    for (std::size_t i = 0; i <= grid.intervals; ++i) {
        const double s = grid.step * static_cast<double>(i);
        if (const auto seg = table.segment_at(s)) {
            emit(*seg);
        } else if (lifetime && s >= *lifetime) {
            emit_dead();
        } else {
            break;
        }
        last = s;
    }
    return last;
}

}  // namespace

std::optional<double> TimeChangeTable::transformed_lifetime() const {
    if (ended_by_lifetime && !divergent_segment) return sup();
    return std::nullopt;
}

std::optional<std::size_t> TimeChangeTable::segment_at(double s) const {
    if (!(s >= 0.0) || s >= sup()) return std::nullopt;
    const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), s);
    return static_cast<std::size_t>(it - boundaries.begin()) - 1;
}

TimeChangeTable additive_functional(const MapPath& path, Weight weight, const FunctionalOptions& options) {
    if (weight.kind != Weight::Kind::ExpAlphaXi) throw std::invalid_argument("MAP paths take the exp(alpha xi) weight");
    const double alpha = weight.parameter;
    return accumulate(
        path.size(), path.step, path.lifetime, [&](std::size_t k) { return path.alive_at(k); },
        [&](std::size_t k) { return std::exp(alpha * path.xi[k]); }, options);
}

TimeChangeTable additive_functional(const SsmpPath& path, Weight weight, const FunctionalOptions& options) {
    auto alive = [&](std::size_t k) { return path.alive_at(k); };
    switch (weight.kind) {
        case Weight::Kind::NormPower:
            return accumulate(
                path.size(), path.step, path.absorption, alive,
                [&](std::size_t k) { return norm_power(path.values[k], weight.parameter); }, options);
        case Weight::Kind::EmbedRadius: {
            const double alpha = weight.parameter;
            if (!(alpha > 0.0)) throw std::invalid_argument("embedding weight needs alpha > 0");
            return accumulate(
                path.size(), path.step, path.absorption, alive,
                [&](std::size_t k) {
                    const double r = norm(path.values[k]);
                    const double radius2 = r * r + std::pow(path.time(k), 2.0 / alpha);
                    if (radius2 == 0.0) throw std::invalid_argument("weight undefined at the origin at time 0");
                    return std::pow(radius2, -alpha / 2.0);
                },
                options);
        }
        case Weight::Kind::ExpAlphaXi:
            break;
    }
    throw std::invalid_argument("ssMp paths take norm-based weights");
}

double invert_table(const TimeChangeTable& table, double s) {
    const auto seg = table.segment_at(s);
    if (!seg) throw std::out_of_range("time beyond the known range of the transformed path");
    return std::min(table.step * static_cast<double>(*seg + 1), table.end_time);
}

SsmpPath lamperti_forward(const MapPath& path, double alpha, const ResampleOptions& options) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    const auto table = additive_functional(path, Weight::exp_alpha_xi(alpha), options.functional);
    const auto grid = output_grid(path.horizon(), path.step, options);
    SsmpPath out;
    out.step = grid.step;
    out.alpha = alpha;
    out.values = PointSeries(path.theta.dim());
    Point x(path.theta.dim());
    resample(
        table, grid,
        [&](std::size_t m) {
            const double r = std::exp(path.xi[m]);
            const auto y = path.theta[m];
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = y[i] * r;
            out.values.push_back(x);
        },
        [&] { out.values.push_zero(); });
    if (const auto life = table.transformed_lifetime(); life && grid.covers(*life)) out.absorption = *life;
    return out;
}

MapPath lamperti_inverse(const SsmpPath& path, const ResampleOptions& options) {
    if (!(path.alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    const auto table = additive_functional(path, Weight::norm_power(-path.alpha), options.functional);
    const auto grid = output_grid(path.horizon(), path.step, options);
    MapPath out;
    out.step = grid.step;
    out.theta = PointSeries(path.dim());
    Point y(path.dim());
    resample(
        table, grid,
        [&](std::size_t m) {
            const auto x = path.values[m];
            const double r = norm(x);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] / r;
            out.theta.push_back(y);
            out.xi.push_back(std::log(r));
        },
        [&] {
            out.theta.push_zero();
            out.xi.push_back(std::numeric_limits<double>::quiet_NaN());
        });
    if (const auto life = table.transformed_lifetime(); life && grid.covers(*life)) out.lifetime = *life;
    return out;
}

SsmpPath invert_path(const SsmpPath& path, const ResampleOptions& options) {
    if (!(path.alpha > 0.0)) throw std::invalid_argument("inversion requires alpha > 0");
    const auto table = additive_functional(path, Weight::norm_power(-2.0 * path.alpha), options.functional);
    const auto grid = output_grid(path.horizon(), path.step, options);
    SsmpPath out;
    out.step = grid.step;
    out.alpha = path.alpha;
    out.values = PointSeries(path.dim());
    Point y(path.dim());
    resample(
        table, grid,
        [&](std::size_t m) {
            const auto x = path.values[m];
            const double r = norm(x);
            const double r2 = r * r;
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] / r2;
            out.values.push_back(y);
        },
        [&] { out.values.push_zero(); });
    if (const auto life = table.transformed_lifetime(); life && grid.covers(*life)) out.absorption = *life;
    return out;
}

MapPath embed_unabsorbed(const SsmpPath& path, double alpha, const ResampleOptions& options) {
    if (path.absorption) throw std::invalid_argument("embedding requires a path with infinite lifetime");
    if (!(alpha > 0.0)) throw std::invalid_argument("embedding requires alpha > 0");
    const auto table = additive_functional(path, Weight::embed_radius(alpha), options.functional);
    const auto grid = output_grid(path.horizon(), path.step, options);
    const std::size_t d = path.dim();
    MapPath out;
    out.step = grid.step;
    out.theta = PointSeries(d + 1);
    Point y(d + 1);
    std::size_t last_segment = 0;
    double max_growth = 0.0;
    resample(
        table, grid,
        [&](std::size_t m) {
            const auto x = path.values[m];
            const double lift = std::pow(path.time(m), 1.0 / alpha);
            const double r = std::sqrt(norm(x) * norm(x) + lift * lift);
            for (std::size_t i = 0; i < d; ++i) y[i] = x[i] / r;
            y[d] = lift / r;
            out.theta.push_back(y);
            out.xi.push_back(std::log(r));
            max_growth = std::max(max_growth, std::pow(r, alpha));
            last_segment = m;
        },
        [] { throw std::logic_error("embedded MAP cannot die"); });

    // The forward functional int exp(alpha xi) must track the original clock.
    const auto forward = additive_functional(out, Weight::exp_alpha_xi(alpha), {.divergence_threshold = kInf});
    const double reached = forward.sup() + out.step * std::exp(alpha * out.xi.back());
    const double target = path.time(last_segment);
    const double slack = 2.0 * (path.step + out.step * max_growth);
    if (reached < target - slack) throw std::logic_error("forward functional of the embedded MAP falls short");
    return out;
}

SsmpPath project(const SsmpPath& path, std::size_t dim) {
    if (dim > path.dim()) throw std::invalid_argument("projection dimension too large");
    SsmpPath out;
    out.step = path.step;
    out.alpha = path.alpha;
    out.absorption = path.absorption;
    out.values = PointSeries(dim);
    out.values.reserve(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) out.values.push_back(path.values[k].first(dim));
    return out;
}

double sup_distance(const SsmpPath& a, const SsmpPath& b, double window) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
    auto index = [](const SsmpPath& p, double t) {
        const auto k = static_cast<std::size_t>(std::floor(t / p.step + 1e-9));
        return std::min(k, p.size() - 1);
    };
    const double limit = std::min({window, a.horizon(), b.horizon()});
    double worst = 0.0;
    auto scan = [&](const SsmpPath& grid_path) {
        for (std::size_t k = 0; k < grid_path.size() && grid_path.time(k) <= limit; ++k) {
            const double t = grid_path.time(k);
            const auto xa = a.values[index(a, t)], xb = b.values[index(b, t)];
            for (std::size_t i = 0; i < xa.size(); ++i) worst = std::max(worst, std::abs(xa[i] - xb[i]));
        }
    };
    scan(a);
    scan(b);
    return worst;
}

namespace {

template <class Match>
double one_sided_jitter(std::size_t n_a, double step_a, std::size_t n_b, double step_b, double limit,
                        double max_shift, Match match) {
    double worst = 0.0;
    const auto reach = static_cast<std::ptrdiff_t>(std::ceil(max_shift / step_b)) + 1;
    for (std::size_t i = 0; i < n_a && step_a * static_cast<double>(i) <= limit; ++i) {
        const double t = step_a * static_cast<double>(i);
        const auto centre = static_cast<std::ptrdiff_t>(std::llround(t / step_b));
        double best = kInf;
        for (std::ptrdiff_t off = 0; off <= reach; ++off) {
            for (const std::ptrdiff_t j : {centre - off, centre + off}) {
                if (j < 0 || j >= static_cast<std::ptrdiff_t>(n_b)) continue;
                const double shift = std::abs(step_b * static_cast<double>(j) - t);
                if (shift < best && match(i, static_cast<std::size_t>(j))) best = shift;
            }
            if (best <= step_b * static_cast<double>(off) - 0.5 * step_b) break;
        }
        if (best > max_shift) return kInf;
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

double jitter_distance(std::span<const double> a, double step_a, std::span<const double> b, double step_b,
                       double window, double value_tol, double max_shift) {
    const double limit = std::min({window, step_a * static_cast<double>(a.size() - 1),
                                   step_b * static_cast<double>(b.size() - 1)});
    auto close = [&](double u, double v) {
        if (std::isnan(u) || std::isnan(v)) return std::isnan(u) && std::isnan(v);
        return std::abs(u - v) <= value_tol * std::max(1.0, std::abs(u));
    };
    const double ab = one_sided_jitter(a.size(), step_a, b.size(), step_b, limit, max_shift,
                                       [&](std::size_t i, std::size_t j) { return close(a[i], b[j]); });
    const double ba = one_sided_jitter(b.size(), step_b, a.size(), step_a, limit, max_shift,
                                       [&](std::size_t i, std::size_t j) { return close(b[i], a[j]); });
    return std::max(ab, ba);
}

double jitter_distance(const SsmpPath& a, const SsmpPath& b, double window, double value_tol, double max_shift) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
    const double limit = std::min({window, a.horizon(), b.horizon()});
    auto close = [&](const SsmpPath& p, std::size_t i, const SsmpPath& q, std::size_t j) {
        const auto u = p.values[i], v = q.values[j];
        const double scale = std::max(1.0, norm(u));
        for (std::size_t c = 0; c < u.size(); ++c)
            if (std::abs(u[c] - v[c]) > value_tol * scale) return false;
        return true;
    };
    const double ab = one_sided_jitter(a.size(), a.step, b.size(), b.step, limit, max_shift,
                                       [&](std::size_t i, std::size_t j) { return close(a, i, b, j); });
    const double ba = one_sided_jitter(b.size(), b.step, a.size(), a.step, limit, max_shift,
                                       [&](std::size_t i, std::size_t j) { return close(b, i, a, j); });
    return std::max(ab, ba);
}

}  // namespace ssmp
