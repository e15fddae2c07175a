#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssmp {

using Point = std::vector<double>;

double norm(std::span<const double> x);

/// Sequence of d-dimensional points in one flat buffer.
class PointSeries {
public:
    PointSeries() = default;
    explicit PointSeries(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const { return data_.empty(); }

    std::span<const double> operator[](std::size_t k) const { return {data_.data() + k * dim_, dim_}; }
    std::span<double> operator[](std::size_t k) { return {data_.data() + k * dim_, dim_}; }

    void push_back(std::span<const double> x);
    void push_zero();
    void reserve(std::size_t n) { data_.reserve(n * dim_); }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const PointSeries&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// Sampled path of a self-similar Markov process on the grid t_k = k * step.
/// Values are exactly zero (the cemetery) from the absorption time on.
struct SsmpPath {
    double step = 0.0;
    double alpha = 0.0;
    PointSeries values;
    std::optional<double> absorption;

    std::size_t size() const { return values.size(); }
    std::size_t dim() const { return values.dim(); }
    double time(std::size_t k) const { return static_cast<double>(k) * step; }
    double horizon() const { return size() == 0 ? 0.0 : time(size() - 1); }
    bool alive_at(std::size_t k) const { return !absorption || time(k) < *absorption; }

    bool operator==(const SsmpPath&) const = default;
};

/// Path of a Markov additive process (theta, xi) on a uniform grid.
/// theta is stored as unit vectors; `state` additionally carries indices when
/// the modulating chain has finitely many states. After `lifetime` the entries
/// hold the cemetery sentinels (NaN, kCemeteryState); check the marker, not them.
struct MapPath {
    static constexpr std::size_t kCemeteryState = std::numeric_limits<std::size_t>::max();

    double step = 0.0;
    std::vector<double> xi;
    PointSeries theta;
    std::vector<std::size_t> state;
    std::optional<double> lifetime;

    std::size_t size() const { return xi.size(); }
    double time(std::size_t k) const { return static_cast<double>(k) * step; }
    double horizon() const { return size() == 0 ? 0.0 : time(size() - 1); }
    bool alive_at(std::size_t k) const { return !lifetime || time(k) < *lifetime; }
    bool finite_state() const { return !state.empty(); }
};

/// Number of grid intervals covering [0, horizon] with spacing close to `step`.
std::size_t grid_intervals(double horizon, double step);

// Serialisation. CSV columns: t, x1..xd, alive. Binary: "SSMP", version byte,
// then little-endian doubles (dim, alpha, step, count, absorption or NaN, values).
void write_csv(std::ostream& out, const SsmpPath& path, const std::string& comment = {});
SsmpPath read_csv(std::istream& in);
void write_binary(std::ostream& out, const SsmpPath& path);
SsmpPath read_binary(std::istream& in);

/// CSV columns: t, theta1..thetad, xi, alive (plus `state` for finite-state paths).
void write_csv(std::ostream& out, const MapPath& path, const std::string& comment = {});

}  // namespace ssmp
