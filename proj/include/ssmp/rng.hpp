#pragma once

#include <cstdint>
#include <random>

namespace ssmp {

/// Seeded random stream. A (seed, stream_id) pair always reproduces the same
/// sequence; distinct pairs give independent streams.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    result_type operator()() { return engine_(); }
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }

    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal() { return normal_(engine_); }
    double exponential() { return exponential_(engine_); }
    double gamma(double shape);
    std::uint64_t poisson(double mean);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Child stream keyed on this stream's seed; used to fan out replicas.
    RngStream derive(std::uint64_t child) const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::exponential_distribution<double> exponential_{1.0};
};

}  // namespace ssmp
