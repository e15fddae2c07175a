#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ssmp/levy.hpp"
#include "ssmp/map_engine.hpp"
#include "ssmp/paths.hpp"
#include "ssmp/processes.hpp"
#include "ssmp/rng.hpp"
#include "ssmp/stats.hpp"

namespace ssmp {

struct VerificationReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double se_lhs = 0.0;
    double se_rhs = 0.0;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<VerificationReport> components;

    nlohmann::ordered_json to_json() const;
    /// One line: name, PASS/FAIL, statistic against threshold.
    std::string summary() const;
};

/// Bounded test functions; a dead path (nullopt) evaluates to 0.
struct TestFunctionSpec {
    enum class Kind { GaussianBump, IndicatorAnnulus, CoordinatePower };
    Kind kind = Kind::GaussianBump;
    Point center;           // GaussianBump
    double width = 0.1;     // GaussianBump; the bump is cut off at 4 widths
    double r_lo = 0.5;      // IndicatorAnnulus
    double r_hi = 1.0;      // IndicatorAnnulus
    double exponent = 1.0;  // CoordinatePower: min(cap, |x_1|^exponent)
    double cap = 1.0;

    static TestFunctionSpec bump(Point center, double width);
    static TestFunctionSpec annulus(double r_lo, double r_hi);
    static TestFunctionSpec coordinate_power(double exponent, double cap);

    void validate() const;
    double operator()(std::span<const double> x) const;
    double at(const std::optional<Point>& x) const { return x ? (*this)(*x) : 0.0; }
    /// Radial range outside which the function vanishes, if bounded away from 0 and infinity.
    std::optional<std::pair<double, double>> radial_support() const;

    bool operator==(const TestFunctionSpec&) const = default;
};

/// m(dx) = angular(x / ||x||) ||x||^p dx restricted to a <= ||x|| <= b within a cone.
struct MeasureSpec {
    enum class Angular { Constant, ProductPower, SignWeights };
    enum class Cone { Full, PositiveOrthant };
    Angular angular = Angular::Constant;
    double radial_exponent = 0.0;
    double angular_exponent = 0.0;  // ProductPower: prod (x_i / ||x||)^q
    double pi_minus = 1.0;          // SignWeights (d = 1)
    double pi_plus = 1.0;
    double a = 0.5;
    double b = 2.0;
    Cone cone = Cone::Full;

    static MeasureSpec power_norm(double p, double a, double b, Cone cone = Cone::Full);

    void validate(std::size_t dim) const;
    double density(std::span<const double> x) const;
    /// Surface measure of the unit sphere intersected with the cone.
    double sphere_measure(std::size_t dim) const;

    bool operator==(const MeasureSpec&) const = default;
};

/// X_t started from x, or nothing when the path is dead (or unknown) at t.
using PathSampler = std::function<std::optional<Point>(std::span<const double> x, double t, RngStream& rng)>;

/// Runs the catalog process from x with its configured step.
PathSampler process_sampler(const ProcessSpec& spec);

struct InversionOptions {
    std::optional<double> divergence_threshold;  // defaults to 1 / step^2
};

/// Streams the inversion of `spec` started from x / ||x||^2: the same arithmetic
/// as invert_path applied to a path of horizon spec.horizon. A run that reaches
/// that horizon before time t counts as dead.
PathSampler inversion_sampler(const ProcessSpec& spec, const InversionOptions& options = {});

/// One-dimensional Lévy process x + xi_t, killed per its kill rate.
PathSampler levy_sampler(const LevySpec& spec);

struct CheckOptions {
    double k_se = 3.0;
    double ks_level = 0.01;
    std::size_t threads = 1;
};

VerificationReport check_duality(const PathSampler& proc_a, const PathSampler& proc_b, const MeasureSpec& m,
                                 std::size_t dim, double t, const TestFunctionSpec& f, const TestFunctionSpec& g,
                                 std::size_t n, RngStream& rng, const CheckOptions& options = {});

VerificationReport check_self_duality(const PathSampler& proc, const MeasureSpec& m, std::size_t dim, double t,
                                      const TestFunctionSpec& f, const TestFunctionSpec& g, std::size_t n,
                                      RngStream& rng, const CheckOptions& options = {});

VerificationReport check_h_transform(const PathSampler& base, const PathSampler& candidate, const HarmonicSpec& h,
                                     std::span<const double> x, double t, const TestFunctionSpec& g, std::size_t n,
                                     RngStream& rng, const CheckOptions& options = {});

/// E_{i,0}[exp(i lambda xi_t); theta_t = j] by simulation against exp(A(i lambda) t).
VerificationReport check_moment_identity(const MapSpec& spec, double lambda, double t, std::size_t n, RngStream& rng,
                                         const CheckOptions& options = {});

/// Law of T X_t from T^-1 x0 against the law of X_t from x0, coordinatewise KS.
VerificationReport check_isotropy(const PathSampler& sampler, std::span<const double> x0, double t,
                                  const std::vector<Eigen::MatrixXd>& rotations, std::size_t n, RngStream& rng,
                                  const CheckOptions& options = {});

/// a X_{a^-alpha t} from x0 / a against X_t from x0, coordinatewise KS. The
/// scaled run uses the step scaled by a^-alpha.
VerificationReport check_scaling(const ProcessSpec& spec, double a, double t, std::size_t n, RngStream& rng,
                                 const CheckOptions& options = {});

/// Bootstrap standard error of statistic(indices) over resamples of 0..n-1.
double bootstrap_se(std::size_t n, const std::function<double(std::span<const std::size_t>)>& statistic,
                    std::size_t resamples, RngStream& rng);

/// Calls fn(i) for i in [0, n) on `threads` workers. Results must be stored per index.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace ssmp
