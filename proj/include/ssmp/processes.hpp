#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ssmp/paths.hpp"
#include "ssmp/rng.hpp"

namespace ssmp {

/// Brownian motion on (0, inf) killed at 0.
struct BrownianAbs1D {
    double x0 = 1.0;
    bool operator==(const BrownianAbs1D&) const = default;
};

/// Bessel process of dimension delta, reflecting at 0 when delta < 2.
struct Bessel {
    double delta = 3.0;
    double x0 = 1.0;
    bool operator==(const Bessel&) const = default;
};

/// Strictly stable process on the line; optionally absorbed on entering (-epsilon, epsilon).
struct Stable1D {
    double alpha = 1.5;
    double rho = 0.5;
    double x0 = 1.0;
    bool absorb_at_zero = false;
    double epsilon = 1e-4;
    bool operator==(const Stable1D&) const = default;
};

/// Rotation-invariant stable process in R^d, d >= 2, with E exp(i<l, X_1>) = exp(-|l|^alpha).
struct IsotropicStable {
    double alpha = 1.0;
    Point x0 = {1.0, 0.0};
    bool operator==(const IsotropicStable&) const = default;
};

/// d independent Bessel(delta) coordinates on (0, inf)^d, absorbed when one of them hits 0.
struct FreeBessel {
    double delta = 3.0;
    Point x0 = {1.0, 1.0};
    bool operator==(const FreeBessel&) const = default;
};

/// Bessel process of dimension 3.
struct Bes3 {
    double x0 = 1.0;
    bool operator==(const Bes3&) const = default;
};

using ProcessVariant = std::variant<BrownianAbs1D, Bessel, Stable1D, IsotropicStable, FreeBessel, Bes3>;

struct ProcessSpec {
    ProcessVariant process = BrownianAbs1D{};
    double horizon = 1.0;
    double step = 1e-2;

    void validate() const;
    /// Self-similarity index.
    double alpha() const;
    std::size_t dim() const;
    Point start() const;
    /// Same process started elsewhere.
    ProcessSpec started_at(std::span<const double> x) const;
    std::string kind() const;
    /// Whether x lies in the state space (the cone minus the absorbing set).
    bool in_state_space(std::span<const double> x) const;

    bool operator==(const ProcessSpec&) const = default;
};

/// One-step simulator; the building block of simulate() and of the path samplers.
class ProcessStepper {
public:
    ProcessStepper(const ProcessSpec& spec, std::span<const double> start, double step);

    std::span<const double> state() const { return state_; }
    bool alive() const { return alive_; }
    double step() const { return step_; }
    /// Advances by one step; returns false once the process is absorbed.
    bool advance(RngStream& rng);

private:
    const ProcessSpec* spec_;
    Point state_;
    bool alive_ = true;
    double step_;
    double scale_ = 0.0;  // step-dependent constant of the increment law
};

/// Path on the grid k * step, k = 0..N with N = grid_intervals(horizon, step).
/// Absorption is recorded at the first grid time the process is found dead.
SsmpPath simulate(const ProcessSpec& spec, RngStream& rng);

/// Transition density of BES(3): (y / x) (phi_t(y - x) - phi_t(y + x)).
double bes3_density(double x, double y, double t);
/// P_x(R_t <= r) for BES(3), in closed form.
double bes3_cdf(double x, double r, double t);

/// Euler scheme for the MAP (theta, xi) of the free Bessel process with delta > 2.
/// theta lives on the unit sphere in the positive cone and is renormalised every step.
MapPath free_bessel_map_sde(double delta, std::span<const double> theta0, double xi0, double horizon, double step,
                            RngStream& rng);

/// Positive functions used as Doob transforms.
struct HarmonicSpec {
    enum class Kind { PowerNorm, PowerCoord, AngularWeighted };
    Kind kind = Kind::PowerNorm;
    double exponent = 0.0;
    double pi_minus = 1.0;
    double pi_plus = 1.0;

    /// x -> ||x||^p
    static HarmonicSpec power_norm(double p) { return {Kind::PowerNorm, p}; }
    /// x -> x^p on (0, inf)
    static HarmonicSpec power_coord(double p) { return {Kind::PowerCoord, p}; }
    /// x -> pi(sign x) |x|^p on R \ {0}
    static HarmonicSpec angular_weighted(double pi_minus, double pi_plus, double p) {
        return {Kind::AngularWeighted, p, pi_minus, pi_plus};
    }

    bool operator==(const HarmonicSpec&) const = default;
};

double evaluate_h(const HarmonicSpec& h, std::span<const double> x);

struct SignOccupation {
    double pi_minus = 0.0;
    double pi_plus = 0.0;
    std::size_t n_paths = 0;
};

/// Long-run share of MAP time spent by theta at -1 and +1 for a one-dimensional
/// stable process, measured on lamperti_inverse of simulated paths.
SignOccupation estimate_sign_occupation(const ProcessSpec& spec, std::size_t n_paths, RngStream& rng);

}  // namespace ssmp
