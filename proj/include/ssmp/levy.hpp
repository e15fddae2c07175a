#pragma once

#include <complex>
#include <optional>
#include <string>
#include <variant>

#include "ssmp/rng.hpp"

namespace ssmp {

using Complex = std::complex<double>;

struct DiracLaw {
    double value = 0.0;
    bool operator==(const DiracLaw&) const = default;
};

struct GaussianLaw {
    double mean = 0.0;
    double sd = 1.0;
    bool operator==(const GaussianLaw&) const = default;
};

/// Value `a` with probability `p`, value `b` otherwise.
struct TwoPointLaw {
    double a = 0.0;
    double p = 0.5;
    double b = 0.0;
    bool operator==(const TwoPointLaw&) const = default;
};

struct UniformLaw {
    double lo = 0.0;
    double hi = 1.0;
    bool operator==(const UniformLaw&) const = default;
};

/// Law of a real jump size. Every variant has exact sampling and a closed-form
/// moment generating function.
struct JumpLaw {
    std::variant<DiracLaw, GaussianLaw, TwoPointLaw, UniformLaw> law = DiracLaw{};

    static JumpLaw dirac(double c) { return {DiracLaw{c}}; }
    static JumpLaw gaussian(double mean, double sd) { return {GaussianLaw{mean, sd}}; }
    static JumpLaw two_point(double a, double p, double b) { return {TwoPointLaw{a, p, b}}; }
    static JumpLaw uniform(double lo, double hi) { return {UniformLaw{lo, hi}}; }

    void validate() const;
    /// E[exp(u J)]. Imaginary u always; real u only for bounded laws and Gaussian.
    Complex mgf(Complex u) const;
    bool bounded() const;
    /// Law of -J.
    JumpLaw negated() const;
    /// Simplest variant describing the same law (degenerate cases become Dirac,
    /// two-point atoms ordered), so structurally equal laws compare equal.
    JumpLaw canonical() const;
    std::string describe() const;

    bool operator==(const JumpLaw&) const = default;
};

/// Strictly stable component. `rho` is the positivity parameter P(X_1 > 0).
struct StablePart {
    double alpha = 1.0;
    double rho = 0.5;
    bool operator==(const StablePart&) const = default;
};

struct CompoundPoisson {
    double rate = 0.0;
    JumpLaw jump;
    bool operator==(const CompoundPoisson&) const = default;
};

/// One-dimensional, possibly killed, Lévy process:
/// drift + Brownian part + strictly stable part + compound Poisson part.
struct LevySpec {
    double drift = 0.0;
    double sigma = 0.0;
    std::optional<StablePart> stable;
    std::optional<CompoundPoisson> cpois;
    double kill_rate = 0.0;

    void validate() const;
    /// Same process without killing.
    LevySpec unkilled() const;
    /// Law of -xi: drift and jumps mirrored, rho -> 1 - rho.
    LevySpec negated() const;
    bool has_finite_exponential_moments() const;

    bool operator==(const LevySpec&) const = default;
};

/// Skewness beta of the standard (S1) parametrisation for given (alpha, rho).
double stable_beta(double alpha, double rho);

/// psi(u) with E[exp(u xi_1); not killed] = exp(psi(u)); u must be purely imaginary.
Complex characteristic_exponent(const LevySpec& spec, Complex u);

/// Real-argument Laplace exponent; requires finite exponential moments
/// (no stable part, bounded compound Poisson jumps).
double laplace_exponent(const LevySpec& spec, double u);

struct Increment {
    double value = 0.0;
    bool killed = false;
};

/// Exact-in-law draw of xi_dt - xi_0, plus an independent killing flag with
/// probability 1 - exp(-kill_rate * dt).
Increment sample_increment(const LevySpec& spec, double dt, RngStream& rng);

double sample_jump(const JumpLaw& law, RngStream& rng);

/// Chambers-Mallows-Stuck draw from S1(alpha, beta, 1).
double sample_stable(double alpha, double beta, RngStream& rng);

/// Positive strictly stable variable of index `alpha` < 1 with Laplace
/// transform E[exp(-u S)] = exp(-u^alpha).
double sample_positive_stable(double alpha, RngStream& rng);

}  // namespace ssmp
