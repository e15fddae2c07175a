#include "ssmp/levy.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ssmp {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_imaginary(Complex u) { return u.real() == 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// JumpLaw

void JumpLaw::validate() const {
    std::visit(overloaded{
                   [](const DiracLaw& l) { require(std::isfinite(l.value), "Dirac value must be finite"); },
                   [](const GaussianLaw& l) {
                       require(std::isfinite(l.mean) && std::isfinite(l.sd), "Gaussian parameters must be finite");
                       require(l.sd >= 0.0, "Gaussian sd must be >= 0");
                   },
                   [](const TwoPointLaw& l) {
                       require(std::isfinite(l.a) && std::isfinite(l.b), "two-point atoms must be finite");
                       require(l.p >= 0.0 && l.p <= 1.0, "two-point probability must lie in [0, 1]");
                   },
                   [](const UniformLaw& l) {
                       require(std::isfinite(l.lo) && std::isfinite(l.hi), "uniform bounds must be finite");
                       require(l.lo <= l.hi, "uniform requires lo <= hi");
                   },
               },
               law);
}

Complex JumpLaw::mgf(Complex u) const {
    return std::visit(overloaded{
                          [&](const DiracLaw& l) { return std::exp(u * l.value); },
                          [&](const GaussianLaw& l) { return std::exp(u * l.mean + 0.5 * u * u * l.sd * l.sd); },
                          [&](const TwoPointLaw& l) { return l.p * std::exp(u * l.a) + (1.0 - l.p) * std::exp(u * l.b); },
                          [&](const UniformLaw& l) {
                              const double w = l.hi - l.lo;
                              const Complex z = u * w;
                              if (std::abs(z) < 1e-8) return std::exp(u * (0.5 * (l.lo + l.hi))) * (1.0 + z * z / 24.0);
                              return (std::exp(u * l.hi) - std::exp(u * l.lo)) / z;
                          },
                      },
                      law);
}

bool JumpLaw::bounded() const { return !std::holds_alternative<GaussianLaw>(law); }

JumpLaw JumpLaw::negated() const {
    return std::visit(overloaded{
                          [](const DiracLaw& l) { return dirac(-l.value); },
                          [](const GaussianLaw& l) { return gaussian(-l.mean, l.sd); },
                          [](const TwoPointLaw& l) {
                              // Even splits swap the atoms so symmetric laws map to themselves.
                              if (l.p == 0.5) return two_point(-l.b, 0.5, -l.a);
                              return two_point(-l.a, l.p, -l.b);
                          },
                          [](const UniformLaw& l) { return uniform(-l.hi, -l.lo); },
                      },
                      law);
}

JumpLaw JumpLaw::canonical() const {
    return std::visit(overloaded{
                          [](const DiracLaw& l) { return dirac(l.value); },
                          [](const GaussianLaw& l) { return l.sd == 0.0 ? dirac(l.mean) : gaussian(l.mean, l.sd); },
                          [](const TwoPointLaw& l) {
                              if (l.a == l.b || l.p == 1.0) return dirac(l.a);
                              if (l.p == 0.0) return dirac(l.b);
                              if (l.a > l.b) return two_point(l.b, 1.0 - l.p, l.a);
                              return two_point(l.a, l.p, l.b);
                          },
                          [](const UniformLaw& l) { return l.lo == l.hi ? dirac(l.lo) : uniform(l.lo, l.hi); },
                      },
                      law);
}

std::string JumpLaw::describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(overloaded{
                   [&](const DiracLaw& l) { os << "Dirac(" << l.value << ")"; },
                   [&](const GaussianLaw& l) { os << "Gaussian(" << l.mean << ", " << l.sd << ")"; },
                   [&](const TwoPointLaw& l) { os << "TwoPoint(" << l.a << " w.p. " << l.p << "; " << l.b << ")"; },
                   [&](const UniformLaw& l) { os << "Uniform(" << l.lo << ", " << l.hi << ")"; },
               },
               law);
    return os.str();
}

double sample_jump(const JumpLaw& law, RngStream& rng) {
    return std::visit(overloaded{
                          [](const DiracLaw& l) { return l.value; },
                          [&](const GaussianLaw& l) { return l.mean + l.sd * rng.normal(); },
                          [&](const TwoPointLaw& l) { return rng.uniform() < l.p ? l.a : l.b; },
                          [&](const UniformLaw& l) { return l.lo + (l.hi - l.lo) * rng.uniform(); },
                      },
                      law.law);
}

// ---------------------------------------------------------------------------
// LevySpec

double stable_beta(double alpha, double rho) {
    if (alpha == 1.0 || alpha == 2.0) return 0.0;
    return std::tan(kPi * alpha * (rho - 0.5)) / std::tan(kPi * alpha / 2.0);
}

void LevySpec::validate() const {
    require(std::isfinite(drift), "drift must be finite");
    require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be >= 0");
    require(std::isfinite(kill_rate) && kill_rate >= 0.0, "kill_rate must be >= 0");
    if (stable) {
        const auto [alpha, rho] = *stable;
        require(alpha > 0.0 && alpha <= 2.0, "stable alpha must lie in (0, 2]");
        require(rho > 0.0 && rho < 1.0, "stable rho must lie in (0, 1)");
        if (alpha == 1.0) require(rho == 0.5, "alpha = 1 is only supported with rho = 1/2");
        if (alpha == 2.0) require(rho == 0.5, "alpha = 2 forces rho = 1/2");
        require(std::abs(stable_beta(alpha, rho)) <= 1.0 + 1e-12,
                "rho outside the admissible range for this alpha (|beta| > 1)");
    }
    if (cpois) {
        require(std::isfinite(cpois->rate) && cpois->rate >= 0.0, "compound Poisson rate must be >= 0");
        cpois->jump.validate();
    }
}

LevySpec LevySpec::unkilled() const {
    LevySpec copy = *this;
    copy.kill_rate = 0.0;
    return copy;
}

LevySpec LevySpec::negated() const {
    LevySpec copy = *this;
    copy.drift = -drift;
    if (copy.stable) copy.stable->rho = 1.0 - stable->rho;
    if (copy.cpois) copy.cpois->jump = cpois->jump.negated();
    return copy;
}

bool LevySpec::has_finite_exponential_moments() const {
    if (stable) return false;
    return !cpois || cpois->rate == 0.0 || cpois->jump.bounded();
}

Complex characteristic_exponent(const LevySpec& spec, Complex u) {
    spec.validate();
    if (!is_imaginary(u)) throw std::invalid_argument("characteristic_exponent requires purely imaginary u");
    const double lambda = u.imag();
    Complex psi = spec.drift * u + 0.5 * spec.sigma * spec.sigma * u * u;
    if (spec.stable) {
        const auto [alpha, rho] = *spec.stable;
        const double mag = std::pow(std::abs(lambda), alpha);
        if (alpha == 1.0 || alpha == 2.0) {
            psi -= mag;
        } else {
            const double beta = stable_beta(alpha, rho);
            const double sgn = (lambda > 0.0) - (lambda < 0.0);
            psi -= mag * Complex(1.0, -beta * sgn * std::tan(kPi * alpha / 2.0));
        }
    }
    if (spec.cpois) psi += spec.cpois->rate * (spec.cpois->jump.mgf(u) - 1.0);
    return psi - spec.kill_rate;
}

double laplace_exponent(const LevySpec& spec, double u) {
    spec.validate();
    if (spec.stable) throw std::invalid_argument("real-argument exponent undefined with a stable part");
    double psi = spec.drift * u + 0.5 * spec.sigma * spec.sigma * u * u;
    if (spec.cpois) {
        if (!spec.cpois->jump.bounded()) throw std::invalid_argument("real-argument exponent requires bounded jumps");
        psi += spec.cpois->rate * (spec.cpois->jump.mgf(Complex(u, 0.0)).real() - 1.0);
    }
    return psi - spec.kill_rate;
}

// ---------------------------------------------------------------------------
// Sampling

double sample_stable(double alpha, double beta, RngStream& rng) {
    if (!(std::abs(beta) <= 1.0 + 1e-12)) throw std::invalid_argument("stable skewness must lie in [-1, 1]");
    const double v = kPi * (rng.uniform() - 0.5);
    if (alpha == 1.0) {
        if (beta != 0.0) throw std::invalid_argument("asymmetric Cauchy is not supported");
        return std::tan(v);
    }
    const double w = rng.exponential();
    const double t = beta * std::tan(kPi * alpha / 2.0);
    const double b = std::atan(t) / alpha;
    const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
    const double av = alpha * (v + b);
    return s * std::sin(av) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos(v - av) / w, (1.0 - alpha) / alpha);
}

double sample_positive_stable(double alpha, RngStream& rng) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("positive stable index must lie in (0, 1)");
    // S1(alpha, 1, c) has Laplace exponent c^alpha u^alpha / cos(pi alpha / 2).
    const double c = std::pow(std::cos(kPi * alpha / 2.0), 1.0 / alpha);
    return c * sample_stable(alpha, 1.0, rng);
}

Increment sample_increment(const LevySpec& spec, double dt, RngStream& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_increment requires dt > 0");
    double x = spec.drift * dt;
    if (spec.sigma > 0.0) x += spec.sigma * std::sqrt(dt) * rng.normal();
    if (spec.stable) {
        const auto [alpha, rho] = *spec.stable;
        x += std::pow(dt, 1.0 / alpha) * sample_stable(alpha, stable_beta(alpha, rho), rng);
    }
    if (spec.cpois && spec.cpois->rate > 0.0) {
        const std::uint64_t count = rng.poisson(spec.cpois->rate * dt);
        for (std::uint64_t k = 0; k < count; ++k) x += sample_jump(spec.cpois->jump, rng);
    }
    bool killed = false;
    if (spec.kill_rate > 0.0) killed = rng.uniform() < -std::expm1(-spec.kill_rate * dt);
    return {x, killed};
}

}  // namespace ssmp
