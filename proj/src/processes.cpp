#include "ssmp/processes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/bessel.hpp>

#include "ssmp/lamperti.hpp"
#include "ssmp/levy.hpp"

namespace ssmp {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

bool all_positive(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0; });
}

bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

// Exact BESQ(delta) transition over time h (reflecting at 0 when delta < 2).
double besq_step(double y, double delta, double h, RngStream& rng) {
    const auto n = rng.poisson(y / (2.0 * h));
    return 2.0 * h * rng.gamma(delta / 2.0 + static_cast<double>(n));
}

// Probability that the BESQ(delta) bridge from y to y2 over time h avoids 0, for delta < 2.
double besq_bridge_survival(double y, double y2, double delta, double h) {
    const double nu = std::abs(delta / 2.0 - 1.0);
    const double z = std::sqrt(y * y2) / h;
    if (z == 0.0) return 0.0;
    if (z > 500.0 || nu == 0.0) return 1.0;
    const double i = boost::math::cyl_bessel_i(nu, z);
    const double k = boost::math::cyl_bessel_k(nu, z);
    return i / (i + 2.0 / std::numbers::pi * std::sin(nu * std::numbers::pi) * k);
}

double phi(double u, double t) { return std::exp(-u * u / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t); }
double big_phi(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

}  // namespace

void ProcessSpec::validate() const {
    require(std::isfinite(horizon) && horizon > 0.0, "horizon must be positive");
    require(std::isfinite(step) && step > 0.0, "step must be positive");
    require(step <= horizon, "step must not exceed horizon");
    std::visit(Overloaded{
                   [](const BrownianAbs1D& p) { require(std::isfinite(p.x0) && p.x0 > 0.0, "x0 must be > 0"); },
                   [](const Bessel& p) {
                       require(std::isfinite(p.delta) && p.delta > 0.0, "delta must be > 0");
                       require(std::isfinite(p.x0) && p.x0 >= 0.0, "x0 must be >= 0");
                   },
                   [](const Stable1D& p) {
                       require(p.alpha > 0.0 && p.alpha < 2.0, "alpha must lie in (0, 2)");
                       require(p.rho > 0.0 && p.rho < 1.0, "rho must lie in (0, 1)");
                       require(p.alpha != 1.0 || p.rho == 0.5, "alpha = 1 requires rho = 1/2");
                       require(std::abs(stable_beta(p.alpha, p.rho)) <= 1.0 + 1e-12,
                               "rho outside the admissible range for this alpha (|beta| > 1)");
                       require(std::isfinite(p.x0) && p.x0 != 0.0, "x0 must be nonzero");
                       if (p.absorb_at_zero) {
                           require(p.alpha > 1.0, "absorption at zero needs alpha > 1");
                           require(p.epsilon > 0.0, "epsilon must be > 0");
                           require(std::abs(p.x0) >= p.epsilon, "x0 lies inside the absorbing band");
                       }
                       // without absorption x0 != 0 already puts the start in the state space
                   },
                   [](const IsotropicStable& p) {
                       require(p.alpha > 0.0 && p.alpha < 2.0, "alpha must lie in (0, 2)");
                       require(p.x0.size() >= 2, "isotropic stable needs d >= 2");
                       require(all_finite(p.x0) && norm(p.x0) > 0.0, "x0 must be nonzero");
                   },
                   [](const FreeBessel& p) {
                       require(std::isfinite(p.delta) && p.delta > 0.0, "delta must be > 0");
                       require(!p.x0.empty(), "free Bessel needs d >= 1");
                       require(all_finite(p.x0) && all_positive(p.x0), "x0 must lie in (0, inf)^d");
                   },
                   [](const Bes3& p) { require(std::isfinite(p.x0) && p.x0 > 0.0, "x0 must be > 0"); },
               },
               process);
}

double ProcessSpec::alpha() const {
    return std::visit(Overloaded{
                          [](const Stable1D& p) { return p.alpha; },
                          [](const IsotropicStable& p) { return p.alpha; },
                          [](const auto&) { return 2.0; },
                      },
                      process);
}

std::size_t ProcessSpec::dim() const {
    return std::visit(Overloaded{
                          [](const IsotropicStable& p) { return p.x0.size(); },
                          [](const FreeBessel& p) { return p.x0.size(); },
                          [](const auto&) { return std::size_t{1}; },
                      },
                      process);
}

Point ProcessSpec::start() const {
    return std::visit(Overloaded{
                          [](const IsotropicStable& p) { return p.x0; },
                          [](const FreeBessel& p) { return p.x0; },
                          [](const auto& p) { return Point{p.x0}; },
                      },
                      process);
}

ProcessSpec ProcessSpec::started_at(std::span<const double> x) const {
    if (x.size() != dim()) throw std::invalid_argument("start point has the wrong dimension");
    ProcessSpec out = *this;
    std::visit(Overloaded{
                   [&](IsotropicStable& p) { p.x0.assign(x.begin(), x.end()); },
                   [&](FreeBessel& p) { p.x0.assign(x.begin(), x.end()); },
                   [&](auto& p) { p.x0 = x[0]; },
               },
               out.process);
    return out;
}

std::string ProcessSpec::kind() const {
    return std::visit(Overloaded{
                          [](const BrownianAbs1D&) { return std::string("brownian_abs"); },
                          [](const Bessel&) { return std::string("bessel"); },
                          [](const Stable1D&) { return std::string("stable1d"); },
                          [](const IsotropicStable&) { return std::string("isotropic_stable"); },
                          [](const FreeBessel&) { return std::string("free_bessel"); },
                          [](const Bes3&) { return std::string("bes3"); },
                      },
                      process);
}

bool ProcessSpec::in_state_space(std::span<const double> x) const {
    if (x.size() != dim() || !all_finite(x)) return false;
    return std::visit(Overloaded{
                          [&](const Bessel&) { return x[0] >= 0.0; },
                          [&](const Stable1D& p) {
                              return p.absorb_at_zero ? std::abs(x[0]) >= p.epsilon : x[0] != 0.0;
                          },
                          [&](const IsotropicStable&) { return norm(x) > 0.0; },
                          [&](const auto&) { return all_positive(x); },
                      },
                      process);
}

ProcessStepper::ProcessStepper(const ProcessSpec& spec, std::span<const double> start, double step)
    : spec_(&spec), state_(start.begin(), start.end()), alive_(spec.in_state_space(start)), step_(step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    if (const auto* p = std::get_if<Stable1D>(&spec.process)) scale_ = std::pow(step, 1.0 / p->alpha);
    if (const auto* p = std::get_if<IsotropicStable>(&spec.process))
        scale_ = std::sqrt(2.0 * std::pow(step, 2.0 / p->alpha));
    if (!alive_) std::fill(state_.begin(), state_.end(), 0.0);
}

bool ProcessStepper::advance(RngStream& rng) {
    if (!alive_) return false;
    const double h = step_;
    auto kill = [&] {
        alive_ = false;
        std::fill(state_.begin(), state_.end(), 0.0);
        return false;
    };
    return std::visit(
        Overloaded{
            [&](const BrownianAbs1D&) {
                const double x = state_[0];
                const double y = x + std::sqrt(h) * rng.normal();
                if (y <= 0.0) return kill();
                if (rng.uniform() < std::exp(-2.0 * x * y / h)) return kill();
                state_[0] = y;
                return true;
            },
            [&](const Bessel& p) {
                state_[0] = std::sqrt(besq_step(state_[0] * state_[0], p.delta, h, rng));
                return true;
            },
            [&](const Bes3&) {
                state_[0] = std::sqrt(besq_step(state_[0] * state_[0], 3.0, h, rng));
                return true;
            },
            [&](const Stable1D& p) {
                state_[0] += scale_ * sample_stable(p.alpha, stable_beta(p.alpha, p.rho), rng);
                if (p.absorb_at_zero && std::abs(state_[0]) < p.epsilon) return kill();
                return true;
            },
            [&](const IsotropicStable& p) {
                const double s = sample_positive_stable(p.alpha / 2.0, rng);
                const double factor = scale_ * std::sqrt(s);
                for (double& v : state_) v += factor * rng.normal();
                return true;
            },
            [&](const FreeBessel& p) {
                bool hit = false;
                for (double& v : state_) {
                    const double y = v * v;
                    const double y2 = besq_step(y, p.delta, h, rng);
                    if (p.delta < 2.0 && rng.uniform() >= besq_bridge_survival(y, y2, p.delta, h)) hit = true;
                    v = std::sqrt(y2);
                }
                if (hit) return kill();
                return true;
            },
        },
        spec_->process);
}

SsmpPath simulate(const ProcessSpec& spec, RngStream& rng) {
    spec.validate();
    const std::size_t n = grid_intervals(spec.horizon, spec.step);
    const double h = spec.horizon / static_cast<double>(n);
    ProcessStepper stepper(spec, spec.start(), h);
    SsmpPath path;
    path.step = h;
    path.alpha = spec.alpha();
    path.values = PointSeries(spec.dim());
    path.values.reserve(n + 1);
    path.values.push_back(stepper.state());
    for (std::size_t k = 1; k <= n; ++k) {
        if (!stepper.advance(rng)) {
            path.absorption = path.time(k);
            for (; k <= n; ++k) path.values.push_zero();
            break;
        }
        path.values.push_back(stepper.state());
    }
    return path;
}

double bes3_density(double x, double y, double t) {
    if (!(x > 0.0 && y > 0.0 && t > 0.0)) throw std::invalid_argument("bes3_density needs x, y, t > 0");
    return y / x * (phi(y - x, t) - phi(y + x, t));
}

double bes3_cdf(double x, double r, double t) {
    if (!(x > 0.0 && t > 0.0)) throw std::invalid_argument("bes3_cdf needs x, t > 0");
    if (r <= 0.0) return 0.0;
    if (std::isinf(r)) return 1.0;
    const double s = std::sqrt(t);
    const double near = -t * (phi(r - x, t) - phi(-x, t)) + x * (big_phi((r - x) / s) - big_phi(-x / s));
    const double far = -t * (phi(r + x, t) - phi(x, t)) - x * (big_phi((r + x) / s) - big_phi(x / s));
    return std::clamp((near - far) / x, 0.0, 1.0);
}

MapPath free_bessel_map_sde(double delta, std::span<const double> theta0, double xi0, double horizon, double step,
                            RngStream& rng) {
    require(delta > 2.0, "the MAP representation needs delta > 2");
    require(!theta0.empty() && all_positive(theta0), "theta0 must lie in the open positive cone");
    require(std::abs(norm(theta0) - 1.0) <= 1e-9, "theta0 must have unit norm");
    require(std::isfinite(xi0), "xi0 must be finite");
    require(horizon > 0.0 && step > 0.0 && step <= horizon, "need 0 < step <= horizon");

    const std::size_t d = theta0.size();
    const double dd = static_cast<double>(d);
    const std::size_t n = grid_intervals(horizon, step);
    const double h = horizon / static_cast<double>(n);
    const double sqrt_h = std::sqrt(h);
    const double xi_drift = dd * delta / 2.0 - 1.0;

    MapPath path;
    path.step = h;
    path.theta = PointSeries(d);
    path.theta.reserve(n + 1);
    path.xi.reserve(n + 1);
    Point theta(theta0.begin(), theta0.end());
    const double r0 = norm(theta);
    for (double& v : theta) v /= r0;
    Point dw(d);
    double xi = xi0;
    path.theta.push_back(theta);
    path.xi.push_back(xi);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            dw[j] = sqrt_h * rng.normal();
            s += theta[j] * dw[j];
        }
        for (std::size_t i = 0; i < d; ++i) {
            const double th = theta[i];
            const double drift = (delta - 1.0) / (2.0 * th) - (dd * delta - 1.0) / 2.0 * th;
            theta[i] = std::abs(th + dw[i] - th * s + drift * h);
        }
        const double r = norm(theta);
        for (double& v : theta) v /= r;
        xi += s + xi_drift * h;
        path.theta.push_back(theta);
        path.xi.push_back(xi);
    }
    return path;
}

double evaluate_h(const HarmonicSpec& h, std::span<const double> x) {
    if (x.empty() || !all_finite(x)) throw std::invalid_argument("h evaluated at an invalid point");
    switch (h.kind) {
        case HarmonicSpec::Kind::PowerNorm: {
            const double r = norm(x);
            if (r == 0.0) throw std::domain_error("h is undefined at the origin");
            return std::pow(r, h.exponent);
        }
        case HarmonicSpec::Kind::PowerCoord:
            if (x.size() != 1 || !(x[0] > 0.0)) throw std::domain_error("h needs a point of (0, inf)");
            return std::pow(x[0], h.exponent);
        case HarmonicSpec::Kind::AngularWeighted: {
            if (x.size() != 1 || x[0] == 0.0) throw std::domain_error("h needs a nonzero real point");
            const double weight = x[0] > 0.0 ? h.pi_plus : h.pi_minus;
            return weight * std::pow(std::abs(x[0]), h.exponent);
        }
    }
    throw std::invalid_argument("unknown h");
}

SignOccupation estimate_sign_occupation(const ProcessSpec& spec, std::size_t n_paths, RngStream& rng) {
    const auto* p = std::get_if<Stable1D>(&spec.process);
    require(p != nullptr && !p->absorb_at_zero, "sign occupation needs an unabsorbed one-dimensional stable process");
    require(n_paths > 0, "need at least one path");
    double plus = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        auto child = rng.derive(i);
        const auto map = lamperti_inverse(simulate(spec, child));
        for (std::size_t k = 0; k < map.size(); ++k) {
            if (!map.alive_at(k)) break;
            plus += map.theta[k][0] > 0.0 ? 1.0 : 0.0;
            total += 1.0;
        }
    }
    return {1.0 - plus / total, plus / total, n_paths};
}

}  // namespace ssmp
