#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include "ssmp/processes.hpp"
#include "ssmp/stats.hpp"
#include "ssmp/veritas.hpp"

using namespace ssmp;

namespace {

// One draw of X_t through the catalog simulator, cemetery as nullopt.
std::optional<Point> draw(const ProcessSpec& spec, RngStream& rng) {
    const SsmpPath p = simulate(spec, rng);
    if (p.absorption) return std::nullopt;
    const auto last = p.values[p.size() - 1];
    return Point(last.begin(), last.end());
}

double besq_cdf(double x, double delta, double t, double r) {
    // ||X_t||^2 / t is noncentral chi-square with delta degrees and noncentrality x^2 / t
    boost::math::non_central_chi_squared law(delta, x * x / t);
    return boost::math::cdf(law, r * r / t);
}

}  // namespace

TEST(Bessel, SquaredMean) {
    for (double delta : {3.0, 1.5, 0.5}) {
        const double x = 1.2, t = 0.7;
        std::vector<double> sq;
        for (int r = 0; r < 100000; ++r) {
            RngStream rng(1, r);
            const auto v = draw({Bessel{delta, x}, t, t}, rng);
            ASSERT_TRUE(v);
            sq.push_back((*v)[0] * (*v)[0]);
        }
        const auto m = mean_and_se(sq);
        EXPECT_LE(std::abs(m.mean - (x * x + delta * t)), 3 * m.se) << delta;
    }
}

// Several exact steps compose to the same noncentral chi-square law.
TEST(Bessel, NoncentralChiSquareLaw) {
    for (double delta : {3.0, 1.0}) {
        std::vector<double> radii;
        for (int r = 0; r < 10000; ++r) {
            RngStream rng(2, r);
            radii.push_back((*draw({Bessel{delta, 0.8}, 1.0, 0.1}, rng))[0]);
        }
        const auto ks = ks_one_sample(radii, [&](double r) { return r <= 0 ? 0.0 : besq_cdf(0.8, delta, 1.0, r); });
        EXPECT_LT(ks.statistic, ks.critical_1) << delta;
    }
}

TEST(BrownianAbs, AbsorptionProbability) {
    std::vector<double> dead;
    for (int r = 0; r < 100000; ++r) {
        RngStream rng(3, r);
        dead.push_back(draw({BrownianAbs1D{1.0}, 1.0, 0.05}, rng) ? 0.0 : 1.0);
    }
    const auto m = mean_and_se(dead);
    const double exact = std::erfc(1.0 / std::numbers::sqrt2);  // 2 Phi(-1)
    EXPECT_NEAR(exact, 0.3173, 1e-4);
    EXPECT_LE(std::abs(m.mean - exact), 3 * m.se);
}

TEST(BrownianAbs, SurvivorsFollowKilledKernel) {
    // density of survivors: phi_t(y - 1) - phi_t(y + 1)
    std::vector<double> ys;
    for (int r = 0; r < 20000; ++r) {
        RngStream rng(4, r);
        if (auto v = draw({BrownianAbs1D{1.0}, 0.5, 0.01}, rng)) ys.push_back((*v)[0]);
    }
    const double t = 0.5;
    auto Phi = [](double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); };
    const double alive = 1.0 - 2.0 * Phi(-1.0 / std::sqrt(t));
    const auto ks = ks_one_sample(ys, [&](double y) {
        if (y <= 0) return 0.0;
        return (Phi((y - 1) / std::sqrt(t)) - Phi(-1 / std::sqrt(t)) - Phi((y + 1) / std::sqrt(t)) + Phi(1 / std::sqrt(t))) /
               alive;
    });
    EXPECT_LT(ks.statistic, ks.critical_1);
}

TEST(IsotropicStable, CauchyRadialOracle) {
    // radial CDF of the 2D Cauchy law from its Hankel transform: r * int J1(r s) e^-s ds
    for (double r : {0.3, 1.0, 2.5, 7.0}) {
        const double hankel = r * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                                      [&](double s) { return boost::math::cyl_bessel_j(1, r * s) * std::exp(-s); }, 0.0,
                                      60.0, 20, 1e-12);
        EXPECT_NEAR(hankel, 1.0 - 1.0 / std::sqrt(1.0 + r * r), 1e-9) << r;
    }
}

TEST(IsotropicStable, CauchyRadialLaw) {
    std::vector<double> radii;
    for (int r = 0; r < 10000; ++r) {
        RngStream rng(5, r);
        const auto v = draw({IsotropicStable{1.0, {1.0, 0.0}}, 1.0, 1.0}, rng);
        radii.push_back(std::hypot((*v)[0] - 1.0, (*v)[1]));
    }
    const auto ks = ks_one_sample(radii, [](double r) { return r <= 0 ? 0.0 : 1.0 - 1.0 / std::sqrt(1.0 + r * r); });
    EXPECT_LT(ks.statistic, ks.critical_1);
}

TEST(IsotropicStable, CharacteristicFunction) {
    // E exp(i <l, X_t - x>) = exp(-t |l|^alpha) in d = 3
    const double alpha = 1.4, t = 0.6;
    const Point l = {0.3, -0.8, 0.5};
    const double target = std::exp(-t * std::pow(norm(l), alpha));
    std::vector<double> re, im;
    for (int r = 0; r < 50000; ++r) {
        RngStream rng(6, r);
        const auto v = draw({IsotropicStable{alpha, {0.5, 0.5, 0.5}}, t, t / 3}, rng);
        double phase = 0;
        for (int i = 0; i < 3; ++i) phase += l[i] * ((*v)[i] - 0.5);
        re.push_back(std::cos(phase));
        im.push_back(std::sin(phase));
    }
    EXPECT_LE(std::abs(mean_and_se(re).mean - target), 4 * mean_and_se(re).se);
    EXPECT_LE(std::abs(mean_and_se(im).mean), 4 * mean_and_se(im).se);
}

TEST(FreeBessel, NormIsBesselOfDimensionD) {
    const Point x = {0.6, 1.1, 0.4};
    const double delta = 3.0, t = 0.8;
    std::vector<double> radii;
    for (int r = 0; r < 10000; ++r) {
        RngStream rng(7, r);
        radii.push_back(norm(*draw({FreeBessel{delta, x}, t, 0.2}, rng)));
    }
    const auto ks = ks_one_sample(radii, [&](double r) { return r <= 0 ? 0.0 : besq_cdf(norm(x), 3 * delta, t, r); });
    EXPECT_LT(ks.statistic, ks.critical_1);
}

// With delta < 2 the coordinates hit 0 and the process is absorbed; one coordinate
// dies with the probability of a BES(delta) reaching 0, which for delta = 1 is the
// Brownian absorption probability.
TEST(FreeBessel, KilledWhenACoordinateHitsZero) {
    std::vector<double> dead;
    for (int r = 0; r < 20000; ++r) {
        RngStream rng(8, r);
        dead.push_back(draw({FreeBessel{1.0, {1.0}}, 1.0, 0.1}, rng) ? 0.0 : 1.0);
    }
    const auto m = mean_and_se(dead);
    EXPECT_LE(std::abs(m.mean - std::erfc(1.0 / std::numbers::sqrt2)), 3 * m.se);
}

TEST(Stable1D, AbsorptionBand) {
    int absorbed = 0;
    for (int r = 0; r < 200; ++r) {
        RngStream rng(9, r);
        const SsmpPath p = simulate({Stable1D{1.5, 0.5, 1.0, true, 1e-2}, 5.0, 1e-3}, rng);
        if (!p.absorption) continue;
        ++absorbed;
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (p.alive_at(k)) {
                ASSERT_GE(std::abs(p.values[k][0]), 1e-2);
            } else {
                ASSERT_EQ(p.values[k][0], 0.0);
            }
        }
    }
    EXPECT_GT(absorbed, 50);
}

TEST(Stable1D, Validation) {
    EXPECT_THROW((ProcessSpec{Stable1D{0.8, 0.5, 1.0, true, 1e-4}}.validate()), std::invalid_argument);
    EXPECT_THROW((ProcessSpec{Stable1D{1.5, 0.5, 1e-5, true, 1e-4}}.validate()), std::invalid_argument);
    EXPECT_THROW((ProcessSpec{Stable1D{1.0, 0.7, 1.0, false, 1e-4}}.validate()), std::invalid_argument);
    EXPECT_THROW((ProcessSpec{Stable1D{1.5, 1.5, 1.0, false, 1e-4}}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((ProcessSpec{Stable1D{0.8, 0.3, -1.0, false, 1e-4}}.validate()));
}

TEST(Bes3, MatchesDensity) {
    std::vector<double> ys;
    for (int r = 0; r < 10000; ++r) {
        RngStream rng(10, r);
        ys.push_back((*draw({Bes3{1.0}, 0.5, 0.5}, rng))[0]);
    }
    const auto ks = ks_one_sample(ys, [](double y) { return y <= 0 ? 0.0 : bes3_cdf(1.0, y, 0.5); });
    EXPECT_LT(ks.statistic, ks.critical_1);
}

TEST(Bes3, DensityIntegratesToOne) {
    for (auto [x, t] : {std::pair{1.0, 0.5}, {0.2, 2.0}, {3.0, 0.1}}) {
        const double mass = boost::math::quadrature::exp_sinh<double>().integrate(
            [&](double y) { return y > 0 ? bes3_density(x, y, t) : 0.0; }, 1e-12);
        EXPECT_NEAR(mass, 1.0, 1e-8) << x << " " << t;
    }
}

TEST(Bes3, CdfMatchesQuadrature) {
    for (double r : {0.3, 1.0, 1.7, 4.0}) {
        const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [](double y) { return y > 0 ? bes3_density(1.0, y, 0.5) : 0.0; }, 0.0, r, 15, 1e-13);
        EXPECT_NEAR(bes3_cdf(1.0, r, 0.5), q, 1e-10) << r;
    }
}

TEST(Bes3, DensitySymmetry) {
    for (auto [x, y, t] : {std::tuple{1.0, 2.0, 0.3}, {0.4, 0.9, 1.7}, {2.5, 0.1, 0.05}})
        EXPECT_NEAR(x * bes3_density(x, y, t) / y, y * bes3_density(y, x, t) / x, 1e-13);
}

TEST(Bes3, PeakNearStartForSmallTime) {
    const double t = 1e-3, dy = 1e-4;
    double best = 0, arg = 0;
    for (double y = dy; y < 2.0; y += dy) {
        const double q = bes3_density(1.0, y, t);
        if (q > best) best = q, arg = y;
    }
    EXPECT_NEAR(arg, 1.0, 2 * dy + t);
}

TEST(Bes3, HTransformOfAbsorbedBrownian) {
    // direct BES(3) draws against absorbed Brownian draws weighted by X_1 / x
    const std::size_t n = 10000;
    std::vector<double> direct(n), bm(n);
    for (std::size_t r = 0; r < n; ++r) {
        RngStream a(11, r), b(12, r);
        direct[r] = (*draw({Bes3{1.0}, 1.0, 1.0}, a))[0];
        const auto v = draw({BrownianAbs1D{1.0}, 1.0, 0.01}, b);
        bm[r] = v ? (*v)[0] : 0.0;
    }
    const std::vector<double> grid = {0.5, 1.0, 1.5, 2.0, 3.0};
    auto gap = [&](std::span<const std::size_t> idx, double y) {
        double w = 0, d = 0;
        for (std::size_t i : idx) {
            w += bm[i] * (bm[i] <= y);
            d += direct[i] <= y;
        }
        return (w - d) / static_cast<double>(idx.size());
    };
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    double sup = 0, se = 0;
    RngStream boot(13, 0);
    for (double y : grid) {
        sup = std::max(sup, std::abs(gap(all, y)));
        se = std::max(se, bootstrap_se(n, [&](std::span<const std::size_t> idx) { return gap(idx, y); }, 200, boot));
    }
    EXPECT_LE(sup, 3 * se);
}

TEST(MapSde, XiDrift) {
    const double delta = 3.0, t = 0.5;
    const Point theta0 = {0.6, 0.8};
    std::vector<double> inc;
    for (int r = 0; r < 10000; ++r) {
        RngStream rng(14, r);
        const MapPath m = free_bessel_map_sde(delta, theta0, 0.2, t, 0.01, rng);
        inc.push_back(m.xi.back() - 0.2);
    }
    const auto m = mean_and_se(inc);
    EXPECT_LE(std::abs(m.mean - (2 * delta / 2 - 1) * t), 3 * m.se);
}

TEST(MapSde, ThetaOnSphereInCone) {
    RngStream rng(15, 0);
    const Point theta0 = {0.5, 0.5, std::sqrt(0.5)};
    const MapPath m = free_bessel_map_sde(4.0, theta0, 0.0, 2.0, 1e-3, rng);
    for (std::size_t k = 0; k < m.size(); ++k) {
        ASSERT_NEAR(norm(m.theta[k]), 1.0, 1e-12);
        for (double v : m.theta[k]) ASSERT_GE(v, 0.0);
    }
    EXPECT_THROW(free_bessel_map_sde(1.5, theta0, 0.0, 1.0, 0.1, rng), std::invalid_argument);
}

TEST(Harmonic, Examples) {
    EXPECT_DOUBLE_EQ(evaluate_h(HarmonicSpec::power_norm(1.0 - 2.0), Point{3.0, 4.0}), 0.2);
    EXPECT_DOUBLE_EQ(evaluate_h(HarmonicSpec::power_coord(2.0 * (1.0 - 0.5)), Point{4.0}), 4.0);
    EXPECT_DOUBLE_EQ(evaluate_h(HarmonicSpec::power_norm(2.0 - 1.0 * 2.0), Point{-7.3}), 1.0);
    EXPECT_DOUBLE_EQ(evaluate_h(HarmonicSpec::angular_weighted(0.3, 0.7, 0.5), Point{-4.0}), 0.6);
    EXPECT_THROW(evaluate_h(HarmonicSpec::power_coord(1.0), Point{-1.0}), std::domain_error);
    EXPECT_THROW(evaluate_h(HarmonicSpec::power_norm(-1.0), Point{0.0, 0.0}), std::domain_error);
}

// Starting at x > 0 biases short runs towards +; long horizons wash it out.
TEST(SignOccupation, SymmetricStable) {
    RngStream rng(16, 0);
    const auto occ = estimate_sign_occupation({Stable1D{1.5, 0.5, 1.0, false, 1e-4}, 200.0, 0.01}, 200, rng);
    EXPECT_NEAR(occ.pi_minus + occ.pi_plus, 1.0, 1e-12);
    EXPECT_EQ(occ.n_paths, 200u);
    EXPECT_NEAR(occ.pi_plus, 0.5, 0.05);
}

TEST(SignOccupation, MirrorImage) {
    RngStream a(17, 0), b(18, 0);
    const auto up = estimate_sign_occupation({Stable1D{1.5, 0.6, 1.0, false, 1e-4}, 200.0, 0.01}, 200, a);
    const auto down = estimate_sign_occupation({Stable1D{1.5, 0.4, -1.0, false, 1e-4}, 200.0, 0.01}, 200, b);
    EXPECT_NEAR(up.pi_plus, down.pi_minus, 0.05);
    EXPECT_THROW(estimate_sign_occupation({Stable1D{1.5, 0.5, 1.0, true, 1e-4}, 1.0, 0.01}, 10, a),
                 std::invalid_argument);
}

TEST(ProcessSpec, Accessors) {
    const ProcessSpec iso{IsotropicStable{1.3, {1.0, 2.0, 2.0}}, 1.0, 0.1};
    EXPECT_EQ(iso.dim(), 3u);
    EXPECT_EQ(iso.alpha(), 1.3);
    EXPECT_EQ(iso.kind(), "isotropic_stable");
    EXPECT_EQ(iso.started_at(Point{0.0, 1.0, 0.0}).start(), (Point{0.0, 1.0, 0.0}));
    EXPECT_FALSE(iso.in_state_space(Point{0.0, 0.0, 0.0}));
    const ProcessSpec fb{FreeBessel{3.0, {1.0, 1.0}}, 1.0, 0.1};
    EXPECT_EQ(fb.alpha(), 2.0);
    EXPECT_FALSE(fb.in_state_space(Point{1.0, -0.1}));
    EXPECT_TRUE((ProcessSpec{Bessel{1.0, 0.0}}.in_state_space(Point{0.0})));
    EXPECT_THROW((ProcessSpec{IsotropicStable{1.0, {1.0}}}.validate()), std::invalid_argument);
    EXPECT_THROW((ProcessSpec{BrownianAbs1D{1.0}, 1.0, 2.0}.validate()), std::invalid_argument);
}

TEST(Simulate, Reproducible) {
    const ProcessSpec spec{FreeBessel{1.5, {1.0, 0.5}}, 1.0, 0.01};
    RngStream a(17, 4), b(17, 4);
    EXPECT_EQ(simulate(spec, a), simulate(spec, b));
}
