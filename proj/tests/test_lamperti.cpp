#include <cmath>
#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "pathwise.hpp"
#include "ssmp/lamperti.hpp"
#include "ssmp/map_engine.hpp"
#include "ssmp/processes.hpp"

using namespace ssmp;

namespace {

MapPath map_from(std::function<double(double)> xi, Point theta, double step, double horizon,
                 std::optional<double> lifetime = std::nullopt) {
    MapPath p;
    p.step = step;
    p.theta = PointSeries(theta.size());
    p.lifetime = lifetime;
    const std::size_t n = grid_intervals(horizon, step);
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = step * static_cast<double>(k);
        if (lifetime && t >= *lifetime) {
            p.xi.push_back(std::nan(""));
            p.theta.push_zero();
            continue;
        }
        p.xi.push_back(xi(t));
        p.theta.push_back(theta);
    }
    return p;
}

SsmpPath ssmp_from(std::function<Point(double)> x, double alpha, double step, double horizon) {
    SsmpPath p;
    p.step = step;
    p.alpha = alpha;
    const std::size_t n = grid_intervals(horizon, step);
    p.values = PointSeries(x(0.0).size());
    for (std::size_t k = 0; k <= n; ++k) p.values.push_back(x(step * static_cast<double>(k)));
    return p;
}

double max_error(const SsmpPath& p, std::function<double(double)> exact, double window) {
    double worst = 0.0;
    for (std::size_t k = 0; k < p.size() && p.time(k) <= window; ++k)
        worst = std::max(worst, std::abs(p.values[k][0] - exact(p.time(k))));
    return worst;
}

}  // namespace

TEST(Functional, ZeroXiIsTheClock) {
    const MapPath p = map_from([](double) { return 0.0; }, {1.0}, 0.01, 2.0);
    const auto F = additive_functional(p, Weight::exp_alpha_xi(1.5));
    ASSERT_EQ(F.segments(), 200u);
    for (std::size_t k = 0; k <= F.segments(); ++k) EXPECT_NEAR(F.at_grid(k), 0.01 * k, 1e-12);
    EXPECT_FALSE(F.transformed_lifetime());
}

TEST(Functional, LinearXi) {
    const double c = 0.8, alpha = 1.5, h = 1e-3;
    const MapPath p = map_from([&](double t) { return c * t; }, {1.0}, h, 1.0);
    const auto F = additive_functional(p, Weight::exp_alpha_xi(alpha));
    const double exact = (std::exp(alpha * c) - 1.0) / (alpha * c);
    EXPECT_NEAR(F.sup(), exact, h * (std::exp(alpha * c) - 1.0));
    EXPECT_LT(F.sup(), exact);  // left endpoints of an increasing integrand
}

TEST(Functional, ConstantPathNormPower) {
    const SsmpPath x = ssmp_from([](double) { return Point{0.6, 0.8 * 2}; }, 1.0, 0.01, 3.0);
    const double r = std::sqrt(0.36 + 2.56);
    const auto F = additive_functional(x, Weight::norm_power(-2.0));
    for (std::size_t k = 0; k <= F.segments(); k += 37) EXPECT_NEAR(F.at_grid(k), 0.01 * k * std::pow(r, -2.0), 1e-12);
}

TEST(Functional, LifetimeClosesLastSegment) {
    const MapPath p = map_from([](double) { return 0.0; }, {1.0}, 0.01, 1.0, 0.537);
    const auto F = additive_functional(p, Weight::exp_alpha_xi(2.0));
    ASSERT_TRUE(F.transformed_lifetime());
    EXPECT_NEAR(*F.transformed_lifetime(), 0.537, 1e-14);
}

TEST(Functional, DivergenceGuard) {
    // x = (1 - t)^2, so the weight x^-2 = (1 - t)^-4 passes 1/h^2 once 1 - t < 0.1
    const double h = 0.01;
    SsmpPath x = ssmp_from([](double t) { return Point{std::pow(std::max(1.0 - t, 0.0), 2)}; }, 1.0, h, 1.0);
    x.absorption = 1.0;
    const auto F = additive_functional(x, Weight::norm_power(-2.0));
    ASSERT_TRUE(F.divergent_segment);
    EXPECT_FALSE(F.transformed_lifetime());
    EXPECT_GE(*F.divergent_segment, 90u);
    EXPECT_LE(*F.divergent_segment, 91u);
    EXPECT_EQ(F.segments(), *F.divergent_segment);
    EXPECT_NEAR(F.end_time, h * static_cast<double>(*F.divergent_segment), 1e-12);
    const auto G = additive_functional(x, Weight::norm_power(-2.0), {.divergence_threshold = 1e6});
    EXPECT_GE(*G.divergent_segment, 96u);
    EXPECT_LE(*G.divergent_segment, 97u);
    const auto H = additive_functional(x, Weight::norm_power(-2.0), {.divergence_threshold = 1e300});
    EXPECT_FALSE(H.divergent_segment);
    EXPECT_TRUE(H.transformed_lifetime());
}

TEST(InvertTable, IdentityClock) {
    const MapPath p = map_from([](double) { return 0.0; }, {1.0}, 0.01, 1.0);
    const auto F = additive_functional(p, Weight::exp_alpha_xi(1.0));
    // first grid time whose functional value exceeds s
    const double t = invert_table(F, 0.37);
    EXPECT_NEAR(t, 0.38, 0.01 + 1e-12);
    const auto k = static_cast<std::size_t>(std::llround(t / 0.01));
    EXPECT_GT(F.at_grid(k), 0.37);
    EXPECT_LE(F.at_grid(k - 1), 0.37);
    EXPECT_THROW(invert_table(F, 1.01), std::out_of_range);
    EXPECT_THROW(invert_table(F, -0.1), std::out_of_range);
}

TEST(InvertTable, DoubleSpeed) {
    const MapPath p = map_from([](double) { return std::log(2.0); }, {1.0}, 0.01, 2.0);
    const auto F = additive_functional(p, Weight::exp_alpha_xi(1.0));
    EXPECT_NEAR(invert_table(F, 1.0), 0.5, 0.01 + 1e-12);
}

TEST(InvertTable, RecoversLogClock) {
    const double c = 0.8, alpha = 1.5, h = 1e-3;
    const MapPath p = map_from([&](double t) { return c * t; }, {1.0}, h, 1.0);
    const auto F = additive_functional(p, Weight::exp_alpha_xi(alpha));
    for (double s : {0.1, 0.5, 1.0, 1.5}) {
        const double tau = std::log1p(alpha * c * s) / (alpha * c);
        EXPECT_NEAR(invert_table(F, s), tau, 2 * h) << s;
    }
}

TEST(InvertTable, MonotoneRoundTrip) {
    RngStream rng(3, 0);
    const SsmpPath x = simulate({IsotropicStable{1.0, {1.0, 0.0}}, 2.0, 0.01}, rng);
    const auto F = additive_functional(x, Weight::norm_power(-1.0));
    for (std::size_t k = 0; k < F.segments(); ++k) {
        if (!(F.at_grid(k + 1) > F.at_grid(k))) continue;
        const double t = x.time(k);
        const double back = invert_table(F, F.at_grid(k));
        EXPECT_GE(back, t - 1e-12);
        EXPECT_LE(back, t + x.step + 1e-12);
    }
}

TEST(Forward, ConstantMap) {
    const MapPath p = map_from([](double) { return 0.3; }, {0.6, -0.8}, 0.01, 1.0);
    const SsmpPath x = lamperti_forward(p, 1.5);
    EXPECT_FALSE(x.absorption);
    for (std::size_t k = 0; k < x.size(); ++k) {
        EXPECT_NEAR(x.values[k][0], 0.6 * std::exp(0.3), 1e-14);
        EXPECT_NEAR(x.values[k][1], -0.8 * std::exp(0.3), 1e-14);
    }
}

TEST(Forward, LinearXi) {
    const double c = 0.7, alpha = 2.0, h = 1e-3;
    const MapPath p = map_from([&](double t) { return c * t; }, {-1.0}, h, 1.0);
    const SsmpPath x = lamperti_forward(p, alpha, {.out_horizon = 1.0});
    const auto exact = [&](double t) { return -std::pow(1.0 + alpha * c * t, 1.0 / alpha); };
    EXPECT_LT(max_error(x, exact, x.horizon()), 5 * h);
    EXPECT_GT(x.horizon(), 0.99);
}

TEST(Forward, AbsorbedAtMapLifetime) {
    const MapPath p = map_from([](double) { return 0.0; }, {1.0}, 0.01, 1.0, 0.537);
    const SsmpPath x = lamperti_forward(p, 1.0);
    ASSERT_TRUE(x.absorption);
    EXPECT_NEAR(*x.absorption, 0.537, 1e-14);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_EQ(x.values[k][0], x.time(k) < 0.537 ? 1.0 : 0.0);
}

TEST(Inverse, ConstantPath) {
    const SsmpPath x = ssmp_from([](double) { return Point{3.0, -4.0}; }, 1.0, 0.01, 1.0);
    const MapPath m = lamperti_inverse(x);
    ASSERT_GT(m.size(), 1u);
    for (std::size_t k = 0; k < m.size(); ++k) {
        EXPECT_NEAR(m.xi[k], std::log(5.0), 1e-14);
        EXPECT_NEAR(m.theta[k][0], 0.6, 1e-15);
        EXPECT_NEAR(m.theta[k][1], -0.8, 1e-15);
    }
}

TEST(Inverse, PowerPathGivesLinearXi) {
    const double c = 0.7, alpha = 2.0, h = 1e-3;
    const SsmpPath x =
        ssmp_from([&](double t) { return Point{std::pow(1.0 + alpha * c * t, 1.0 / alpha)}; }, alpha, h, 3.0);
    const MapPath m = lamperti_inverse(x, {.out_horizon = 1.0});
    ASSERT_NEAR(m.horizon(), 1.0, 1e-12);
    for (std::size_t k = 0; k < m.size(); ++k) EXPECT_NEAR(m.xi[k], c * m.time(k), 5 * h);
}

TEST(Inverse, ThetaStaysOnSphere) {
    RngStream rng(4, 0);
    const SsmpPath x = simulate({IsotropicStable{1.3, {0.3, -2.0, 1.0}}, 1.0, 0.01}, rng);
    const MapPath m = lamperti_inverse(x);
    for (std::size_t k = 0; k < m.size(); ++k) ASSERT_NEAR(norm(m.theta[k]), 1.0, 1e-12);
}

TEST(Invert, ConstantPath) {
    const SsmpPath x = ssmp_from([](double) { return Point{3.0, 4.0}; }, 1.0, 0.01, 1.0);
    const SsmpPath y = invert_path(x);
    ASSERT_GT(y.size(), 1u);
    for (std::size_t k = 0; k < y.size(); ++k) {
        EXPECT_NEAR(y.values[k][0], 3.0 / 25.0, 1e-15);
        EXPECT_NEAR(y.values[k][1], 4.0 / 25.0, 1e-15);
    }
}

// X_t = (1 + alpha c t)^(1/alpha): the inverted path is (1 - alpha c t)^(1/alpha), dying at 1/(alpha c).
TEST(Invert, PowerPath) {
    const double c = 1.0, alpha = 1.0, h = 1e-3;
    const SsmpPath x = ssmp_from([&](double t) { return Point{1.0 + alpha * c * t}; }, alpha, h, 100.0);
    const SsmpPath y = invert_path(x, {.out_horizon = 0.95});
    ASSERT_NEAR(y.horizon(), 0.95, 1e-12);
    EXPECT_LT(max_error(y, [&](double t) { return 1.0 - alpha * c * t; }, 0.95), 5 * h);
    EXPECT_FALSE(y.absorption);
    // the known range ends before the lifetime 1 / (alpha c)
    const SsmpPath full = invert_path(x, {.out_horizon = 2.0});
    EXPECT_LT(full.horizon(), 1.0);
    EXPECT_GT(full.horizon(), 0.98);
}

// A MAP killed at an exponential time gives an ssMp that jumps to 0; the inverse
// dies exactly when the inversion functional reaches that time.
TEST(Invert, LifetimeBookkeeping) {
    LevySpec s;
    s.sigma = 1.0;
    s.kill_rate = 1.0;
    const MapSpec spec = make_map_spec({{-1.0, 0.0}, {0.0, 1.0}}, (Eigen::MatrixXd(2, 2) << -1, 1, 1, -1).finished(),
                                       {s, s});
    int checked = 0;
    for (int r = 0; r < 20; ++r) {
        RngStream rng(5, r);
        const MapPath m = simulate_map(spec, 0, 0.0, 5.0, 0.001, rng);
        if (!m.lifetime) continue;
        const SsmpPath x = lamperti_forward(m, 1.0, {.out_horizon = 20.0, .out_step = 0.001});
        if (!x.absorption) continue;
        const auto F = additive_functional(x, Weight::norm_power(-2.0));
        const SsmpPath y = invert_path(x, {.out_horizon = F.sup() * 1.5});
        ASSERT_TRUE(y.absorption);
        EXPECT_EQ(*y.absorption, F.sup());
        for (std::size_t k = 0; k < y.size(); ++k)
            if (y.time(k) >= *y.absorption) {
                ASSERT_EQ(norm(y.values[k]), 0.0);
            }
        ++checked;
    }
    EXPECT_GT(checked, 5);
}

TEST(Embed, StartPoint) {
    const SsmpPath x = ssmp_from([](double) { return Point{-2.0}; }, 2.0, 0.01, 1.0);
    const MapPath m = embed_unabsorbed(x, 2.0);
    EXPECT_NEAR(m.xi[0], std::log(2.0), 1e-15);
    EXPECT_EQ(m.theta[0][0], -1.0);
    EXPECT_EQ(m.theta[0][1], 0.0);
}

// dA/dt = x^2 + A, so A_t = x^2 (e^t - 1) and xi_t = log|x| + t/2.
TEST(Embed, ConstantPathAlphaTwo) {
    const double x0 = 1.5, h = 1e-3;
    const SsmpPath x = ssmp_from([&](double) { return Point{x0}; }, 2.0, h, 20.0);
    const MapPath m = embed_unabsorbed(x, 2.0, {.out_horizon = 2.0, .out_step = h});
    ASSERT_NEAR(m.horizon(), 2.0, 1e-12);
    for (std::size_t k = 0; k < m.size(); ++k) {
        EXPECT_NEAR(m.xi[k], std::log(x0) + m.time(k) / 2.0, 5 * h);
        ASSERT_NEAR(norm(m.theta[k]), 1.0, 1e-12);
    }
}

TEST(Embed, RejectsAbsorbedPaths) {
    SsmpPath x = ssmp_from([](double) { return Point{1.0}; }, 2.0, 0.01, 1.0);
    x.absorption = 0.5;
    EXPECT_THROW(embed_unabsorbed(x, 2.0), std::invalid_argument);
}

// The first d coordinates of the forward transform of the embedded MAP give X back.
TEST(Embed, Reconstruction) {
    for (const ProcessSpec& spec : {ProcessSpec{IsotropicStable{1.0, {1.0, 0.5}}, 1.0, 1e-3},
                                    ProcessSpec{Bes3{1.0}, 1.0, 1e-3},
                                    ProcessSpec{Stable1D{1.5, 0.5, 1.0, false, 1e-4}, 1.0, 1e-3}}) {
        RngStream rng(6, 0);
        const SsmpPath x = simulate(spec, rng);
        const double a = x.alpha, h = x.step;
        double growth = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k)
            growth = std::max(growth, std::pow(norm(x.values[k]) * norm(x.values[k]) + std::pow(x.time(k), 2 / a), a / 2));
        const auto F = additive_functional(x, Weight::embed_radius(a));
        const MapPath m = embed_unabsorbed(x, a, {.out_horizon = F.sup(), .out_step = h / (8 * std::max(1.0, growth))});
        const SsmpPath y = lamperti_forward(m, a, {.out_horizon = x.horizon(), .out_step = h / 4});
        const SsmpPath back = project(y, x.dim());
        EXPECT_LE(jitter_distance(x, back, x.horizon() * (1 - h), 1e-9, 5 * h), 5 * h) << spec.kind();
        // the extra coordinate is the deterministic clock t^(1/alpha)
        for (std::size_t k = 0; k < y.size(); k += 97)
            EXPECT_NEAR(y.values[k][x.dim()], std::pow(y.time(k), 1 / a), 0.05) << spec.kind();
    }
}

TEST(Pathwise, InvolutionAndConjugation) {
    const ProcessSpec spec{IsotropicStable{1.0, {1.0, 0.0}}, 1.0, 1e-3};
    for (int r = 0; r < 5; ++r) {
        RngStream rng(7, r);
        const SsmpPath x = simulate(spec, rng);
        EXPECT_LE(pathwise::involution_distance(x, 5 * x.step), 5 * x.step);
        EXPECT_LE(pathwise::conjugation_distance(x, 5 * x.step), 5 * x.step);
    }
}

TEST(Pathwise, RoundTrip) {
    for (const ProcessSpec& spec : {ProcessSpec{BrownianAbs1D{1.0}, 1.0, 1e-3}, ProcessSpec{Bessel{1.5, 1.0}, 1.0, 1e-3},
                                    ProcessSpec{IsotropicStable{1.2, {0.0, 1.0, 1.0}}, 1.0, 1e-3}}) {
        for (int r = 0; r < 5; ++r) {
            RngStream rng(8, r);
            const SsmpPath x = simulate(spec, rng);
            EXPECT_LE(pathwise::round_trip_distance(x, 5 * x.step), 5 * x.step) << spec.kind();
        }
    }
}

TEST(Distance, SupDistance) {
    const SsmpPath a = ssmp_from([](double t) { return Point{t}; }, 1.0, 0.1, 1.0);
    const SsmpPath b = ssmp_from([](double t) { return Point{t + 0.05}; }, 1.0, 0.1, 1.0);
    EXPECT_NEAR(sup_distance(a, b, 1.0), 0.05, 1e-12);
    EXPECT_EQ(sup_distance(a, a, 1.0), 0.0);
}

TEST(Distance, JitterForShiftedJump) {
    const SsmpPath a = ssmp_from([](double t) { return Point{t < 0.5 ? 1.0 : 3.0}; }, 1.0, 0.01, 1.0);
    const SsmpPath b = ssmp_from([](double t) { return Point{t < 0.52 ? 1.0 : 3.0}; }, 1.0, 0.01, 1.0);
    // literal sup-error sees the whole jump
    EXPECT_NEAR(sup_distance(a, b, 1.0), 2.0, 1e-12);
    EXPECT_NEAR(jitter_distance(a, b, 1.0, 1e-9, 0.05), 0.02, 1e-12);
    EXPECT_TRUE(std::isinf(jitter_distance(a, b, 1.0, 1e-9, 0.01)));
    const SsmpPath c = ssmp_from([](double t) { return Point{t < 0.5 ? 1.0 : 2.9}; }, 1.0, 0.01, 1.0);
    EXPECT_TRUE(std::isinf(jitter_distance(a, c, 1.0, 1e-9, 0.5)));
}

TEST(Paths, CsvRoundTrip) {
    RngStream rng(9, 0);
    const SsmpPath x = simulate({BrownianAbs1D{0.05}, 1.0, 0.01}, rng);
    ASSERT_TRUE(x.absorption);
    std::stringstream s;
    write_csv(s, x, "first line\nsecond");
    const std::string text = s.str();
    EXPECT_NE(text.find("# first line\n# second\n"), std::string::npos);
    EXPECT_NE(text.find("t,x1,alive"), std::string::npos);
    const SsmpPath y = read_csv(s);
    EXPECT_EQ(y.size(), x.size());
    EXPECT_EQ(y.absorption, x.absorption);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_EQ(y.values[k][0], x.values[k][0]);
}

TEST(Paths, BinaryRoundTrip) {
    RngStream rng(10, 0);
    const SsmpPath x = simulate({IsotropicStable{1.5, {1.0, 2.0, 3.0}}, 1.0, 0.01}, rng);
    std::stringstream s;
    write_binary(s, x);
    EXPECT_EQ(read_binary(s), x);
    std::stringstream bad("SSMQ....");
    EXPECT_THROW(read_binary(bad), std::runtime_error);
}

TEST(Paths, GridIntervals) {
    EXPECT_EQ(grid_intervals(1.0, 0.1), 10u);
    EXPECT_EQ(grid_intervals(1.0, 0.3), 4u);
    EXPECT_EQ(grid_intervals(20.0, 1e-3), 20000u);
    EXPECT_THROW(grid_intervals(1.0, 2.0), std::invalid_argument);
}
