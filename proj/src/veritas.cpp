#include "ssmp/veritas.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <mutex>
#include <thread>

namespace ssmp {

namespace {

constexpr double kAbsoluteFloor = 1e-12;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

VerificationReport compare_means(std::string name, MeanEstimate lhs, MeanEstimate rhs, std::size_t n,
                                 std::uint64_t seed, double k_se) {
    VerificationReport r;
    r.name = std::move(name);
    r.lhs = lhs.mean;
    r.rhs = rhs.mean;
    r.se_lhs = lhs.se;
    r.se_rhs = rhs.se;
    r.statistic = std::abs(lhs.mean - rhs.mean);
    r.threshold = k_se * std::hypot(lhs.se, rhs.se) + kAbsoluteFloor;
    r.pass = r.statistic <= r.threshold;
    r.n_samples = n;
    r.seed = seed;
    return r;
}

// Composite verdict: the worst component ratio against 1.
void summarise(VerificationReport& report) {
    double worst = 0.0;
    bool pass = true;
    for (const auto& c : report.components) {
        worst = std::max(worst, c.threshold > 0.0 ? c.statistic / c.threshold
                                                  : (c.statistic > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
        pass = pass && c.pass;
    }
    report.statistic = worst;
    report.threshold = 1.0;
    report.pass = pass;
}

double ks_value(const std::optional<Point>& x, std::size_t coord) {
    return x ? (*x)[coord] : std::numeric_limits<double>::infinity();
}

Point uniform_direction(std::size_t dim, MeasureSpec::Cone cone, RngStream& rng) {
    Point u(dim);
    if (dim == 1) {
        u[0] = (cone == MeasureSpec::Cone::Full && rng.uniform() < 0.5) ? -1.0 : 1.0;
        return u;
    }
    double r = 0.0;
    while (r == 0.0) {
        for (double& v : u) v = rng.normal();
        r = norm(u);
    }
    for (double& v : u) v = (cone == MeasureSpec::Cone::PositiveOrthant ? std::abs(v) : v) / r;
    return u;
}

}  // namespace

nlohmann::ordered_json VerificationReport::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["pass"] = pass;
    j["statistic"] = number(statistic);
    j["threshold"] = number(threshold);
    j["lhs"] = number(lhs);
    j["rhs"] = number(rhs);
    j["se_lhs"] = number(se_lhs);
    j["se_rhs"] = number(se_rhs);
    j["n_samples"] = n_samples;
    j["seed"] = seed;
    if (!components.empty()) {
        auto& arr = j["components"] = nlohmann::ordered_json::array();
        for (const auto& c : components) arr.push_back(c.to_json());
    }
    return j;
}

std::string VerificationReport::summary() const {
    return name + ": " + (pass ? "PASS" : "FAIL") + " statistic=" + format_double(statistic) +
           " threshold=" + format_double(threshold) + " lhs=" + format_double(lhs) + " rhs=" + format_double(rhs) +
           " n=" + std::to_string(n_samples);
}

TestFunctionSpec TestFunctionSpec::bump(Point center, double width) {
    TestFunctionSpec f;
    f.kind = Kind::GaussianBump;
    f.center = std::move(center);
    f.width = width;
    return f;
}

TestFunctionSpec TestFunctionSpec::annulus(double r_lo, double r_hi) {
    TestFunctionSpec f;
    f.kind = Kind::IndicatorAnnulus;
    f.r_lo = r_lo;
    f.r_hi = r_hi;
    return f;
}

TestFunctionSpec TestFunctionSpec::coordinate_power(double exponent, double cap) {
    TestFunctionSpec f;
    f.kind = Kind::CoordinatePower;
    f.exponent = exponent;
    f.cap = cap;
    return f;
}

void TestFunctionSpec::validate() const {
    switch (kind) {
        case Kind::GaussianBump:
            if (center.empty() || !(width > 0.0) || !std::isfinite(width))
                throw std::invalid_argument("bump needs a center and a positive width");
            for (double c : center)
                if (!std::isfinite(c)) throw std::invalid_argument("bump center must be finite");
            return;
        case Kind::IndicatorAnnulus:
            if (!(r_lo > 0.0 && r_hi > r_lo && std::isfinite(r_hi)))
                throw std::invalid_argument("annulus needs 0 < r_lo < r_hi < inf");
            return;
        case Kind::CoordinatePower:
            if (!std::isfinite(exponent) || !(cap > 0.0) || !std::isfinite(cap))
                throw std::invalid_argument("coordinate power needs a finite exponent and a positive cap");
            return;
    }
}

double TestFunctionSpec::operator()(std::span<const double> x) const {
    switch (kind) {
        case Kind::GaussianBump: {
            if (x.size() != center.size()) throw std::invalid_argument("bump evaluated in the wrong dimension");
            double r2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - center[i]) * (x[i] - center[i]);
            if (r2 > 16.0 * width * width) return 0.0;
            return std::exp(-r2 / (2.0 * width * width));
        }
        case Kind::IndicatorAnnulus: {
            const double r = norm(x);
            return (r >= r_lo && r < r_hi) ? 1.0 : 0.0;
        }
        case Kind::CoordinatePower: {
            const double v = std::abs(x[0]);
            if (v == 0.0) return exponent < 0.0 ? cap : (exponent == 0.0 ? std::min(1.0, cap) : 0.0);
            return std::min(cap, std::pow(v, exponent));
        }
    }
    return 0.0;
}

std::optional<std::pair<double, double>> TestFunctionSpec::radial_support() const {
    switch (kind) {
        case Kind::GaussianBump: {
            const double c = norm(center);
            if (c - 4.0 * width <= 0.0) return std::nullopt;
            return std::pair{c - 4.0 * width, c + 4.0 * width};
        }
        case Kind::IndicatorAnnulus:
            return std::pair{r_lo, r_hi};
        case Kind::CoordinatePower:
            return std::nullopt;
    }
    return std::nullopt;
}

MeasureSpec MeasureSpec::power_norm(double p, double a, double b, Cone cone) {
    MeasureSpec m;
    m.radial_exponent = p;
    m.a = a;
    m.b = b;
    m.cone = cone;
    return m;
}

void MeasureSpec::validate(std::size_t dim) const {
    if (dim == 0) throw std::invalid_argument("measure needs dimension >= 1");
    if (!(a > 0.0 && b > a && std::isfinite(b))) throw std::invalid_argument("degenerate region: need 0 < a < b < inf");
    if (!std::isfinite(radial_exponent)) throw std::invalid_argument("radial exponent must be finite");
    if (angular == Angular::ProductPower && cone != Cone::PositiveOrthant)
        throw std::invalid_argument("product-power angular density needs the positive orthant");
    if (angular == Angular::SignWeights && (dim != 1 || !(pi_minus >= 0.0) || !(pi_plus >= 0.0)))
        throw std::invalid_argument("sign weights need d = 1 and nonnegative weights");
}

double MeasureSpec::density(std::span<const double> x) const {
    const double r = norm(x);
    double angular_part = 1.0;
    switch (angular) {
        case Angular::Constant:
            break;
        case Angular::ProductPower:
            for (double v : x) angular_part *= std::pow(std::abs(v) / r, angular_exponent);
            break;
        case Angular::SignWeights:
            angular_part = x[0] > 0.0 ? pi_plus : pi_minus;
            break;
    }
    return angular_part * std::pow(r, radial_exponent);
}

double MeasureSpec::sphere_measure(std::size_t dim) const {
    const double d = static_cast<double>(dim);
    const double full = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
    return cone == Cone::Full ? full : full / std::pow(2.0, d);
}

PathSampler process_sampler(const ProcessSpec& spec) {
    spec.validate();
    return [spec](std::span<const double> x, double t, RngStream& rng) -> std::optional<Point> {
        if (!(t >= 0.0)) throw std::invalid_argument("time must be >= 0");
        ProcessStepper stepper(spec, x, 1.0);
        if (t > 0.0) {
            const std::size_t n = grid_intervals(t, std::min(spec.step, t));
            stepper = ProcessStepper(spec, x, t / static_cast<double>(n));
            for (std::size_t k = 0; k < n && stepper.alive(); ++k) stepper.advance(rng);
        }
        if (!stepper.alive()) return std::nullopt;
        const auto s = stepper.state();
        return Point(s.begin(), s.end());
    };
}

PathSampler inversion_sampler(const ProcessSpec& spec, const InversionOptions& options) {
    spec.validate();
    const std::size_t cap = grid_intervals(spec.horizon, spec.step);
    const double h = spec.horizon / static_cast<double>(cap);
    const double threshold = options.divergence_threshold.value_or(1.0 / (h * h));
    return [spec, cap, h, threshold](std::span<const double> x, double t, RngStream& rng) -> std::optional<Point> {
        const double r0 = norm(x);
        if (r0 == 0.0) return std::nullopt;
        Point y(x.begin(), x.end());
        for (double& v : y) v /= r0 * r0;
        ProcessStepper stepper(spec, y, h);
        const double exponent = -2.0 * spec.alpha();
        double total = 0.0;
        for (std::size_t m = 0; m < cap && stepper.alive(); ++m) {
            const auto state = stepper.state();
            const double r = norm(state);
            if (r == 0.0) return std::nullopt;
            const double w = std::pow(r, exponent);
            if (!(w <= threshold)) return std::nullopt;
            if (total + w * h > t) {
                Point out(state.begin(), state.end());
                for (double& v : out) v /= r * r;
                return out;
            }
            total = total + w * h;
            stepper.advance(rng);
        }
        return std::nullopt;
    };
}

PathSampler levy_sampler(const LevySpec& spec) {
    spec.validate();
    return [spec](std::span<const double> x, double t, RngStream& rng) -> std::optional<Point> {
        if (x.size() != 1) throw std::invalid_argument("Lévy sampler is one-dimensional");
        if (t == 0.0) return Point{x[0]};
        const auto inc = sample_increment(spec, t, rng);
        if (inc.killed) return std::nullopt;
        return Point{x[0] + inc.value};
    };
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::mutex error_mutex;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

double bootstrap_se(std::size_t n, const std::function<double(std::span<const std::size_t>)>& statistic,
                    std::size_t resamples, RngStream& rng) {
    if (n == 0 || resamples < 2) throw std::invalid_argument("bootstrap needs data and at least two resamples");
    std::vector<double> stats(resamples);
    std::vector<std::size_t> idx(n);
    for (std::size_t r = 0; r < resamples; ++r) {
        for (auto& i : idx) i = std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)));
        stats[r] = statistic(idx);
    }
    const auto est = mean_and_se(stats);
    return est.se * std::sqrt(static_cast<double>(resamples));
}

VerificationReport check_duality(const PathSampler& proc_a, const PathSampler& proc_b, const MeasureSpec& m,
                                 std::size_t dim, double t, const TestFunctionSpec& f, const TestFunctionSpec& g,
                                 std::size_t n, RngStream& rng, const CheckOptions& options) {
    m.validate(dim);
    f.validate();
    g.validate();
    if (n < 2) throw std::invalid_argument("duality check needs n >= 2");
    if (!(t >= 0.0)) throw std::invalid_argument("time must be >= 0");
    for (const auto* fn : {&f, &g}) {
        const auto support = fn->radial_support();
        if (!support || support->first < m.a * (1.0 - 1e-12) || support->second > m.b * (1.0 + 1e-12))
            throw std::invalid_argument("test function support must lie inside the sampling region");
    }
    const double region = std::log(m.b / m.a) * m.sphere_measure(dim);
    const auto root_a = rng.derive(1), root_b = rng.derive(2);
    std::vector<double> lhs(n), rhs(n);

    // One importance draw: x from the region, weight m(x) / proposal(x).
    auto draw = [&](RngStream& r, double& weight) {
        const double radius = m.a * std::pow(m.b / m.a, r.uniform());
        Point x = uniform_direction(dim, m.cone, r);
        for (double& v : x) v *= radius;
        weight = m.density(x) * region * std::pow(radius, static_cast<double>(dim));
        return x;
    };
    parallel_for(n, options.threads, [&](std::size_t i) {
        auto ra = root_a.derive(i);
        double w = 0.0;
        const Point x = draw(ra, w);
        const double gx = g(x);
        lhs[i] = gx == 0.0 ? 0.0 : w * gx * f.at(proc_a(x, t, ra));
        auto rb = root_b.derive(i);
        const Point y = draw(rb, w);
        const double fy = f(y);
        rhs[i] = fy == 0.0 ? 0.0 : w * fy * g.at(proc_b(y, t, rb));
    });
    const bool empty_a = std::all_of(lhs.begin(), lhs.end(), [](double v) { return v == 0.0; });
    const bool empty_b = std::all_of(rhs.begin(), rhs.end(), [](double v) { return v == 0.0; });
    if (empty_a && empty_b) throw std::runtime_error("zero effective sample size");
    return compare_means("duality", mean_and_se(lhs), mean_and_se(rhs), n, rng.seed(), options.k_se);
}

VerificationReport check_self_duality(const PathSampler& proc, const MeasureSpec& m, std::size_t dim, double t,
                                      const TestFunctionSpec& f, const TestFunctionSpec& g, std::size_t n,
                                      RngStream& rng, const CheckOptions& options) {
    auto report = check_duality(proc, proc, m, dim, t, f, g, n, rng, options);
    report.name = "self-duality";
    return report;
}

VerificationReport check_h_transform(const PathSampler& base, const PathSampler& candidate, const HarmonicSpec& h,
                                     std::span<const double> x, double t, const TestFunctionSpec& g, std::size_t n,
                                     RngStream& rng, const CheckOptions& options) {
    g.validate();
    if (n < 2) throw std::invalid_argument("h-transform check needs n >= 2");
    const double hx = evaluate_h(h, x);
    if (!(hx > 0.0) || !std::isfinite(hx)) throw std::invalid_argument("h(x) must be positive and finite");
    const auto root_a = rng.derive(1), root_b = rng.derive(2);
    std::vector<double> lhs(n), rhs(n);
    parallel_for(n, options.threads, [&](std::size_t i) {
        auto ra = root_a.derive(i);
        lhs[i] = g.at(candidate(x, t, ra));
        auto rb = root_b.derive(i);
        const auto y = base(x, t, rb);
        const double gy = g.at(y);
        rhs[i] = gy == 0.0 ? 0.0 : evaluate_h(h, *y) * gy / hx;
    });
    return compare_means("h-transform", mean_and_se(lhs), mean_and_se(rhs), n, rng.seed(), options.k_se);
}

VerificationReport check_moment_identity(const MapSpec& spec, double lambda, double t, std::size_t n, RngStream& rng,
                                         const CheckOptions& options) {
    spec.validate();
    if (!(t > 0.0) || n < 2) throw std::invalid_argument("moment check needs t > 0 and n >= 2");
    const Complex u(0.0, lambda);
    const ComplexMatrix exact = map_characteristic(spec, u, t);
    const std::size_t states = spec.n();
    VerificationReport report;
    report.name = "moment-identity";
    report.n_samples = n;
    report.seed = rng.seed();
    for (std::size_t i = 0; i < states; ++i) {
        std::vector<double> xi(n);
        std::vector<std::size_t> end(n);
        const auto root = rng.derive(i);
        parallel_for(n, options.threads, [&](std::size_t k) {
            auto r = root.derive(k);
            const auto path = simulate_map(spec, i, 0.0, t, t, r);
            const bool alive = path.alive_at(path.size() - 1);
            end[k] = alive ? path.state.back() : MapPath::kCemeteryState;
            xi[k] = alive ? path.xi.back() : 0.0;
        });
        for (std::size_t j = 0; j < states; ++j) {
            std::vector<double> re(n), im(n);
            for (std::size_t k = 0; k < n; ++k) {
                const bool hit = end[k] == j;
                re[k] = hit ? std::cos(lambda * xi[k]) : 0.0;
                im[k] = hit ? std::sin(lambda * xi[k]) : 0.0;
            }
            const std::string tag = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
            report.components.push_back(compare_means("re" + tag, mean_and_se(re), {exact(i, j).real(), 0.0}, n,
                                                      rng.seed(), options.k_se));
            report.components.push_back(compare_means("im" + tag, mean_and_se(im), {exact(i, j).imag(), 0.0}, n,
                                                      rng.seed(), options.k_se));
        }
    }
    summarise(report);
    return report;
}

namespace {

// Coordinatewise two-sample KS between two samples of points (nullopt = dead).
void ks_components(VerificationReport& report, const std::string& prefix, const std::vector<std::optional<Point>>& a,
                   const std::vector<std::optional<Point>>& b, std::size_t dim, double level) {
    const double c_level = ks_constant(level);
    for (std::size_t c = 0; c < dim; ++c) {
        std::vector<double> xa(a.size()), xb(b.size());
        for (std::size_t k = 0; k < a.size(); ++k) xa[k] = ks_value(a[k], c);
        for (std::size_t k = 0; k < b.size(); ++k) xb[k] = ks_value(b[k], c);
        const auto ks = ks_two_sample(xa, xb);
        VerificationReport r;
        r.name = prefix + "coord" + std::to_string(c);
        r.statistic = ks.statistic;
        const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
        r.threshold = c_level * std::sqrt((na + nb) / (na * nb));
        r.pass = r.statistic <= r.threshold;
        r.n_samples = a.size();
        r.seed = report.seed;
        report.components.push_back(r);
    }
}

}  // namespace

VerificationReport check_isotropy(const PathSampler& sampler, std::span<const double> x0, double t,
                                  const std::vector<Eigen::MatrixXd>& rotations, std::size_t n, RngStream& rng,
                                  const CheckOptions& options) {
    const std::size_t d = x0.size();
    if (d < 2) throw std::invalid_argument("isotropy check needs d >= 2");
    if (rotations.empty() || n < 2) throw std::invalid_argument("isotropy check needs rotations and n >= 2");
    for (const auto& T : rotations) {
        if (T.rows() != static_cast<Eigen::Index>(d) || T.cols() != static_cast<Eigen::Index>(d))
            throw std::invalid_argument("rotation has the wrong shape");
        const double err = (T.transpose() * T - Eigen::MatrixXd::Identity(T.rows(), T.cols())).cwiseAbs().maxCoeff();
        if (!(err <= 1e-12)) throw std::invalid_argument("matrix is not orthogonal");
    }
    VerificationReport report;
    report.name = "isotropy";
    report.n_samples = n;
    report.seed = rng.seed();
    const Eigen::Map<const Eigen::VectorXd> x(x0.data(), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < rotations.size(); ++r) {
        const auto& T = rotations[r];
        const Eigen::VectorXd back = T.transpose() * x;
        const Point start(back.data(), back.data() + d);
        std::vector<std::optional<Point>> a(n), b(n);
        const auto root_a = rng.derive(2 * r), root_b = rng.derive(2 * r + 1);
        parallel_for(n, options.threads, [&](std::size_t k) {
            auto ra = root_a.derive(k);
            a[k] = sampler(x0, t, ra);
            auto rb = root_b.derive(k);
            auto y = sampler(start, t, rb);
            if (y) {
                const Eigen::VectorXd ty = T * Eigen::Map<const Eigen::VectorXd>(y->data(), static_cast<Eigen::Index>(d));
                y->assign(ty.data(), ty.data() + d);
            }
            b[k] = std::move(y);
        });
        ks_components(report, "rotation" + std::to_string(r) + ".", a, b, d, options.ks_level);
    }
    summarise(report);
    return report;
}

VerificationReport check_scaling(const ProcessSpec& spec, double a, double t, std::size_t n, RngStream& rng,
                                 const CheckOptions& options) {
    spec.validate();
    if (!(a > 0.0) || !(t > 0.0) || n < 2) throw std::invalid_argument("scaling check needs a > 0, t > 0, n >= 2");
    const double alpha = spec.alpha();
    const double shrink = std::pow(a, -alpha);
    ProcessSpec scaled = spec;
    scaled.step = spec.step * shrink;
    scaled.horizon = spec.horizon * shrink;
    const auto base = process_sampler(spec), small = process_sampler(scaled);
    Point x0 = spec.start(), x_small = x0;
    for (double& v : x_small) v /= a;
    const std::size_t d = x0.size();
    std::vector<std::optional<Point>> lhs(n), rhs(n);
    const auto root_a = rng.derive(1), root_b = rng.derive(2);
    parallel_for(n, options.threads, [&](std::size_t k) {
        auto ra = root_a.derive(k);
        auto x = base(x0, t, ra);
        lhs[k] = x ? std::move(x) : Point(d, 0.0);
        auto rb = root_b.derive(k);
        auto y = small(x_small, t * shrink, rb);
        if (y)
            for (double& v : *y) v *= a;
        rhs[k] = y ? std::move(y) : Point(d, 0.0);
    });
    VerificationReport report;
    report.name = "scaling:" + spec.kind();
    report.n_samples = n;
    report.seed = rng.seed();
    ks_components(report, "", lhs, rhs, d, options.ks_level);
    summarise(report);
    return report;
}

}  // namespace ssmp
