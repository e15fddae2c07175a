#include "ssmp/map_engine.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ssmp/stats.hpp"

namespace ssmp {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

constexpr double kUnitTolerance = 1e-12;

}  // namespace

// ---------------------------------------------------------------------------
// MapSpec

void MapSpec::validate() const {
    const std::size_t count = n();
    require(count > 0, "MAP needs at least one state");
    require(static_cast<std::size_t>(Q.rows()) == count && static_cast<std::size_t>(Q.cols()) == count,
            "Q must be n x n");
    require(levy.size() == count, "one LevySpec per state is required");
    require(delta.size() == count, "delta must be n x n");
    const std::size_t d = dim();
    require(d >= 1, "states must have dimension >= 1");
    for (const auto& y : states) {
        require(y.size() == d, "all states must have the same dimension");
        require(std::abs(norm(y) - 1.0) <= kUnitTolerance, "states must be unit vectors");
    }
    for (std::size_t i = 0; i < count; ++i) {
        levy[i].validate();
        require(delta[i].size() == count, "delta must be n x n");
        double off = 0.0;
        for (std::size_t j = 0; j < count; ++j) {
            require(std::isfinite(Q(i, j)), "Q entries must be finite");
            if (i != j) {
                require(Q(i, j) >= 0.0, "off-diagonal intensities must be >= 0");
                off += Q(i, j);
            }
            delta[i][j].validate();
        }
        require(delta[i][i].canonical() == JumpLaw::dirac(0.0), "delta diagonal must be Dirac(0)");
        require(Q(i, i) <= -off + 1e-12 * std::max(1.0, off), "row sums of Q must be <= 0");
    }
}

double MapSpec::row_deficit(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < n(); ++j) s += Q(i, j);
    return std::max(0.0, -s);
}

std::size_t MapSpec::index_of(std::span<const double> y) const {
    for (std::size_t i = 0; i < n(); ++i) {
        if (states[i].size() != y.size()) continue;
        double diff = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) diff = std::max(diff, std::abs(states[i][k] - y[k]));
        if (diff <= kUnitTolerance) return i;
    }
    throw std::invalid_argument("point is not a state of the MAP");
}

bool MapSpec::operator==(const MapSpec& other) const {
    return states == other.states && Q == other.Q && levy == other.levy && delta == other.delta;
}

MapSpec make_map_spec(std::vector<Point> states, Eigen::MatrixXd Q, std::vector<LevySpec> levy) {
    MapSpec spec;
    const std::size_t count = states.size();
    spec.states = std::move(states);
    spec.Q = std::move(Q);
    spec.levy = std::move(levy);
    spec.delta.assign(count, std::vector<JumpLaw>(count, JumpLaw::dirac(0.0)));
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// Simulation

MapPath simulate_map(const MapSpec& spec, std::size_t y0, double z0, double horizon, double step, RngStream& rng) {
    spec.validate();
    if (y0 >= spec.n()) throw std::invalid_argument("initial state is not in the state set");
    if (!(step > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("horizon and step must be positive");
    if (step > horizon) throw std::invalid_argument("step exceeds horizon");
    const std::size_t intervals = grid_intervals(horizon, step);
    const double h = horizon / static_cast<double>(intervals);

    const std::size_t n = spec.n();
    std::vector<double> jump_rate(n), kill_rate(n);
    std::vector<LevySpec> motion(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) jump_rate[i] += spec.Q(i, j);
        kill_rate[i] = spec.levy[i].kill_rate + spec.row_deficit(i);
        motion[i] = spec.levy[i].unkilled();
    }

    MapPath path;
    path.step = h;
    path.theta = PointSeries(spec.dim());
    path.xi.reserve(intervals + 1);
    path.state.reserve(intervals + 1);
    path.theta.reserve(intervals + 1);

    std::size_t state = y0;
    double xi = z0;
    path.xi.push_back(xi);
    path.state.push_back(state);
    path.theta.push_back(spec.states[state]);

    auto draw_holding = [&](std::size_t i) {
        const double total = jump_rate[i] + kill_rate[i];
        return total > 0.0 ? rng.exponential() / total : std::numeric_limits<double>::infinity();
    };
    auto advance = [&](std::size_t i, double dt) {
        if (dt > 0.0) xi += sample_increment(motion[i], dt, rng).value;
    };

    double now = 0.0;
    double next_event = draw_holding(state);
    for (std::size_t k = 1; k <= intervals; ++k) {
        const double grid_time = static_cast<double>(k) * h;
        while (next_event <= grid_time) {
            advance(state, next_event - now);
            now = next_event;
            const double total = jump_rate[state] + kill_rate[state];
            double pick = rng.uniform() * total;
            if (pick < kill_rate[state]) {
                path.lifetime = now;
                for (std::size_t r = k; r <= intervals; ++r) {
                    path.xi.push_back(std::numeric_limits<double>::quiet_NaN());
                    path.state.push_back(MapPath::kCemeteryState);
                    path.theta.push_zero();
                }
                return path;
            }
            pick -= kill_rate[state];
            std::size_t target = state;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == state || spec.Q(state, j) <= 0.0) continue;
                target = j;
                if (pick < spec.Q(state, j)) break;
                pick -= spec.Q(state, j);
            }
            xi += sample_jump(spec.delta[state][target], rng);
            state = target;
            next_event = now + draw_holding(state);
        }
        advance(state, grid_time - now);
        now = grid_time;
        path.xi.push_back(xi);
        path.state.push_back(state);
        path.theta.push_back(spec.states[state]);
    }
    return path;
}

// ---------------------------------------------------------------------------
// Matrix exponent

ComplexMatrix matrix_exponent(const MapSpec& spec, Complex u) {
    spec.validate();
    const bool imaginary = u.real() == 0.0;
    if (!imaginary) {
        if (u.imag() != 0.0) throw std::invalid_argument("u must be purely imaginary or real");
        for (std::size_t i = 0; i < spec.n(); ++i) {
            if (!spec.levy[i].has_finite_exponential_moments())
                throw std::invalid_argument("real u requires finite exponential moments in every state");
            for (const auto& law : spec.delta[i])
                if (!law.bounded()) throw std::invalid_argument("real u requires bounded jump laws");
        }
    }
    const auto n = static_cast<Eigen::Index>(spec.n());
    ComplexMatrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& law = spec.delta[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            a(i, j) = i == j ? Complex(spec.Q(i, i), 0.0) : spec.Q(i, j) * law.mgf(u);
        }
        const auto& levy = spec.levy[static_cast<std::size_t>(i)];
        a(i, i) += imaginary ? characteristic_exponent(levy, u) : Complex(laplace_exponent(levy, u.real()), 0.0);
    }
    return a;
}

ComplexMatrix map_characteristic(const MapSpec& spec, Complex u, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("t must be >= 0");
    const ComplexMatrix a = matrix_exponent(spec, u);
    if (t == 0.0) return ComplexMatrix::Identity(a.rows(), a.cols());
    return expm(ComplexMatrix(a * t));
}

// ---------------------------------------------------------------------------
// Stationary measure and reversibility

namespace {

bool irreducible(const Eigen::MatrixXd& Q) {
    const auto n = Q.rows();
    auto reach_all = [&](bool forward) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<Eigen::Index> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            for (Eigen::Index j = 0; j < n; ++j) {
                const double rate = forward ? Q(i, j) : Q(j, i);
                if (j != i && rate > 0.0 && !seen[static_cast<std::size_t>(j)]) {
                    seen[static_cast<std::size_t>(j)] = 1;
                    stack.push_back(j);
                }
            }
        }
        for (char s : seen)
            if (!s) return false;
        return true;
    };
    return reach_all(true) && reach_all(false);
}

}  // namespace

Eigen::VectorXd stationary_measure(const Eigen::MatrixXd& Q) {
    const auto n = Q.rows();
    if (n == 0 || Q.cols() != n) throw std::invalid_argument("Q must be a nonempty square matrix");
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(Q.row(i).sum()) > 1e-12 * scale) throw std::invalid_argument("Q is not conservative");
    if (!irreducible(Q)) throw std::invalid_argument("Q is reducible");
    // Solve Q^T pi = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::MatrixXd system = Q.transpose();
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::VectorXd pi = system.fullPivLu().solve(rhs);
    const double residual = (pi.transpose() * Q).cwiseAbs().maxCoeff();
    if (residual > 1e-12 * scale) throw std::runtime_error("stationary measure residual too large");
    return pi;
}

namespace {

constexpr std::size_t kLawSamples = 10000;
constexpr std::uint64_t kLawSeed = 0x7265766572736531ULL;

JumpPairVerdict compare_laws(const JumpLaw& forward, const JumpLaw& backward, std::size_t i, std::size_t j) {
    JumpPairVerdict verdict{i, j, false, "structural", 0.0};
    const JumpLaw a = forward.canonical(), b = backward.canonical();
    if (a.law.index() == b.law.index()) {
        verdict.equal_in_law = a == b;
        return verdict;
    }
    // Different families after canonicalisation: fall back to a sample comparison.
    RngStream rng_a(kLawSeed, 2 * (i * 1024 + j)), rng_b(kLawSeed, 2 * (i * 1024 + j) + 1);
    std::vector<double> xa(kLawSamples), xb(kLawSamples);
    for (auto& v : xa) v = sample_jump(a, rng_a);
    for (auto& v : xb) v = sample_jump(b, rng_b);
    const KsResult ks = ks_two_sample(xa, xb);
    verdict.method = "ks";
    verdict.ks_statistic = ks.statistic;
    verdict.equal_in_law = ks.statistic <= ks.critical_1;
    return verdict;
}

}  // namespace

ReversibilityReport check_reversibility(const MapSpec& spec, std::optional<Eigen::VectorXd> pi, double tolerance) {
    spec.validate();
    ReversibilityReport report;
    report.pi = pi ? *pi : stationary_measure(spec.Q);
    if (static_cast<std::size_t>(report.pi.size()) != spec.n()) throw std::invalid_argument("pi has the wrong size");
    const auto n = static_cast<Eigen::Index>(spec.n());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            report.detailed_balance_residual =
                std::max(report.detailed_balance_residual,
                         std::abs(report.pi(i) * spec.Q(i, j) - report.pi(j) * spec.Q(j, i)));
    report.detailed_balance = report.detailed_balance_residual <= tolerance;

    report.jump_symmetry = true;
    for (std::size_t i = 0; i < spec.n(); ++i) {
        for (std::size_t j = 0; j < spec.n(); ++j) {
            if (i == j || spec.Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= 0.0) continue;
            auto verdict = compare_laws(spec.delta[i][j], spec.delta[j][i], i, j);
            report.jump_symmetry = report.jump_symmetry && verdict.equal_in_law;
            report.jump_pairs.push_back(verdict);
        }
    }
    report.pass = report.detailed_balance && report.jump_symmetry;
    return report;
}

// ---------------------------------------------------------------------------
// Constructors

MapSpec make_skew_product(const Eigen::MatrixXd& theta_Q, std::vector<Point> states, const LevySpec& levy,
                          double lambda) {
    if (levy.kill_rate != 0.0) throw std::invalid_argument("skew product takes an unkilled Lévy process");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    LevySpec killed = levy;
    killed.kill_rate = lambda;
    const std::size_t n = states.size();
    return make_map_spec(std::move(states), theta_Q, std::vector<LevySpec>(n, killed));
}

MapSpec negate_xi(const MapSpec& spec) {
    spec.validate();
    MapSpec out = spec;
    for (auto& levy : out.levy) levy = levy.negated();
    for (auto& row : out.delta)
        for (auto& law : row) law = law.negated();
    return out;
}

}  // namespace ssmp
