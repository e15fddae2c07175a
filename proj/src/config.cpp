#include "ssmp/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ssmp {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

// Strict view of a JSON object: every key must be consumed before finish().
class Fields {
public:
    Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) fail(where_, "expected an object");
    }

    const std::string& where() const { return where_; }
    std::string at(const std::string& key) const { return where_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    const Json* child(const std::string& key) {
        used_.insert(key);
        if (!has(key)) return nullptr;
        return &j_.at(key);
    }
    const Json& required(const std::string& key) {
        const Json* c = child(key);
        if (!c) fail(at(key), "missing required field");
        return *c;
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const Json* c = child(key);
        if (!c) {
            if (!fallback) fail(at(key), "missing required field");
            return *fallback;
        }
        if (!c->is_number()) fail(at(key), "expected a number");
        const double v = c->get<double>();
        if (!std::isfinite(v)) fail(at(key), "expected a finite number");
        return v;
    }
    std::optional<double> optional_number(const std::string& key) {
        if (!has(key)) {
            used_.insert(key);
            return std::nullopt;
        }
        return number(key);
    }
    std::uint64_t unsigned_integer(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
        const Json* c = child(key);
        if (!c) {
            if (!fallback) fail(at(key), "missing required field");
            return *fallback;
        }
        if (c->is_number_unsigned()) return c->get<std::uint64_t>();
        if (c->is_number_integer() && c->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(c->get<std::int64_t>());
        fail(at(key), "expected a nonnegative integer");
    }
    bool boolean(const std::string& key, bool fallback) {
        const Json* c = child(key);
        if (!c) return fallback;
        if (!c->is_boolean()) fail(at(key), "expected true or false");
        return c->get<bool>();
    }
    std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        const Json* c = child(key);
        if (!c) {
            if (!fallback) fail(at(key), "missing required field");
            return *fallback;
        }
        if (!c->is_string()) fail(at(key), "expected a string");
        return c->get<std::string>();
    }
    Point vector(const std::string& key) {
        const Json& c = required(key);
        return vector_of(c, at(key));
    }

    static Point vector_of(const Json& c, const std::string& where) {
        if (!c.is_array() || c.empty()) fail(where, "expected a nonempty array of numbers");
        Point out;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (!c[i].is_number()) fail(where + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(c[i].get<double>());
        }
        return out;
    }

    // Rejects unknown keys up front so a typo is reported as such rather than as a missing field.
    void only(std::initializer_list<const char*> keys) const {
        for (const auto& [key, value] : j_.items())
            if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
                fail(where_, "unknown key '" + key + "'");
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!used_.count(key)) fail(where_, "unknown key '" + key + "'");
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> used_;
};

template <class F>
auto checked(const std::string& where, F&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(where, e.what());
    }
}

std::string cone_name(MeasureSpec::Cone c) { return c == MeasureSpec::Cone::Full ? "full" : "positive_orthant"; }

std::string angular_name(MeasureSpec::Angular a) {
    switch (a) {
        case MeasureSpec::Angular::Constant: return "constant";
        case MeasureSpec::Angular::ProductPower: return "product_power";
        case MeasureSpec::Angular::SignWeights: return "sign_weights";
    }
    return "constant";
}

std::string format_name(OutputFormat f) {
    switch (f.kind) {
        case OutputFormat::Kind::Csv: return "csv";
        case OutputFormat::Kind::Binary: return "binary";
        case OutputFormat::Kind::Jsonl: return "jsonl";
    }
    return "csv";
}

OutputFormat format_from(Fields& o) {
    const std::string s = o.string("format", "csv");
    if (s == "csv") return {OutputFormat::Kind::Csv};
    if (s == "binary") return {OutputFormat::Kind::Binary};
    if (s == "jsonl") return {OutputFormat::Kind::Jsonl};
    fail(o.at("format"), "expected one of csv, binary, jsonl");
}

Json matrix_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    Eigen::MatrixXd m;
    for (std::size_t i = 0; i < rows; ++i) {
        const Point row = Fields::vector_of(j[i], where + "[" + std::to_string(i) + "]");
        if (i == 0) {
            cols = row.size();
            m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (row.size() != cols) {
            fail(where, "rows have different lengths");
        }
        for (std::size_t k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
    }
    return m;
}

Json point_json(const Point& p) { return Json(p); }

// ---- specs --------------------------------------------------------------

Json sampler_json(const SamplerConfig& s) {
    Json j;
    switch (s.kind) {
        case SamplerConfig::Kind::Process:
            j["kind"] = "process";
            j["process"] = to_json(s.process);
            break;
        case SamplerConfig::Kind::Inversion:
            j["kind"] = "inversion";
            j["process"] = to_json(s.process);
            j["divergence_threshold"] = s.divergence_threshold ? Json(*s.divergence_threshold) : Json(nullptr);
            break;
        case SamplerConfig::Kind::Levy:
            j["kind"] = "levy";
            j["levy"] = to_json(s.levy);
            break;
    }
    return j;
}

SamplerConfig sampler_from(const Json& j, const std::string& where) {
    Fields o(j, where);
    SamplerConfig s;
    const std::string kind = o.string("kind");
    if (kind == "process" || kind == "inversion") {
        s.kind = kind == "process" ? SamplerConfig::Kind::Process : SamplerConfig::Kind::Inversion;
        s.process = process_from_json(o.required("process"), o.at("process"));
        if (s.kind == SamplerConfig::Kind::Inversion) {
            s.divergence_threshold = o.optional_number("divergence_threshold");
            if (s.divergence_threshold && !(*s.divergence_threshold > 0.0))
                fail(o.at("divergence_threshold"), "must be > 0");
        }
    } else if (kind == "levy") {
        s.kind = SamplerConfig::Kind::Levy;
        s.levy = levy_from_json(o.required("levy"), o.at("levy"));
    } else {
        fail(o.at("kind"), "expected one of process, inversion, levy");
    }
    o.finish();
    return s;
}

Json measure_json(const MeasureSpec& m) {
    Json j;
    j["angular"] = angular_name(m.angular);
    j["radial_exponent"] = m.radial_exponent;
    j["angular_exponent"] = m.angular_exponent;
    j["pi_minus"] = m.pi_minus;
    j["pi_plus"] = m.pi_plus;
    j["a"] = m.a;
    j["b"] = m.b;
    j["cone"] = cone_name(m.cone);
    return j;
}

MeasureSpec measure_from(const Json& j, const std::string& where, std::size_t dim) {
    Fields o(j, where);
    o.only({"angular", "radial_exponent", "angular_exponent", "pi_minus", "pi_plus", "a", "b", "cone"});
    MeasureSpec m;
    const std::string angular = o.string("angular", "constant");
    if (angular == "constant") m.angular = MeasureSpec::Angular::Constant;
    else if (angular == "product_power") m.angular = MeasureSpec::Angular::ProductPower;
    else if (angular == "sign_weights") m.angular = MeasureSpec::Angular::SignWeights;
    else fail(o.at("angular"), "expected one of constant, product_power, sign_weights");
    m.radial_exponent = o.number("radial_exponent", 0.0);
    m.angular_exponent = o.number("angular_exponent", 0.0);
    m.pi_minus = o.number("pi_minus", 1.0);
    m.pi_plus = o.number("pi_plus", 1.0);
    m.a = o.number("a");
    m.b = o.number("b");
    const std::string cone = o.string("cone", "full");
    if (cone == "full") m.cone = MeasureSpec::Cone::Full;
    else if (cone == "positive_orthant") m.cone = MeasureSpec::Cone::PositiveOrthant;
    else fail(o.at("cone"), "expected full or positive_orthant");
    o.finish();
    checked(where, [&] { m.validate(dim); return 0; });
    return m;
}

Json test_function_json(const TestFunctionSpec& f) {
    Json j;
    switch (f.kind) {
        case TestFunctionSpec::Kind::GaussianBump:
            j["kind"] = "bump";
            j["center"] = point_json(f.center);
            j["width"] = f.width;
            break;
        case TestFunctionSpec::Kind::IndicatorAnnulus:
            j["kind"] = "annulus";
            j["r_lo"] = f.r_lo;
            j["r_hi"] = f.r_hi;
            break;
        case TestFunctionSpec::Kind::CoordinatePower:
            j["kind"] = "coordinate_power";
            j["exponent"] = f.exponent;
            j["cap"] = f.cap;
            break;
    }
    return j;
}

TestFunctionSpec test_function_from(const Json& j, const std::string& where, std::size_t dim) {
    Fields o(j, where);
    TestFunctionSpec f;
    const std::string kind = o.string("kind");
    if (kind == "bump") {
        f = TestFunctionSpec::bump(o.vector("center"), o.number("width"));
        if (f.center.size() != dim) fail(o.at("center"), "dimension does not match the process");
    } else if (kind == "annulus") {
        f = TestFunctionSpec::annulus(o.number("r_lo"), o.number("r_hi"));
    } else if (kind == "coordinate_power") {
        f = TestFunctionSpec::coordinate_power(o.number("exponent"), o.number("cap"));
    } else {
        fail(o.at("kind"), "expected one of bump, annulus, coordinate_power");
    }
    o.finish();
    checked(where, [&] { f.validate(); return 0; });
    return f;
}

Json harmonic_json(const HarmonicSpec& h) {
    Json j;
    switch (h.kind) {
        case HarmonicSpec::Kind::PowerNorm: j["kind"] = "power_norm"; break;
        case HarmonicSpec::Kind::PowerCoord: j["kind"] = "power_coord"; break;
        case HarmonicSpec::Kind::AngularWeighted:
            j["kind"] = "angular_weighted";
            j["pi_minus"] = h.pi_minus;
            j["pi_plus"] = h.pi_plus;
            break;
    }
    j["exponent"] = h.exponent;
    return j;
}

HarmonicSpec harmonic_from(const Json& j, const std::string& where) {
    Fields o(j, where);
    HarmonicSpec h;
    const std::string kind = o.string("kind");
    if (kind == "power_norm") {
        h = HarmonicSpec::power_norm(o.number("exponent"));
    } else if (kind == "power_coord") {
        h = HarmonicSpec::power_coord(o.number("exponent"));
    } else if (kind == "angular_weighted") {
        h = HarmonicSpec::angular_weighted(o.number("pi_minus"), o.number("pi_plus"), o.number("exponent"));
        if (!(h.pi_minus > 0.0 && h.pi_plus > 0.0)) fail(where, "angular weights must be > 0");
    } else {
        fail(o.at("kind"), "expected one of power_norm, power_coord, angular_weighted");
    }
    o.finish();
    return h;
}

Json map_run_json(const MapRun& r) {
    Json j = to_json(r.spec);
    j["y0"] = r.y0;
    j["z0"] = r.z0;
    j["horizon"] = r.horizon;
    j["step"] = r.step;
    return j;
}

MapSpec map_spec_fields(Fields& o);

MapRun map_run_from(const Json& j, const std::string& where) {
    Fields o(j, where);
    MapRun r;
    r.spec = map_spec_fields(o);
    r.y0 = o.unsigned_integer("y0", 0);
    if (r.y0 >= r.spec.n()) fail(o.at("y0"), "state index out of range");
    r.z0 = o.number("z0", 0.0);
    r.horizon = o.number("horizon", 1.0);
    r.step = o.number("step", 0.01);
    if (!(r.horizon > 0.0)) fail(o.at("horizon"), "must be > 0");
    if (!(r.step > 0.0 && r.step <= r.horizon)) fail(o.at("step"), "need 0 < step <= horizon");
    o.finish();
    return r;
}

MapSpec map_spec_fields(Fields& o) {
    MapSpec spec;
    const Json& states = o.required("states");
    if (!states.is_array() || states.empty()) fail(o.at("states"), "expected a nonempty array of unit vectors");
    for (std::size_t i = 0; i < states.size(); ++i)
        spec.states.push_back(Fields::vector_of(states[i], o.at("states") + "[" + std::to_string(i) + "]"));
    spec.Q = matrix_from(o.required("Q"), o.at("Q"));
    const Json& levy = o.required("levy");
    if (!levy.is_array()) fail(o.at("levy"), "expected an array with one Lévy spec per state");
    for (std::size_t i = 0; i < levy.size(); ++i)
        spec.levy.push_back(levy_from_json(levy[i], o.at("levy") + "[" + std::to_string(i) + "]"));
    const std::size_t n = spec.states.size();
    if (const Json* delta = o.child("delta")) {
        if (!delta->is_array() || delta->size() != n) fail(o.at("delta"), "expected an n x n array of jump laws");
        spec.delta.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Json& row = (*delta)[i];
            const std::string rw = o.at("delta") + "[" + std::to_string(i) + "]";
            if (!row.is_array() || row.size() != n) fail(rw, "expected a row of n jump laws");
            for (std::size_t k = 0; k < n; ++k)
                spec.delta[i].push_back(jump_law_from_json(row[k], rw + "[" + std::to_string(k) + "]"));
        }
    } else {
        spec.delta.assign(n, std::vector<JumpLaw>(n, JumpLaw::dirac(0.0)));
    }
    checked(o.where(), [&] { spec.validate(); return 0; });
    return spec;
}

Json complex_json(Complex z) {
    Json j;
    j["re"] = z.real();
    j["im"] = z.imag();
    return j;
}

void require_positive(Fields& o, const std::string& key, double v) {
    if (!(v > 0.0)) fail(o.at(key), "must be > 0");
}

std::size_t sample_count(Fields& o, std::uint64_t fallback) {
    const auto n = o.unsigned_integer("n", fallback);
    if (n < 2) fail(o.at("n"), "need at least 2 samples");
    return static_cast<std::size_t>(n);
}

void check_support(const TestFunctionSpec& f, const MeasureSpec& m, const std::string& where) {
    const auto s = f.radial_support();
    if (!s || s->first < m.a * (1.0 - 1e-12) || s->second > m.b * (1.0 + 1e-12))
        fail(where, "test function support must lie inside the measure region [a, b]");
}

}  // namespace

std::vector<TestFunctionSpec> default_test_family(const MeasureSpec& m, std::size_t dim) {
    // radii at a third and two thirds of the log-region, widths keep 4w supports inside
    const double r1 = m.a * std::pow(m.b / m.a, 1.0 / 3.0), r2 = m.a * std::pow(m.b / m.a, 2.0 / 3.0);
    const double w = 0.9 * std::min({r1 - m.a, m.b - r2, (r2 - r1) / 2.0}) / 4.0;
    Point u1(dim, 1.0 / std::sqrt(static_cast<double>(dim))), u2 = u1;
    if (m.cone == MeasureSpec::Cone::Full) {
        u2[0] = -u2[0];
    } else if (dim > 1) {
        u2[0] *= 2.0;
        const double n = norm(u2);
        for (double& v : u2) v /= n;
    }
    for (double& v : u1) v *= r1;
    for (double& v : u2) v *= r2;
    return {TestFunctionSpec::bump(u1, w), TestFunctionSpec::bump(u2, w), TestFunctionSpec::annulus(r1, r2)};
}

namespace {

void transform_fields(Fields& o, TransformConfig& c, bool embed) {
    if (o.has("process") == o.has("input")) fail(o.where(), "give exactly one of 'process' or 'input'");
    if (const Json* p = o.child("process")) c.process = process_from_json(*p, o.at("process"));
    if (o.has("input")) c.input = o.string("input");
    o.child("input");
    if (embed) {
        c.alpha = o.optional_number("alpha");
        if (c.alpha && !(*c.alpha > 0.0)) fail(o.at("alpha"), "must be > 0");
    }
    c.out_horizon = o.optional_number("out_horizon");
    c.out_step = o.optional_number("out_step");
    c.divergence_threshold = o.optional_number("divergence_threshold");
    if (c.out_horizon) require_positive(o, "out_horizon", *c.out_horizon);
    if (c.out_step) require_positive(o, "out_step", *c.out_step);
    if (c.divergence_threshold) require_positive(o, "divergence_threshold", *c.divergence_threshold);
    c.format = format_from(o);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds = {
        "simulate",       "lamperti-forward", "lamperti-inverse", "invert",         "embed",
        "exponent",       "check-duality",    "check-h",          "check-moment",   "check-isotropy",
        "check-reversibility", "check-self-duality"};
    return kinds;
}

Json to_json(const JumpLaw& law) {
    Json j;
    std::visit(Overloaded{
                   [&](const DiracLaw& l) {
                       j["kind"] = "dirac";
                       j["value"] = l.value;
                   },
                   [&](const GaussianLaw& l) {
                       j["kind"] = "gaussian";
                       j["mean"] = l.mean;
                       j["sd"] = l.sd;
                   },
                   [&](const TwoPointLaw& l) {
                       j["kind"] = "two_point";
                       j["a"] = l.a;
                       j["p"] = l.p;
                       j["b"] = l.b;
                   },
                   [&](const UniformLaw& l) {
                       j["kind"] = "uniform";
                       j["lo"] = l.lo;
                       j["hi"] = l.hi;
                   },
               },
               law.law);
    return j;
}

JumpLaw jump_law_from_json(const Json& j, const std::string& where) {
    Fields o(j, where);
    const std::string kind = o.string("kind");
    JumpLaw law;
    if (kind == "dirac") law = JumpLaw::dirac(o.number("value"));
    else if (kind == "gaussian") law = JumpLaw::gaussian(o.number("mean", 0.0), o.number("sd", 1.0));
    else if (kind == "two_point") law = JumpLaw::two_point(o.number("a"), o.number("p"), o.number("b"));
    else if (kind == "uniform") law = JumpLaw::uniform(o.number("lo"), o.number("hi"));
    else fail(o.at("kind"), "expected one of dirac, gaussian, two_point, uniform");
    o.finish();
    checked(where, [&] { law.validate(); return 0; });
    return law;
}

Json to_json(const LevySpec& spec) {
    Json j;
    j["drift"] = spec.drift;
    j["sigma"] = spec.sigma;
    if (spec.stable) {
        j["stable"] = Json{{"alpha", spec.stable->alpha}, {"rho", spec.stable->rho}};
    } else {
        j["stable"] = nullptr;
    }
    if (spec.cpois) {
        Json c;
        c["rate"] = spec.cpois->rate;
        c["jump"] = to_json(spec.cpois->jump);
        j["cpois"] = c;
    } else {
        j["cpois"] = nullptr;
    }
    j["kill_rate"] = spec.kill_rate;
    return j;
}

LevySpec levy_from_json(const Json& j, const std::string& where) {
    Fields o(j, where);
    o.only({"drift", "sigma", "stable", "cpois", "kill_rate"});
    LevySpec spec;
    spec.drift = o.number("drift", 0.0);
    spec.sigma = o.number("sigma", 0.0);
    if (const Json* s = o.child("stable")) {
        Fields so(*s, o.at("stable"));
        spec.stable = StablePart{so.number("alpha"), so.number("rho", 0.5)};
        so.finish();
    }
    if (const Json* c = o.child("cpois")) {
        Fields co(*c, o.at("cpois"));
        spec.cpois = CompoundPoisson{co.number("rate"), jump_law_from_json(co.required("jump"), co.at("jump"))};
        co.finish();
    }
    spec.kill_rate = o.number("kill_rate", 0.0);
    o.finish();
    checked(where, [&] { spec.validate(); return 0; });
    return spec;
}

Json to_json(const MapSpec& spec) {
    Json j;
    Json states = Json::array();
    for (const auto& s : spec.states) states.push_back(point_json(s));
    j["states"] = states;
    j["Q"] = matrix_json(spec.Q);
    Json levy = Json::array();
    for (const auto& l : spec.levy) levy.push_back(to_json(l));
    j["levy"] = levy;
    Json delta = Json::array();
    for (const auto& row : spec.delta) {
        Json r = Json::array();
        for (const auto& law : row) r.push_back(to_json(law));
        delta.push_back(r);
    }
    j["delta"] = delta;
    return j;
}

MapSpec map_spec_from_json(const Json& j, const std::string& where) {
    Fields o(j, where);
    MapSpec spec = map_spec_fields(o);
    o.finish();
    return spec;
}

Json to_json(const ProcessSpec& spec) {
    Json j;
    j["kind"] = spec.kind();
    std::visit(Overloaded{
                   [&](const BrownianAbs1D& p) { j["x0"] = p.x0; },
                   [&](const Bessel& p) {
                       j["delta"] = p.delta;
                       j["x0"] = p.x0;
                   },
                   [&](const Stable1D& p) {
                       j["alpha"] = p.alpha;
                       j["rho"] = p.rho;
                       j["x0"] = p.x0;
                       j["absorb_at_zero"] = p.absorb_at_zero;
                       j["epsilon"] = p.epsilon;
                   },
                   [&](const IsotropicStable& p) {
                       j["alpha"] = p.alpha;
                       j["x0"] = point_json(p.x0);
                   },
                   [&](const FreeBessel& p) {
                       j["delta"] = p.delta;
                       j["x0"] = point_json(p.x0);
                   },
                   [&](const Bes3& p) { j["x0"] = p.x0; },
               },
               spec.process);
    j["horizon"] = spec.horizon;
    j["step"] = spec.step;
    return j;
}

ProcessSpec process_from_json(const Json& j, const std::string& where) {
    Fields o(j, where);
    ProcessSpec spec;
    const std::string kind = o.string("kind");
    if (kind == "brownian_abs" || kind == "bes3") o.only({"kind", "x0", "horizon", "step"});
    else if (kind == "bessel" || kind == "free_bessel") o.only({"kind", "delta", "x0", "horizon", "step"});
    else if (kind == "isotropic_stable") o.only({"kind", "alpha", "x0", "horizon", "step"});
    else if (kind == "stable1d") o.only({"kind", "alpha", "rho", "x0", "absorb_at_zero", "epsilon", "horizon", "step"});
    if (kind == "brownian_abs") {
        spec.process = BrownianAbs1D{o.number("x0", 1.0)};
    } else if (kind == "bessel") {
        spec.process = Bessel{o.number("delta"), o.number("x0", 1.0)};
    } else if (kind == "stable1d") {
        Stable1D p;
        p.alpha = o.number("alpha");
        p.rho = o.number("rho", 0.5);
        p.x0 = o.number("x0", 1.0);
        p.absorb_at_zero = o.boolean("absorb_at_zero", false);
        p.epsilon = o.number("epsilon", 1e-4);
        spec.process = p;
    } else if (kind == "isotropic_stable") {
        spec.process = IsotropicStable{o.number("alpha"), o.vector("x0")};
    } else if (kind == "free_bessel") {
        spec.process = FreeBessel{o.number("delta"), o.vector("x0")};
    } else if (kind == "bes3") {
        spec.process = Bes3{o.number("x0", 1.0)};
    } else {
        fail(o.at("kind"), "expected one of brownian_abs, bessel, stable1d, isotropic_stable, free_bessel, bes3");
    }
    spec.horizon = o.number("horizon", 1.0);
    spec.step = o.number("step", 0.01);
    o.finish();
    checked(where, [&] { spec.validate(); return 0; });
    return spec;
}

ExperimentConfig parse_config(const std::string& text, const std::optional<std::string>& experiment) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("$: ") + e.what());
    }
    return parse_config(doc, experiment);
}

ExperimentConfig parse_config(const Json& doc, const std::optional<std::string>& experiment) {
    Fields o(doc, "$");
    ExperimentConfig c;
    const std::string declared = o.string("experiment", experiment.value_or(""));
    if (experiment && declared != *experiment)
        fail("$.experiment", "config declares '" + declared + "' but '" + *experiment + "' was requested");
    c.experiment = declared;
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end())
        fail("$.experiment", c.experiment.empty() ? "missing experiment kind" : "unknown experiment '" + c.experiment + "'");
    c.seed = o.unsigned_integer("seed", 1);
    const std::string& e = c.experiment;

    if (e == "simulate") {
        SimulateConfig s;
        if (o.has("process") == o.has("map")) fail("$", "give exactly one of 'process' or 'map'");
        if (const Json* p = o.child("process")) s.process = process_from_json(*p, "$.process");
        if (const Json* m = o.child("map")) s.map = map_run_from(*m, "$.map");
        s.replicas = static_cast<std::size_t>(o.unsigned_integer("replicas", 1));
        if (s.replicas == 0) fail("$.replicas", "must be >= 1");
        s.format = format_from(o);
        if (s.map && s.format.kind == OutputFormat::Kind::Binary)
            fail("$.format", "binary output is only defined for ssMp paths");
        c.body = s;
    } else if (e == "lamperti-forward") {
        ForwardConfig f;
        f.map = map_run_from(o.required("map"), "$.map");
        f.alpha = o.number("alpha");
        if (!(f.alpha >= 0.0)) fail("$.alpha", "must be >= 0");
        f.out_horizon = o.optional_number("out_horizon");
        f.out_step = o.optional_number("out_step");
        f.divergence_threshold = o.optional_number("divergence_threshold");
        if (f.out_horizon) require_positive(o, "out_horizon", *f.out_horizon);
        if (f.out_step) require_positive(o, "out_step", *f.out_step);
        if (f.divergence_threshold) require_positive(o, "divergence_threshold", *f.divergence_threshold);
        f.format = format_from(o);
        c.body = f;
    } else if (e == "lamperti-inverse" || e == "invert" || e == "embed") {
        TransformConfig t;
        transform_fields(o, t, e == "embed");
        if (e == "lamperti-inverse" && t.format.kind == OutputFormat::Kind::Binary)
            fail("$.format", "binary output is only defined for ssMp paths");
        if (e == "embed" && t.format.kind == OutputFormat::Kind::Binary)
            fail("$.format", "binary output is only defined for ssMp paths");
        if (e == "invert" && t.process && !(t.process->alpha() > 0.0)) fail("$.process", "inversion needs alpha > 0");
        c.body = t;
    } else if (e == "exponent") {
        ExponentConfig x;
        x.spec = map_spec_from_json(o.required("map"), "$.map");
        Fields u(o.required("u"), "$.u");
        x.u = Complex(u.number("re", 0.0), u.number("im", 0.0));
        u.finish();
        x.t = o.optional_number("t");
        if (x.t && !(*x.t >= 0.0)) fail("$.t", "must be >= 0");
        c.body = x;
    } else if (e == "check-duality" || e == "check-self-duality") {
        DualityConfig d;
        if (e == "check-duality") {
            d.a = sampler_from(o.required("sampler_a"), "$.sampler_a");
            d.b = sampler_from(o.required("sampler_b"), "$.sampler_b");
            if (d.a.dim() != d.b->dim()) fail("$.sampler_b", "dimension differs from sampler_a");
        } else {
            d.a = sampler_from(o.required("sampler"), "$.sampler");
        }
        const std::size_t dim = d.a.dim();
        d.measure = measure_from(o.required("measure"), "$.measure", dim);
        d.t = o.number("t");
        if (!(d.t > 0.0)) fail("$.t", "must be > 0");
        const int given = int(o.has("f") || o.has("g")) + int(o.has("pairs")) + int(o.has("test_functions"));
        if (given > 1) fail("$", "give only one of f/g, 'pairs' or 'test_functions'");
        auto family_pairs = [&](const std::vector<TestFunctionSpec>& family) {
            for (std::size_t i = 0; i < family.size(); ++i)
                for (std::size_t k = i; k < family.size(); ++k) d.pairs.push_back({family[i], family[k]});
        };
        if (o.has("f") || o.has("g")) {
            d.pairs.push_back({test_function_from(o.required("f"), "$.f", dim),
                               test_function_from(o.required("g"), "$.g", dim)});
            check_support(d.pairs[0].f, d.measure, "$.f");
            check_support(d.pairs[0].g, d.measure, "$.g");
        } else if (const Json* list = o.child("pairs")) {
            if (!list->is_array() || list->empty()) fail("$.pairs", "expected a nonempty array");
            for (std::size_t i = 0; i < list->size(); ++i) {
                const std::string at = "$.pairs[" + std::to_string(i) + "]";
                Fields po((*list)[i], at);
                po.only({"f", "g"});
                TestPair pair{test_function_from(po.required("f"), at + ".f", dim),
                              test_function_from(po.required("g"), at + ".g", dim)};
                po.finish();
                check_support(pair.f, d.measure, at + ".f");
                check_support(pair.g, d.measure, at + ".g");
                d.pairs.push_back(std::move(pair));
            }
        } else if (const Json* list = o.child("test_functions")) {
            if (!list->is_array() || list->empty()) fail("$.test_functions", "expected a nonempty array");
            std::vector<TestFunctionSpec> family;
            for (std::size_t i = 0; i < list->size(); ++i) {
                const std::string at = "$.test_functions[" + std::to_string(i) + "]";
                family.push_back(test_function_from((*list)[i], at, dim));
                check_support(family.back(), d.measure, at);
            }
            family_pairs(family);
        } else {
            family_pairs(default_test_family(d.measure, dim));
        }
        d.n = sample_count(o, 10000);
        d.k_se = o.number("k_se", 3.0);
        require_positive(o, "k_se", d.k_se);
        c.body = d;
    } else if (e == "check-h") {
        HTransformConfig h;
        h.base = sampler_from(o.required("base"), "$.base");
        h.candidate = sampler_from(o.required("candidate"), "$.candidate");
        if (h.base.dim() != h.candidate.dim()) fail("$.candidate", "dimension differs from base");
        h.h = harmonic_from(o.required("h"), "$.h");
        h.x = o.vector("x");
        if (h.x.size() != h.base.dim()) fail("$.x", "dimension does not match the samplers");
        checked("$.x", [&] {
            const double v = evaluate_h(h.h, h.x);
            if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("h(x) must be positive and finite");
            return 0;
        });
        h.t = o.number("t");
        if (!(h.t > 0.0)) fail("$.t", "must be > 0");
        h.g = test_function_from(o.required("g"), "$.g", h.x.size());
        h.n = sample_count(o, 10000);
        h.k_se = o.number("k_se", 3.0);
        require_positive(o, "k_se", h.k_se);
        c.body = h;
    } else if (e == "check-moment") {
        MomentConfig m;
        m.spec = map_spec_from_json(o.required("map"), "$.map");
        const Json& l = o.required("lambdas");
        m.lambdas = l.is_number() ? Point{l.get<double>()} : Fields::vector_of(l, "$.lambdas");
        m.t = o.number("t", 1.0);
        if (!(m.t > 0.0)) fail("$.t", "must be > 0");
        m.n = sample_count(o, 10000);
        m.k_se = o.number("k_se", 3.0);
        require_positive(o, "k_se", m.k_se);
        c.body = m;
    } else if (e == "check-isotropy") {
        IsotropyConfig i;
        i.sampler = sampler_from(o.required("sampler"), "$.sampler");
        i.x0 = o.vector("x0");
        if (i.x0.size() != i.sampler.dim() || i.x0.size() < 2) fail("$.x0", "dimension must match the sampler and be >= 2");
        i.t = o.number("t");
        if (!(i.t > 0.0)) fail("$.t", "must be > 0");
        const Json& rot = o.required("rotations");
        if (!rot.is_array() || rot.empty()) fail("$.rotations", "expected a nonempty array");
        for (std::size_t k = 0; k < rot.size(); ++k) {
            const std::string w = "$.rotations[" + std::to_string(k) + "]";
            Eigen::MatrixXd T;
            if (rot[k].is_number()) {
                if (i.x0.size() != 2) fail(w, "an angle is only accepted in two dimensions");
                const double a = rot[k].get<double>();
                T.resize(2, 2);
                T << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
            } else {
                T = matrix_from(rot[k], w);
            }
            if (T.rows() != static_cast<Eigen::Index>(i.x0.size()) || T.cols() != T.rows())
                fail(w, "rotation has the wrong shape");
            if (!((T.transpose() * T - Eigen::MatrixXd::Identity(T.rows(), T.cols())).cwiseAbs().maxCoeff() <= 1e-12))
                fail(w, "matrix is not orthogonal");
            i.rotations.push_back(T);
        }
        i.n = sample_count(o, 10000);
        i.ks_level = o.number("ks_level", 0.01);
        if (!(i.ks_level > 0.0 && i.ks_level < 1.0)) fail("$.ks_level", "must lie in (0, 1)");
        c.body = i;
    } else if (e == "check-reversibility") {
        ReversibilityConfig r;
        r.spec = map_spec_from_json(o.required("map"), "$.map");
        if (const Json* p = o.child("pi")) {
            const Point v = Fields::vector_of(*p, "$.pi");
            if (v.size() != r.spec.n()) fail("$.pi", "length must equal the number of states");
            r.pi = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
        r.tolerance = o.number("tolerance", 1e-10);
        require_positive(o, "tolerance", r.tolerance);
        c.body = r;
    }
    o.finish();
    return c;
}

Json serialize(const ExperimentConfig& c) {
    Json j;
    j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    std::visit(Overloaded{
                   [&](const SimulateConfig& s) {
                       if (s.process) j["process"] = to_json(*s.process);
                       if (s.map) j["map"] = map_run_json(*s.map);
                       j["replicas"] = s.replicas;
                       j["format"] = format_name(s.format);
                   },
                   [&](const ForwardConfig& f) {
                       j["map"] = map_run_json(f.map);
                       j["alpha"] = f.alpha;
                       j["out_horizon"] = optional_json(f.out_horizon);
                       j["out_step"] = optional_json(f.out_step);
                       j["divergence_threshold"] = optional_json(f.divergence_threshold);
                       j["format"] = format_name(f.format);
                   },
                   [&](const TransformConfig& t) {
                       if (t.process) j["process"] = to_json(*t.process);
                       if (t.input) j["input"] = *t.input;
                       if (c.experiment == "embed") j["alpha"] = optional_json(t.alpha);
                       j["out_horizon"] = optional_json(t.out_horizon);
                       j["out_step"] = optional_json(t.out_step);
                       j["divergence_threshold"] = optional_json(t.divergence_threshold);
                       j["format"] = format_name(t.format);
                   },
                   [&](const ExponentConfig& x) {
                       j["map"] = to_json(x.spec);
                       j["u"] = complex_json(x.u);
                       j["t"] = optional_json(x.t);
                   },
                   [&](const DualityConfig& d) {
                       if (d.b) {
                           j["sampler_a"] = sampler_json(d.a);
                           j["sampler_b"] = sampler_json(*d.b);
                       } else {
                           j["sampler"] = sampler_json(d.a);
                       }
                       j["measure"] = measure_json(d.measure);
                       j["t"] = d.t;
                       auto& pairs = j["pairs"] = Json::array();
                       for (const auto& p : d.pairs)
                           pairs.push_back({{"f", test_function_json(p.f)}, {"g", test_function_json(p.g)}});
                       j["n"] = d.n;
                       j["k_se"] = d.k_se;
                   },
                   [&](const HTransformConfig& h) {
                       j["base"] = sampler_json(h.base);
                       j["candidate"] = sampler_json(h.candidate);
                       j["h"] = harmonic_json(h.h);
                       j["x"] = point_json(h.x);
                       j["t"] = h.t;
                       j["g"] = test_function_json(h.g);
                       j["n"] = h.n;
                       j["k_se"] = h.k_se;
                   },
                   [&](const MomentConfig& m) {
                       j["map"] = to_json(m.spec);
                       j["lambdas"] = point_json(m.lambdas);
                       j["t"] = m.t;
                       j["n"] = m.n;
                       j["k_se"] = m.k_se;
                   },
                   [&](const IsotropyConfig& i) {
                       j["sampler"] = sampler_json(i.sampler);
                       j["x0"] = point_json(i.x0);
                       j["t"] = i.t;
                       Json rot = Json::array();
                       for (const auto& T : i.rotations) rot.push_back(matrix_json(T));
                       j["rotations"] = rot;
                       j["n"] = i.n;
                       j["ks_level"] = i.ks_level;
                   },
                   [&](const ReversibilityConfig& r) {
                       j["map"] = to_json(r.spec);
                       if (r.pi) j["pi"] = Point(r.pi->data(), r.pi->data() + r.pi->size());
                       else j["pi"] = nullptr;
                       j["tolerance"] = r.tolerance;
                   },
               },
               c.body);
    return j;
}

}  // namespace ssmp
