#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ssmp/config.hpp"
#include "ssmp/lamperti.hpp"

namespace ssmp {

namespace {

namespace fs = std::filesystem;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

class Writer {
public:
    Writer(const ExperimentConfig& config, const RunOptions& options) : config_(config), dir_(options.out_dir) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
        provenance_ = serialize(config).dump();
    }

    // Every artifact carries the resolved config; the seed is part of it.
    std::string comment() const { return "config " + provenance_; }

    std::ofstream open(const std::string& name, bool binary = false) {
        const fs::path p = dir_ / name;
        std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        artifacts_.push_back(name);
        return out;
    }
    static void close(std::ofstream& out, const std::string& name) {
        out.close();
        if (!out) throw std::runtime_error("write failed for " + name);
    }

    void ssmp_paths(const std::vector<SsmpPath>& paths, OutputFormat format, const std::string& stem) {
        if (format.kind == OutputFormat::Kind::Jsonl) {
            const std::string name = stem + ".jsonl";
            auto out = open(name);
            out << header_line() << "\n";
            for (std::size_t k = 0; k < paths.size(); ++k) out << path_json(paths[k], k).dump() << "\n";
            close(out, name);
            return;
        }
        for (std::size_t k = 0; k < paths.size(); ++k) {
            const std::string base = paths.size() == 1 ? stem : stem + "_" + std::to_string(k);
            if (format.kind == OutputFormat::Kind::Csv) {
                const std::string name = base + ".csv";
                auto out = open(name);
                write_csv(out, paths[k], comment());
                close(out, name);
            } else {
                const std::string name = base + ".ssmp";
                auto out = open(name, true);
                write_binary(out, paths[k]);
                close(out, name);
                const std::string side = name + ".json";
                auto meta = open(side);
                Json j;
                j["config"] = serialize(config_);
                j["path"] = name;
                meta << j.dump(2) << "\n";
                close(meta, side);
            }
        }
    }

    void map_paths(const std::vector<MapPath>& paths, OutputFormat format, const std::string& stem) {
        if (format.kind == OutputFormat::Kind::Jsonl) {
            const std::string name = stem + ".jsonl";
            auto out = open(name);
            out << header_line() << "\n";
            for (std::size_t k = 0; k < paths.size(); ++k) out << map_json(paths[k], k).dump() << "\n";
            close(out, name);
            return;
        }
        for (std::size_t k = 0; k < paths.size(); ++k) {
            const std::string name = (paths.size() == 1 ? stem : stem + "_" + std::to_string(k)) + ".csv";
            auto out = open(name);
            write_csv(out, paths[k], comment());
            close(out, name);
        }
    }

    void report(const Json& result, bool pass) {
        Json j;
        j["experiment"] = config_.experiment;
        j["seed"] = config_.seed;
        j["config"] = serialize(config_);
        j["result"] = result;
        j["pass"] = pass;
        j["artifacts"] = artifacts_;
        const fs::path p = dir_ / "report.json";
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        out << j.dump(2) << "\n";
        out.close();
        if (!out) throw std::runtime_error("write failed for " + p.string());
    }

private:
    std::string header_line() const {
        Json j;
        j["config"] = serialize(config_);
        return j.dump();
    }

    static Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

    static Json path_json(const SsmpPath& p, std::size_t k) {
        Json j;
        j["replica"] = k;
        j["step"] = p.step;
        j["alpha"] = p.alpha;
        j["absorption"] = p.absorption ? Json(*p.absorption) : Json(nullptr);
        Json values = Json::array();
        for (std::size_t i = 0; i < p.size(); ++i) values.push_back(Point(p.values[i].begin(), p.values[i].end()));
        j["values"] = values;
        return j;
    }

    static Json map_json(const MapPath& p, std::size_t k) {
        Json j;
        j["replica"] = k;
        j["step"] = p.step;
        j["lifetime"] = p.lifetime ? Json(*p.lifetime) : Json(nullptr);
        Json xi = Json::array();
        Json theta = Json::array();
        for (std::size_t i = 0; i < p.size(); ++i) {
            xi.push_back(finite_or_null(p.xi[i]));
            Json th = Json::array();
            for (double v : p.theta[i]) th.push_back(finite_or_null(v));
            theta.push_back(th);
        }
        j["xi"] = xi;
        j["theta"] = theta;
        if (p.finite_state()) {
            Json s = Json::array();
            for (std::size_t i = 0; i < p.size(); ++i)
                s.push_back(p.state[i] == MapPath::kCemeteryState ? Json(nullptr) : Json(p.state[i]));
            j["state"] = s;
        }
        return j;
    }

    const ExperimentConfig& config_;
    fs::path dir_;
    std::string provenance_;
    std::vector<std::string> artifacts_;
};

PathSampler make_sampler(const SamplerConfig& s) {
    switch (s.kind) {
        case SamplerConfig::Kind::Process: return process_sampler(s.process);
        case SamplerConfig::Kind::Inversion: return inversion_sampler(s.process, {s.divergence_threshold});
        case SamplerConfig::Kind::Levy: return levy_sampler(s.levy);
    }
    return process_sampler(s.process);
}

SsmpPath load_path(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file);
    char magic[4] = {};
    in.read(magic, 4);
    in.clear();
    in.seekg(0);
    try {
        if (std::string(magic, 4) == "SSMP") return read_binary(in);
        return read_csv(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(file + ": " + e.what());
    }
}

SsmpPath source_path(const TransformConfig& t, std::uint64_t seed) {
    if (t.input) return load_path(*t.input);
    RngStream rng(seed, 0);
    return simulate(*t.process, rng);
}

ResampleOptions resample(std::optional<double> horizon, std::optional<double> step, std::optional<double> threshold) {
    ResampleOptions o;
    o.out_horizon = horizon;
    o.out_step = step;
    o.functional.divergence_threshold = threshold;
    return o;
}

Json complex_matrix_json(const ComplexMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(Json{{"re", m(i, k).real()}, {"im", m(i, k).imag()}});
        rows.push_back(row);
    }
    return rows;
}

Json map_summary(const MapPath& p) {
    Json j;
    j["points"] = p.size();
    j["step"] = p.step;
    j["lifetime"] = p.lifetime ? Json(*p.lifetime) : Json(nullptr);
    return j;
}

Json path_summary(const SsmpPath& p) {
    Json j;
    j["points"] = p.size();
    j["step"] = p.step;
    j["absorption"] = p.absorption ? Json(*p.absorption) : Json(nullptr);
    return j;
}

}  // namespace

int run(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
    Writer w(config, options);
    CheckOptions check;
    check.threads = std::max<std::size_t>(1, options.threads);
    const std::uint64_t seed = config.seed;
    const std::string& kind = config.experiment;

    Json result;
    bool pass = true;

    std::visit(
        Overloaded{
            [&](const SimulateConfig& s) {
                if (s.process) {
                    std::vector<SsmpPath> paths;
                    for (std::size_t k = 0; k < s.replicas; ++k) {
                        RngStream rng(seed, k);
                        paths.push_back(simulate(*s.process, rng));
                    }
                    w.ssmp_paths(paths, s.format, "path");
                    result["paths"] = Json::array();
                    for (const auto& p : paths) result["paths"].push_back(path_summary(p));
                } else {
                    std::vector<MapPath> paths;
                    for (std::size_t k = 0; k < s.replicas; ++k) {
                        RngStream rng(seed, k);
                        paths.push_back(simulate_map(s.map->spec, s.map->y0, s.map->z0, s.map->horizon, s.map->step, rng));
                    }
                    w.map_paths(paths, s.format, "map");
                    result["paths"] = Json::array();
                    for (const auto& p : paths) result["paths"].push_back(map_summary(p));
                }
            },
            [&](const ForwardConfig& f) {
                RngStream rng(seed, 0);
                const MapPath m = simulate_map(f.map.spec, f.map.y0, f.map.z0, f.map.horizon, f.map.step, rng);
                const SsmpPath x =
                    lamperti_forward(m, f.alpha, resample(f.out_horizon, f.out_step, f.divergence_threshold));
                w.map_paths({m}, f.format.kind == OutputFormat::Kind::Jsonl ? f.format : OutputFormat{}, "map");
                w.ssmp_paths({x}, f.format, "path");
                result["map"] = map_summary(m);
                result["path"] = path_summary(x);
            },
            [&](const TransformConfig& t) {
                const SsmpPath x = source_path(t, seed);
                const ResampleOptions ro = resample(t.out_horizon, t.out_step, t.divergence_threshold);
                result["source"] = path_summary(x);
                if (kind == "invert") {
                    const SsmpPath y = invert_path(x, ro);
                    w.ssmp_paths({y}, t.format, "inverted");
                    result["path"] = path_summary(y);
                } else if (kind == "lamperti-inverse") {
                    const MapPath m = lamperti_inverse(x, ro);
                    w.map_paths({m}, t.format, "map");
                    result["map"] = map_summary(m);
                } else {
                    const MapPath m = embed_unabsorbed(x, t.alpha.value_or(x.alpha), ro);
                    w.map_paths({m}, t.format, "map");
                    result["map"] = map_summary(m);
                }
            },
            [&](const ExponentConfig& x) {
                result["A"] = complex_matrix_json(matrix_exponent(x.spec, x.u));
                if (x.t) result["characteristic"] = complex_matrix_json(map_characteristic(x.spec, x.u, *x.t));
            },
            [&](const DualityConfig& d) {
                check.k_se = d.k_se;
                const std::size_t dim = d.a.dim();
                const auto a = make_sampler(d.a);
                const auto b = d.b ? make_sampler(*d.b) : a;
                std::vector<VerificationReport> reports;
                for (std::size_t k = 0; k < d.pairs.size(); ++k) {
                    RngStream rng(seed, k);
                    const auto& [f, g] = d.pairs[k];
                    reports.push_back(d.b ? check_duality(a, b, d.measure, dim, d.t, f, g, d.n, rng, check)
                                          : check_self_duality(a, d.measure, dim, d.t, f, g, d.n, rng, check));
                    log << reports.back().summary() << "\n";
                }
                if (reports.size() == 1) {
                    result = reports[0].to_json();
                    pass = reports[0].pass;
                } else {
                    result["checks"] = Json::array();
                    for (const auto& r : reports) {
                        result["checks"].push_back(r.to_json());
                        pass = pass && r.pass;
                    }
                }
            },
            [&](const HTransformConfig& h) {
                RngStream rng(seed, 0);
                check.k_se = h.k_se;
                const VerificationReport r = check_h_transform(make_sampler(h.base), make_sampler(h.candidate), h.h,
                                                               h.x, h.t, h.g, h.n, rng, check);
                log << r.summary() << "\n";
                result = r.to_json();
                pass = r.pass;
            },
            [&](const MomentConfig& m) {
                check.k_se = m.k_se;
                result["checks"] = Json::array();
                for (std::size_t k = 0; k < m.lambdas.size(); ++k) {
                    RngStream rng(seed, k);
                    const VerificationReport r = check_moment_identity(m.spec, m.lambdas[k], m.t, m.n, rng, check);
                    log << r.summary() << "\n";
                    result["checks"].push_back(r.to_json());
                    pass = pass && r.pass;
                }
            },
            [&](const IsotropyConfig& i) {
                RngStream rng(seed, 0);
                check.ks_level = i.ks_level;
                const VerificationReport r =
                    check_isotropy(make_sampler(i.sampler), i.x0, i.t, i.rotations, i.n, rng, check);
                log << r.summary() << "\n";
                result = r.to_json();
                pass = r.pass;
            },
            [&](const ReversibilityConfig& r) {
                const ReversibilityReport rep = check_reversibility(r.spec, r.pi, r.tolerance);
                result["pi"] = Point(rep.pi.data(), rep.pi.data() + rep.pi.size());
                result["detailed_balance_residual"] = rep.detailed_balance_residual;
                result["detailed_balance"] = rep.detailed_balance;
                Json pairs = Json::array();
                for (const auto& v : rep.jump_pairs) {
                    Json p;
                    p["i"] = v.i;
                    p["j"] = v.j;
                    p["equal_in_law"] = v.equal_in_law;
                    p["method"] = v.method;
                    p["ks_statistic"] = v.ks_statistic;
                    pairs.push_back(p);
                }
                result["jump_pairs"] = pairs;
                result["jump_symmetry"] = rep.jump_symmetry;
                log << "check-reversibility " << (rep.pass ? "PASS" : "FAIL")
                    << " residual=" << rep.detailed_balance_residual << "\n";
                pass = rep.pass;
            },
        },
        config.body);

    w.report(result, pass);
    return pass ? 0 : 1;
}

}  // namespace ssmp
