#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ssmp/levy.hpp"
#include "ssmp/map_engine.hpp"
#include "ssmp/processes.hpp"
#include "ssmp/veritas.hpp"

namespace ssmp {

using Json = nlohmann::ordered_json;

/// Raised for any malformed, unknown or out-of-range configuration entry.
/// The message starts with the JSON path of the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SamplerConfig {
    enum class Kind { Process, Inversion, Levy };
    Kind kind = Kind::Process;
    ProcessSpec process;
    LevySpec levy;
    std::optional<double> divergence_threshold;  // inversion only

    std::size_t dim() const { return kind == Kind::Levy ? 1 : process.dim(); }
};

struct MapRun {
    MapSpec spec;
    std::size_t y0 = 0;
    double z0 = 0.0;
    double horizon = 1.0;
    double step = 0.01;
};

struct OutputFormat {
    enum class Kind { Csv, Binary, Jsonl };
    Kind kind = Kind::Csv;
};

struct SimulateConfig {
    std::optional<ProcessSpec> process;
    std::optional<MapRun> map;
    std::size_t replicas = 1;
    OutputFormat format;
};

struct ForwardConfig {
    MapRun map;
    double alpha = 2.0;
    std::optional<double> out_horizon;
    std::optional<double> out_step;
    std::optional<double> divergence_threshold;
    OutputFormat format;
};

/// lamperti-inverse, invert and embed: transform a simulated or loaded ssMp path.
struct TransformConfig {
    std::optional<ProcessSpec> process;
    std::optional<std::string> input;
    std::optional<double> alpha;  // embed; defaults to the path's alpha
    std::optional<double> out_horizon;
    std::optional<double> out_step;
    std::optional<double> divergence_threshold;
    OutputFormat format;
};

struct ExponentConfig {
    MapSpec spec;
    Complex u;
    std::optional<double> t;
};

struct TestPair {
    TestFunctionSpec f;
    TestFunctionSpec g;
};

/// Accepts one pair (f, g), a list of pairs, or a family checked over all pairs i <= j.
/// Without any of these the family is two bumps and an annulus placed inside the region.
struct DualityConfig {
    SamplerConfig a;
    std::optional<SamplerConfig> b;  // absent for self-duality
    MeasureSpec measure;
    double t = 1.0;
    std::vector<TestPair> pairs;
    std::size_t n = 10000;
    double k_se = 3.0;
};

struct HTransformConfig {
    SamplerConfig base;
    SamplerConfig candidate;
    HarmonicSpec h;
    Point x;
    double t = 1.0;
    TestFunctionSpec g;
    std::size_t n = 10000;
    double k_se = 3.0;
};

struct MomentConfig {
    MapSpec spec;
    std::vector<double> lambdas;
    double t = 1.0;
    std::size_t n = 10000;
    double k_se = 3.0;
};

struct IsotropyConfig {
    SamplerConfig sampler;
    Point x0;
    double t = 1.0;
    std::vector<Eigen::MatrixXd> rotations;
    std::size_t n = 10000;
    double ks_level = 0.01;
};

struct ReversibilityConfig {
    MapSpec spec;
    std::optional<Eigen::VectorXd> pi;
    double tolerance = 1e-10;
};

using ExperimentBody = std::variant<SimulateConfig, ForwardConfig, TransformConfig, ExponentConfig, DualityConfig,
                                    HTransformConfig, MomentConfig, IsotropyConfig, ReversibilityConfig>;

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 1;
    ExperimentBody body;
};

const std::vector<std::string>& experiment_kinds();

/// Strict parse: unknown keys and out-of-range values raise ConfigError naming the field.
/// `experiment` overrides (or supplies) the document's "experiment" entry.
ExperimentConfig parse_config(const std::string& text, const std::optional<std::string>& experiment = std::nullopt);
ExperimentConfig parse_config(const Json& doc, const std::optional<std::string>& experiment = std::nullopt);
inline ExperimentConfig parse_config(const char* text, const std::optional<std::string>& experiment = std::nullopt) {
    return parse_config(std::string(text), experiment);
}

std::vector<TestFunctionSpec> default_test_family(const MeasureSpec& m, std::size_t dim);

/// Fully resolved document, defaults included; parse_config(serialize(c)) reproduces c.
Json serialize(const ExperimentConfig& config);

// Building blocks, exposed for reuse and tests.
Json to_json(const JumpLaw& law);
Json to_json(const LevySpec& spec);
Json to_json(const MapSpec& spec);
Json to_json(const ProcessSpec& spec);
JumpLaw jump_law_from_json(const Json& j, const std::string& where);
LevySpec levy_from_json(const Json& j, const std::string& where);
MapSpec map_spec_from_json(const Json& j, const std::string& where);
ProcessSpec process_from_json(const Json& j, const std::string& where);

struct RunOptions {
    std::string out_dir = ".";
    std::size_t threads = 1;
};

/// Executes the experiment, writes its artifacts and report.json under out_dir.
/// Returns 0 when every requested check passes, 1 otherwise. I/O problems throw.
int run(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);

}  // namespace ssmp
