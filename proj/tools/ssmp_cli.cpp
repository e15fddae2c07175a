#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ssmp/config.hpp"

namespace {

std::size_t default_threads() {
    const char* env = std::getenv("SSMP_THREADS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0' || v == 0) return 1;
    return static_cast<std::size_t>(v);
}

struct Args {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::size_t threads = 1;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification of self-similar Markov processes"};
    app.require_subcommand(1);
    Args args;
    args.threads = default_threads();

    for (const auto& kind : ssmp::experiment_kinds()) {
        CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
        sub->add_option("--config", args.config, "JSON experiment file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", args.seed, "overrides the config seed");
        sub->add_option("--out-dir", args.out_dir, "directory for paths and report.json");
        sub->add_option("--threads", args.threads, "worker threads (default: SSMP_THREADS or 1)")
            ->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string kind = app.get_subcommands().front()->get_name();
    try {
        std::ifstream in(args.config);
        if (!in) throw std::runtime_error("cannot read " + args.config);
        std::stringstream text;
        text << in.rdbuf();
        ssmp::ExperimentConfig config = ssmp::parse_config(text.str(), kind);
        if (args.seed) config.seed = *args.seed;
        return ssmp::run(config, {args.out_dir, args.threads}, std::cout);
    } catch (const ssmp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
