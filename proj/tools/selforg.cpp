// Command-line front end: selforg <kind> --config <path> [--out <dir>]
//   [--seed <u64>] [--realisations <n>] [--threads <n>]

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "selforg/config.hpp"
#include "selforg/experiment.hpp"

int main(int argc, char** argv)
{
    using namespace selforg;

    CLI::App app{"Multispecies cavity selforganisation: simulations and kinetic-theory predictions"};
    std::string kind_text;
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> realisations;
    std::optional<std::size_t> threads;

    app.add_option("kind", kind_text, "simulate | ensemble | threshold | equilibrium | heatflow | sweep")->required();
    app.add_option("--config,-c", config_path, "experiment configuration file")->required();
    app.add_option("--out,-o", out, "output directory (overrides the config)");
    app.add_option("--seed", seed, "base seed (overrides the config)");
    app.add_option("--realisations,-n", realisations, "ensemble size (overrides the config)");
    app.add_option("--threads,-j", threads, "worker threads (overrides the config)");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    const auto kind = parse_kind(kind_text);
    if (!kind) {
        std::cerr << "unknown experiment kind '" << kind_text << "'\n";
        return kExitConfig;
    }

    ExperimentConfig config;
    try {
        config = load_config(config_path);
    }
    catch (const ParseError& e) {
        std::cerr << config_path << ": " << e.what() << '\n';
        return kExitConfig;
    }
    catch (const ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << '\n';
        return kExitConfig;
    }

    config.kind = *kind;
    if (out)
        config.output = *out;
    if (seed)
        config.sim.seed = *seed;
    if (realisations)
        config.realisations = *realisations;
    if (threads)
        config.threads = *threads;

    const int status = run_experiment(config, std::cerr);
    if (status == kExitOk)
        std::cout << "wrote " << config.output << '\n';
    return status;
}
