// imb-lab: command-line front end for the inverse magnetic billiard library.

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "imb/cli/commands.hpp"
#include "imb/version.hpp"

namespace {

struct FlagSpec {
    const char* key;
    const char* help;
};

const FlagSpec kFlags[] = {
    {"curve", "boundary: circle:R=1, ellipse:lambda=2 or fourier:file=PATH"},
    {"mu", "Larmor radius"},
    {"B", "field strength (with --mass, --charge, --speed instead of --mu)"},
    {"mass", "particle mass"},
    {"charge", "particle charge"},
    {"speed", "particle speed"},
    {"iters", "number of returns"},
    {"grid", "portrait grid NSxNU"},
    {"seed", "random seed for sampled checks"},
    {"jobs", "worker threads (0: all cores)"},
    {"out", "output directory"},
    {"tol-override", "KEY=VAL tolerance override, repeatable"},
    {"m", "winding number of a periodic orbit"},
    {"n", "period of a periodic orbit"},
    {"method", "periodic search: variational, shooting or both"},
    {"s0", "initial arc length"},
    {"u0", "initial u = -cos(theta)"},
    {"theta0", "initial angle to the tangent (overrides --u0)"},
    {"samples", "random states per check suite"},
    {"coords", "portrait abscissa: phi (native parameter) or s"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"imb-lab: inverse magnetic billiards on convex planar domains"};
    app.set_version_flag("--version", std::string(imb::kProgramName) + " " + imb::kVersion);
    app.require_subcommand(1);

    std::map<std::string, std::vector<std::string>> given;
    for (const auto& f : kFlags) {
        auto* opt = app.add_option(std::string("--") + f.key, given[f.key], f.help);
        opt->allow_extra_args(false);
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    }
    std::string config_file;
    app.add_option("--config", config_file, "key = value settings file; flags override it");

    const std::pair<const char*, const char*> commands[] = {
        {"info", "curve summary: length, curvature radii, regime, mu-intersection"},
        {"portrait", "phase portrait in the (phi, u) plane"},
        {"orbit", "trajectory from one initial state"},
        {"periodic", "periodic orbit with winding m and period n"},
        {"check", "invariant suites, written to check.json"},
        {"caustic", "chord and Larmor-center envelopes of one orbit"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : imb::cli::kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        std::vector<std::pair<std::string, std::string>> file;
        if (!config_file.empty()) file = imb::cli::read_config_file(config_file);
        std::vector<std::pair<std::string, std::string>> flags;
        for (const auto& f : kFlags) {
            for (const auto& v : given[f.key]) flags.emplace_back(f.key, v);
        }
        const auto cfg = imb::cli::merge_settings(command, file, flags, config_file);
        return imb::cli::run_command(cfg, std::cout);
    } catch (const imb::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return imb::cli::kExitConfig;
    }
}
