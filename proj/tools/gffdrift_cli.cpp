#include "gffdrift/commands.hpp"
#include "gffdrift/config.hpp"
#include "gffdrift/io.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    using namespace gffdrift;
    CLI::App app{"Brownian motion in a curl-of-GFF drift: sampling, simulation and analytic checks", "gffdrift"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<unsigned> threads;
    bool dry_run = false;
    app.add_option("--config", config_path, "JSON run configuration (defaults apply when omitted)")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed, overrides master_seed");
    app.add_option("--out", out_dir, "output directory, overrides output_dir");
    app.add_option("--threads", threads, "worker threads, overrides threads")->check(CLI::PositiveNumber);
    app.add_flag("--dry-run", dry_run, "validate the config and print derived L, N, dt without computing");

    const std::pair<const char*, const char*> commands[] = {
        {"analytic", "tabulate G_j, S_n and the limiting constants"},
        {"sample-field", "draw one environment and write a binary snapshot"},
        {"simulate", "annealed moments at the configured eps"},
        {"sweep", "weak-coupling sweep over sweep.eps_list"},
        {"superdiffusivity", "fixed-coupling E|Y_t|^2 / t scan"},
        {"resolvent", "base and truncated diffusivities and replacement residuals"},
        {"verify", "run the acceptance suite and write verify.json"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        RunConfig cfg = config_path.empty() ? config_from_json(nlohmann::json::object()) : load_config(config_path);
        if (seed) cfg.master_seed = *seed;
        if (out_dir) cfg.output_dir = *out_dir;
        if (threads) cfg.threads = *threads;
        cfg.validate();
        const std::string command = app.get_subcommands().front()->get_name();
        const CommandOutcome res = run_command(command, cfg, dry_run, dry_run ? std::cout : std::cerr);
        if (!dry_run)
            for (const auto& f : res.files) std::cout << cfg.output_dir << '/' << f << '\n';
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "gffdrift: " << e.what() << '\n';
        return kExitError;
    }
}
