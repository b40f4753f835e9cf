#include <filesystem>
#include <iostream>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "kgh/plots.hpp"
#include "kgh/scenario.hpp"

namespace fs = std::filesystem;

namespace {

// 0 ok, 1 bad config or usage, 2 manifest check failed, 3 instability, 4 other run failure.
int cmd_run(const std::string& config_path, std::string out, bool plots) {
    kgh::ScenarioConfig config;
    try {
        config = kgh::parse_config_file(config_path);
    } catch (const kgh::ConfigError& e) {
        std::cerr << "config error at " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "cannot read config: " << e.what() << "\n";
        return 1;
    }
    if (out.empty()) out = config.output;
    if (out.empty()) {
        std::cerr << "no output directory: pass --out or set \"output\" in the config\n";
        return 1;
    }
    auto manifest = kgh::run_scenario(config, out);
    if (plots && manifest.status == "ok") manifest = kgh::emit_plots(out);
    std::cout << fmt::format("scenario {}: {} ({} snapshots, {} reports)\n", kgh::to_string(config.kind),
                             manifest.status, manifest.snapshots.size(), manifest.reports.size());
    if (!manifest.message.empty()) std::cout << manifest.message << "\n";
    std::cout << "manifest: " << (fs::path(out) / "manifest.json").string() << "\n";
    return manifest.exit_code();
}

int cmd_verify(const std::string& dir) {
    const auto result = kgh::verify_manifest(dir);
    for (const auto& p : result.problems) std::cout << p << "\n";
    std::cout << (result.ok ? "manifest ok" : "manifest FAILED") << "\n";
    return result.ok ? 0 : 2;
}

int cmd_plot(const std::string& dir) {
    try {
        const auto m = kgh::emit_plots(dir);
        for (const auto& p : m.plots) std::cout << "wrote " << p.path << "\n";
        for (const auto& s : m.skipped_plots) std::cout << "skipped " << s << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "cannot plot: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Klein-Gordon / Madelung hydrodynamics toolkit"};
    app.set_version_flag("--version", std::string("kghydro ") + kgh::kToolkitVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    bool plots = false;
    auto* run = app.add_subcommand("run", "run a scenario from a JSON config");
    run->add_option("--config", config_path, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory (overrides \"output\" in the config)");
    run->add_flag("--plots", plots, "render SVG plots after a successful run");

    std::string verify_dir;
    auto* verify = app.add_subcommand("verify-manifest", "check that every file in a run manifest exists with its size");
    verify->add_option("--out,dir", verify_dir, "run directory")->required();

    std::string plot_dir;
    auto* plot = app.add_subcommand("plot", "render SVG plots for a finished run");
    plot->add_option("--out,dir", plot_dir, "run directory")->required()->check(CLI::ExistingDirectory);

    auto* list = app.add_subcommand("list-scenarios", "list the scenario kinds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run) return cmd_run(config_path, out, plots);
        if (*verify) return cmd_verify(verify_dir);
        if (*plot) return cmd_plot(plot_dir);
        if (*list) {
            for (auto kind : kgh::all_scenario_kinds()) {
                std::cout << fmt::format("{:<22} {}\n", kgh::to_string(kind), kgh::describe(kind));
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 1;
}
