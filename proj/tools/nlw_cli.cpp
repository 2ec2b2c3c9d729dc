// nlw: pipeline runner for the four-quadrant Riemann problem of the
// nonlinear wave system.
//
//   nlw [--config PATH] [--out DIR] [--set key=value]... STAGE [STAGE...]
//
// Stages run in the order given. Exit codes: 0 success, 1 solver / analysis
// error or missing artifact, 2 configuration error.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlw/config.hpp"
#include "nlw/errors.hpp"
#include "nlw/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfig = 2;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Four-quadrant Riemann problem: finite volumes, self-similar analysis, characteristics"};
    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "flat key=value configuration file");
    app.add_option("--out", out_dir, "output directory (overrides the outdir key)");
    app.add_option("--set", overrides, "override one key, key=value (repeatable)")->take_all();
    app.require_subcommand(1, 0);
    app.fallthrough();

    const std::vector<std::pair<std::string, std::string>> stages = {
        {"solve", "run the finite-volume solver to t_final, write field.csv"},
        {"postproc", "self-similar analysis: cross sections, shock/sonic report, theta3, Gamma_23"},
        {"chars", "characteristic curves (closed forms; simple waves when Gamma_23 exists)"},
        {"goursat", "characteristic mesh in the transient region, sonic front, diagnostics"},
        {"validate", "check the Gamma_23 boundary data"},
        {"report", "print the latest record of each stage"},
    };
    for (const auto& [name, help] : stages) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    nlw::RunConfig cfg;
    try {
        if (!config_path.empty()) {
            if (!std::filesystem::exists(config_path))
                throw nlw::ConfigError("config file '" + config_path + "' does not exist");
            cfg = nlw::load_config_file(config_path);
        }
        for (const auto& kv : overrides) nlw::apply_override(cfg, kv);
        if (!out_dir.empty()) cfg.outdir = out_dir;
        cfg.validate();
    } catch (const nlw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    }

    try {
        nlw::Pipeline pipe(cfg);
        for (const CLI::App* sub : app.get_subcommands()) pipe.run(sub->get_name());
    } catch (const nlw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const nlw::MeshError& e) {
        std::cerr << "error: " << e.what() << " at node (" << e.i() << ", " << e.j() << ")\n";
        return kFailure;
    } catch (const nlw::SolverError& e) {
        std::cerr << "error: " << e.what() << " (cell " << e.cell() << ")\n";
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}
