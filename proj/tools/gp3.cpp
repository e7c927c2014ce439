#include "gp3/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Scattering coefficients of three-body potentials"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output;
    double budget = -1.0;
    int workers = 0;
    bool quiet = false;
    app.add_option("-c,--config", config_path, "key = value config file (built-in defaults when omitted)");
    app.add_option("-o,--output", output, "output directory (overrides output.directory)");
    app.add_option("--budget", budget, "wall seconds per stage; resolutions are lowered until the estimate fits")
        ->check(CLI::NonNegativeNumber);
    app.add_option("-j,--workers", workers, "worker threads (GP3_WORKERS overrides the config, this overrides both)")
        ->check(CLI::PositiveNumber);
    app.add_flag("-q,--quiet", quiet, "do not echo the JSON document");
    app.fallthrough();

    const std::pair<const char*, const char*> commands[] = {
        {"validate", "certify non-negativity, support and symmetry of V"},
        {"omega", "solve the six-dimensional scattering equation and save rho"},
        {"coeffs", "gamma and mu (Fourier and real-space)"},
        {"sigma", "Born bracket for sigma, plus the grid oracle when grids.sigma_grid = true"},
        {"scan", "coupling scan and sign verdict for gamma - mu - sigma"},
        {"torus", "truncated torus model: block identity and renormalized coefficient"},
        {"report", "full coefficient report"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    gp3::RunConfig config;
    try {
        if (!config_path.empty()) config = gp3::load_config(config_path);
        gp3::apply_environment(config);
        if (workers > 0) config.workers = workers;
        if (!output.empty()) config.directory = output;
        if (budget >= 0.0) config.budget = budget;
        gp3::check(config);
    } catch (const std::exception& e) {
        std::cout << gp3::dump_json(gp3::error_document(command, "input", e.what()));
        return 1;
    }

    const std::vector<gp3::BudgetStep> steps = gp3::apply_budget(config);
    gp3::StageOutput out = gp3::run_stage(command, config);
    if (config.budget > 0.0) {
        gp3::Json b = gp3::Json::array();
        for (const auto& s : steps) b.push_back({{"stage", s.stage}, {"change", s.change}, {"estimate", s.estimate}});
        out.json["budget"] = {{"seconds", config.budget}, {"steps", b}};
    }
    try {
        std::filesystem::create_directories(config.directory);
        std::ofstream(std::filesystem::path(config.directory) / "config.ini", std::ios::binary) << gp3::serialize(config);
        gp3::write_json(std::filesystem::path(config.directory) / (command + ".json"), out.json);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    if (!quiet || !out.ok()) std::cout << gp3::dump_json(out.json);
    if (out.ok()) return 0;
    return out.failed_invariant == "input" ? 1 : 2;
}
