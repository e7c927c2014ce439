#pragma once

#include "gp3/potential.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gp3 {

/// Run configuration. Text form is key = value with [potential], [grids], [mc], [scan],
/// [torus] and [output] sections; `workers` and `budget` may appear before the first section.
struct RunConfig {
    int workers = 1;
    double budget = 0.0; ///< wall seconds per stage; 0 disables degradation

    // [potential]
    std::string potential = "bump"; ///< bump | table
    std::string table_path;
    double table_radius = 1.0;
    double coupling = 1.0;
    bool symmetrize = true;

    // [grids]
    int n6 = 12;
    int coarse_n6 = 0;
    int n9 = 6;
    double z_radius = 0.0;                 ///< units of R_V; 0 picks 4
    std::vector<double> ell_ladder{2.0, 4.0, 8.0}; ///< units of R_V
    double box = 0.0;                      ///< units of R_V; 0 picks 1.5
    int k_cells = 0;
    double cg_tolerance = 1e-10;
    bool sigma_grid = false;

    // [mc]
    std::uint64_t born1_samples = 200000;
    std::uint64_t born2_samples = 20000;
    int inner_samples = 4;
    std::uint64_t seed = 1;

    // [scan]
    std::vector<double> lambdas{0.4, 0.2, 0.1};
    double margin = 3.0;
    double fingerprint_tolerance = 0.25;

    // [torus]
    bool torus = true;
    std::vector<double> particles{64.0, 256.0};
    int cutoff = 1;
    double low_momentum = 0.0;
    int trials = 20;

    // [output]
    std::string directory = "gp3-out";
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& config);
/// FNV-1a 64 of the canonical text form.
std::uint64_t config_hash(const RunConfig& config);
std::string hex(std::uint64_t value);
bool operator==(const RunConfig& a, const RunConfig& b);

/// GP3_WORKERS overrides the worker count.
void apply_environment(RunConfig& config);
/// Range and memory checks; throws InputError.
void check(const RunConfig& config);

PotentialModel make_potential(const RunConfig& config);

/// Bytes held by the scatter6 kernel tables and fields at resolution n.
double scatter6_memory(int n);

struct BudgetStep {
    std::string stage;
    std::string change;
    double estimate = 0.0;
};

/// Lowers resolutions along the fixed ladders (n6: 12, 10, 8; n9: 6, 5, 4; Monte-Carlo
/// samples halved down to 1/8; torus cutoff 2 -> 1) until each stage's estimated wall time
/// fits the budget.
std::vector<BudgetStep> apply_budget(RunConfig& config);

} // namespace gp3
