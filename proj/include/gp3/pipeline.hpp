#pragma once

#include "gp3/config.hpp"
#include "gp3/report.hpp"

#include <string>

namespace gp3 {

/// JSON document plus the invariant that failed, if any. Artifacts go to config.directory.
struct StageOutput {
    Json json;
    std::string failed_invariant;
    bool ok() const { return failed_invariant.empty(); }
};

StageOutput run_validate(const RunConfig& config);
StageOutput run_omega(const RunConfig& config);
StageOutput run_coeffs(const RunConfig& config);
StageOutput run_sigma(const RunConfig& config);
StageOutput run_scan(const RunConfig& config);
StageOutput run_torus(const RunConfig& config);
StageOutput run_report(const RunConfig& config);

/// Dispatch by subcommand name; InvariantError and InputError become an error document.
StageOutput run_stage(const std::string& command, const RunConfig& config);

Json provenance(const RunConfig& config);
Json error_document(const std::string& command, const std::string& invariant, const std::string& message);

} // namespace gp3
