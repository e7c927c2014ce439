#pragma once

#include "gp3/coeffs.hpp"
#include "gp3/sigma9.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gp3 {

struct ScanRow {
    double lambda = 0.0;
    double b_m = 0.0, b_m_error = 0.0;
    double gamma = 0.0, gamma_error = 0.0;
    double mu = 0.0, mu_error = 0.0;
    double mu_realspace = 0.0;
    double sigma = 0.0, sigma_error = 0.0;
    double combo = 0.0, combo_error = 0.0;
};

enum class Verdict { sign_confirmed, inconclusive };
std::string to_string(Verdict v);

struct ScanOptions {
    Scatter6Options omega;
    MuOptions mu;
    GammaOptions gamma;
    McOptions mc;
    double margin_factor = 3.0;
    /// Allowed relative spread of mu / lambda^2 and gamma / lambda^3 across the ladder.
    double fingerprint_tolerance = 0.25;
    /// Grid for the omega-free small-coupling mu constant; 0 uses omega.n.
    int small_mu_n = 0;
};

struct ScanResult {
    std::vector<ScanRow> rows; ///< ascending lambda
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::string> diagnostics;
    double mu_small = 0.0;        ///< lim mu(lambda V) / lambda^2 from the omega-free marginal
    double mu_spread = 0.0;       ///< max / min - 1 of mu / lambda^2
    double gamma_spread = 0.0;    ///< max / min - 1 of gamma / lambda^3
    double limit_deviation = 0.0; ///< |combo / lambda^2 + mu_small| / mu_small at the smallest rung
};

/// Full coefficient pipeline at a single coupling; `v` is the unit-coupling potential.
ScanRow scan_row(const PotentialModel& v, double lambda, const ScanOptions& options);

/// Runs scan_row down a strictly decreasing ladder of at least three couplings.
ScanResult scan(const PotentialModel& v, const std::vector<double>& ladder, const ScanOptions& options = {},
                const std::function<void(const ScanRow&)>& progress = {});

} // namespace gp3
