#include "gp3/signscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gp3 {

std::string to_string(Verdict v)
{
    return v == Verdict::sign_confirmed ? "SIGN_CONFIRMED" : "INCONCLUSIVE";
}

ScanRow scan_row(const PotentialModel& v, double lambda, const ScanOptions& options)
{
    ScanRow row;
    row.lambda = lambda;
    const PotentialModel vl = v.scaled(lambda);
    if (vl.is_zero()) return row;
    try {
        const ScatteringSolution6 sol = solve_omega(vl, options.omega);
        row.b_m = sol.b_M();
        row.b_m_error = sol.b_M_error();

        const Field3 veff = sol.effective_potential();
        const MuResult mf = mu_fourier(veff, options.mu);
        const MuResult mr = mu_realspace(veff, options.mu);
        row.mu = mf.value;
        row.mu_realspace = mr.value;
        row.mu_error = std::max(mf.error, std::abs(mf.value - mr.value));

        const GammaResult g = gamma(vl, sol, options.gamma);
        row.gamma = g.value;
        row.gamma_error = g.error;

        const SigmaEstimate s = sigma_bracket(vl, sol, options.mc);
        row.sigma = s.value;
        row.sigma_error = s.error;
    } catch (const InvariantError& e) {
        std::ostringstream msg;
        msg << "lambda = " << lambda << ": " << e.what();
        throw InvariantError(e.invariant(), msg.str());
    }
    for (double c : {row.b_m, row.gamma, row.mu, row.sigma})
        if (c < 0.0) throw InvariantError("coefficient_non_negative", "negative coefficient in scan row");
    row.combo = row.gamma - row.mu - row.sigma;
    row.combo_error = row.gamma_error + row.mu_error + row.sigma_error;
    return row;
}

namespace {

double spread(const std::vector<double>& x)
{
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return *lo > 0.0 ? *hi / *lo - 1.0 : std::numeric_limits<double>::infinity();
}

} // namespace

ScanResult scan(const PotentialModel& v, const std::vector<double>& ladder, const ScanOptions& options,
                const std::function<void(const ScanRow&)>& progress)
{
    if (ladder.size() < 3) throw InputError("the coupling ladder needs at least three rungs");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (!(ladder[i] < ladder[i - 1])) throw InputError("the coupling ladder must be strictly decreasing");
    if (ladder.back() < 0.0) throw InputError("couplings must be non-negative");

    ScanResult out;
    for (double lambda : ladder) {
        out.rows.push_back(scan_row(v, lambda, options));
        if (progress) progress(out.rows.back());
    }
    std::sort(out.rows.begin(), out.rows.end(), [](const ScanRow& a, const ScanRow& b) { return a.lambda < b.lambda; });

    const int n = options.small_mu_n > 0 ? options.small_mu_n : options.omega.n;
    out.mu_small = v.is_zero() ? 0.0 : mu_fourier(potential_marginal(v, n), options.mu).value;

    std::vector<double> mu2, g3;
    for (const ScanRow& r : out.rows) {
        if (r.lambda <= 0.0) continue;
        mu2.push_back(r.mu / (r.lambda * r.lambda));
        g3.push_back(r.gamma / (r.lambda * r.lambda * r.lambda));
    }
    const ScanRow& small = out.rows.front();
    if (mu2.size() < 2 || v.is_zero()) {
        out.diagnostics.push_back("no positive couplings with a nonzero potential");
        return out;
    }
    out.mu_spread = spread(mu2);
    out.gamma_spread = spread(g3);
    out.limit_deviation = std::abs(small.combo / (small.lambda * small.lambda) + out.mu_small) / out.mu_small;

    bool ok = true;
    if (!(small.combo < 0.0)) {
        ok = false;
        out.diagnostics.push_back("combo is not negative at the smallest coupling");
    }
    if (!(std::abs(small.combo) > options.margin_factor * small.combo_error)) {
        ok = false;
        out.diagnostics.push_back("margin at the smallest coupling is below the required multiple of the error");
    }
    if (!(out.mu_spread <= options.fingerprint_tolerance)) {
        ok = false;
        out.diagnostics.push_back("mu / lambda^2 is not stable across the ladder");
    }
    if (!(out.gamma_spread <= options.fingerprint_tolerance)) {
        ok = false;
        out.diagnostics.push_back("gamma / lambda^3 is not stable across the ladder");
    }
    out.verdict = ok ? Verdict::sign_confirmed : Verdict::inconclusive;
    return out;
}

} // namespace gp3
