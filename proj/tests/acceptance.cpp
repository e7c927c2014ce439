#include "gp3/coeffs.hpp"
#include "gp3/config.hpp"
#include "gp3/pipeline.hpp"
#include "gp3/rng.hpp"
#include "gp3/scatter6.hpp"
#include "gp3/sigma9.hpp"
#include "gp3/torus.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace gp3;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double median(std::vector<double> x)
{
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

/// Unit-coupling solution at n6 = 12, shared by the torus criteria.
const ScatteringSolution6& unit_solution()
{
    static const ScatteringSolution6 sol = solve_omega(default_bump(1.0));
    return sol;
}

Outcome zero_potential()
{
    const auto t0 = std::chrono::steady_clock::now();
    const PotentialModel v = default_bump(0.0);
    const ScatteringSolution6 sol = solve_omega(v);
    const double g = gamma(v, sol).value;
    const Field3 veff = sol.effective_potential();
    const double mf = mu_fourier(veff).value, mr = mu_realspace(veff).value;
    const double s = sigma_bracket(v, sol).value;
    const std::vector<TorusRow> rows = bm_convergence(v, {64.0}, TorusOptions{}, 0.0, 20);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool zero = sol.b_M() == 0.0 && g == 0.0 && mf == 0.0 && mr == 0.0 && s == 0.0 &&
                      rows[0].coefficient == 0.0 && rows[0].block_residual == 0.0;
    return {zero && seconds < 1.0,
            fmt("b_M=%g gamma=%g mu=%g/%g sigma=%g torus=%g residual=%g in %.2f s", sol.b_M(), g, mf, mr, s,
                rows[0].coefficient, rows[0].block_residual, seconds)};
}

Outcome omega_far_field()
{
    const PotentialModel v = default_bump(0.2);
    const ScatteringSolution6 sol = solve_omega(v);
    bool bounds = true;
    const Eigen::VectorXd& rho = sol.density();
    for (Eigen::Index i = 0; i < rho.size(); ++i)
        bounds = bounds && rho[i] >= 0.0 && rho[i] <= sol.potential()[i];
    bounds = bounds && sol.omega_nodes().minCoeff() >= 0.0 && sol.omega_nodes().maxCoeff() <= 1.0;
    const double rv = v.support_radius();
    Rng rng(3);
    double worst = 0.0;
    for (int d = 0; d < 16; ++d) {
        Vec6 u;
        for (int k = 0; k < 6; ++k) u[k] = rng.normal();
        u.normalize();
        double lo = 1e300, hi = 0.0;
        for (double r : {8.0, 16.0, 32.0}) {
            const double w = sol.omega_at(r * rv * u);
            bounds = bounds && w >= 0.0 && w <= 1.0;
            lo = std::min(lo, w * std::pow(r * rv, 4));
            hi = std::max(hi, w * std::pow(r * rv, 4));
        }
        worst = std::max(worst, hi / lo - 1.0);
    }
    for (int i = 0; i < 2000; ++i) {
        Vec6 x;
        for (int k = 0; k < 6; ++k) x[k] = 1.5 * rv * rng.normal();
        const double w = sol.omega_at(x);
        bounds = bounds && w >= 0.0 && w <= 1.0;
    }
    return {bounds && worst <= 0.15, fmt("bounds %s, worst |x|^4 omega spread %.3e (tol 0.15)", bounds ? "hold" : "VIOLATED", worst)};
}

Outcome born_law()
{
    const std::vector<double> lambdas{0.4, 0.2, 0.1};
    std::vector<double> remainder;
    for (double l : lambdas) {
        const ScatteringSolution6 sol = solve_omega(default_bump(l));
        const double bare = std::pow(sol.grid().h(), 6) * sol.potential().sum();
        remainder.push_back(std::abs(sol.b_M_grid() - bare + sol.born_second()));
    }
    const double r1 = remainder[0] / remainder[1], r2 = remainder[1] / remainder[2];
    const bool ok = r1 >= 6.0 && r1 <= 10.0 && r2 >= 6.0 && r2 <= 10.0;
    return {ok, fmt("remainders %.4e %.4e %.4e, ratios %.3f %.3f (want [6, 10])", remainder[0], remainder[1],
                    remainder[2], r1, r2)};
}

Outcome mu_agreement()
{
    const double lambda = 0.05;
    const ScatteringSolution6 sol = solve_omega(default_bump(lambda));
    const Field3 veff = sol.effective_potential();
    const double mf = mu_fourier(veff).value, mr = mu_realspace(veff).value;
    const double rel = std::abs(mf - mr) / mr;
    const double limit = oracle::mu_small_bump();
    const double dev = std::abs(mf / (lambda * lambda) - limit) / limit;
    return {rel <= 0.01 && dev <= 0.05,
            fmt("fourier %.6e realspace %.6e rel %.4f (tol 0.01); mu/lambda^2 %.6f vs limit %.6f dev %.4f (tol 0.05)",
                mf, mr, rel, mf / (lambda * lambda), limit, dev)};
}

Outcome sigma_oracle()
{
    const PotentialModel v = default_bump(0.1);
    const ScatteringSolution6 sol = solve_omega(v);
    McOptions mc;
    mc.born1_samples = 200000;
    mc.born2_samples = 20000;
    const SigmaEstimate s = sigma_bracket(v, sol, mc);
    const double rv = v.support_radius();
    SigmaGridOptions g;
    g.n = 6;
    const SigmaLadder ladder = sigma_grid_ladder(v, sol, {2.0 * rv, 4.0 * rv, 8.0 * rv}, g, true);
    double violation = 0.0;
    for (const SigmaGridResult& r : ladder.rungs) violation = std::max(violation, r.max_bound_violation);
    const double lo = s.lower - 3.0 * s.error, hi = s.upper + 3.0 * s.error;
    const bool inside = ladder.extrapolated >= lo && ladder.extrapolated <= hi;
    return {inside && violation == 0.0,
            fmt("sigma_grid %.4e (resolution spread %.2e) vs [B1-B2-3err, B1+3err] = [%.4e, %.4e]; B1 %.4e B2 %.4e "
                "err %.2e; bound violation %.1e",
                ladder.extrapolated, ladder.error, lo, hi, s.b1.mean, s.b2.total.mean, s.error, violation)};
}

Outcome sign_witness()
{
    RunConfig c;
    c.directory = (fs::temp_directory_path() / "gp3_acceptance_scan").string();
    c.lambdas = {0.4, 0.2, 0.1};
    const StageOutput out = run_stage("scan", c);
    fs::remove_all(c.directory);
    if (!out.ok()) return {false, "scan failed: " + out.json.value("message", out.failed_invariant)};
    for (const Json& row : out.json["rows"]) {
        if (row["lambda"].get<double>() != 0.1) continue;
        const double combo = row["combo"]["value"].get<double>();
        const double err = row["combo"]["error"].get<double>();
        return {combo < 0.0 && std::abs(combo) > 3.0 * err,
                fmt("combo at 0.1 = %.4e +- %.2e (margin %.1f x, want > 3); verdict %s", combo, err,
                    std::abs(combo) / err, out.json["verdict"].get<std::string>().c_str())};
    }
    return {false, "no lambda = 0.1 row"};
}

Outcome block_identity()
{
    TorusOptions o;
    o.cutoff = 1;
    const std::vector<TorusRow> rows =
        bm_convergence(default_bump(1.0), {64.0, 256.0}, o, unit_solution().b_M(), 20);
    double worst = 0.0;
    for (const TorusRow& r : rows) worst = std::max(worst, r.block_residual);
    return {worst <= 1e-8, fmt("max residual %.3e over 20 fields at N = 64, 256 (tol 1e-8)", worst)};
}

Outcome coefficient_trend()
{
    TorusOptions o;
    o.cutoff = 2;
    const PotentialModel v = default_bump(1.0);
    const std::vector<TorusRow> rows = bm_convergence(v, {64.0, 256.0}, o, unit_solution().b_M(), 20);
    bool below = true;
    for (const TorusRow& r : rows) below = below && r.coefficient < v.integral();
    const double shrink = 1.0 - rows[1].deviation / rows[0].deviation;
    return {below && shrink >= 0.3,
            fmt("coef %.6f, %.6f < int V %.6f: %s; |coef - b_M| %.3e -> %.3e, shrink %.1f%% (want >= 30%%)",
                rows[0].coefficient, rows[1].coefficient, v.integral(), below ? "yes" : "no", rows[0].deviation,
                rows[1].deviation, 100.0 * shrink)};
}

Outcome decay_shapes()
{
    std::string detail;
    bool ok = true;
    for (int cutoff : {1, 2}) {
        TorusOptions o;
        o.cutoff = cutoff;
        const TorusModel model(default_bump(1.0), o);
        const LambdaTable table = lambda_table(model);
        for (const auto& [name, c] : {std::pair{"lambda", lambda_decay_constants(model, table)},
                                      std::pair{"T", t_decay_constants(model, table)}}) {
            const double med = median(c);
            const double top = *std::max_element(c.begin(), c.end());
            ok = ok && top <= 3.0 * med;
            detail += fmt("%sm_c=%d %s max/median %.2f", detail.empty() ? "" : "; ", cutoff, name, top / med);
        }
    }
    return {ok, detail + " (tol 3)"};
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        out[e.path().filename().string()] = s.str();
    }
    return out;
}

Outcome determinism()
{
    RunConfig c;
    c.n6 = 8;
    c.coarse_n6 = 6;
    c.workers = 2;
    c.born1_samples = 20000;
    c.born2_samples = 2000;
    c.particles = {64.0};
    std::vector<std::string> runs;
    std::vector<std::map<std::string, std::string>> files;
    for (int rep = 0; rep < 2; ++rep) {
        const fs::path dir = fs::temp_directory_path() / "gp3_acceptance_det";
        fs::remove_all(dir);
        c.directory = dir.string();
        std::string text;
        for (const char* stage : {"omega", "coeffs", "sigma", "torus"}) {
            Json j = run_stage(stage, c).json;
            if (j.contains("provenance")) j["provenance"].erase("timestamp");
            text += dump_json(j);
        }
        runs.push_back(text);
        files.push_back(directory_bytes(dir));
        fs::remove_all(dir);
    }
    const bool same = runs[0] == runs[1] && files[0] == files[1];
    return {same, fmt("4 stages x 2 runs, %zu artifacts: %s", files[0].size(), same ? "identical" : "DIFFER")};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"zero-potential sanity", zero_potential},
        {"omega bounds and far field", omega_far_field},
        {"Born second-order law for b_M", born_law},
        {"mu method agreement and small-coupling limit", mu_agreement},
        {"sigma bracket vs grid oracle", sigma_oracle},
        {"sign witness", sign_witness},
        {"torus block identity", block_identity},
        {"renormalized-coefficient trend", coefficient_trend},
        {"decay-shape fits", decay_shapes},
        {"determinism", determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %s: %s | %s | %.1f s\n", id, r.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    r.detail.c_str(), seconds);
        std::fflush(stdout);
        failed += !r.pass;
    }
    return failed ? 1 : 0;
}
