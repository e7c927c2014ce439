#include "gp3/pipeline.hpp"

#include "gp3/coeffs.hpp"
#include "gp3/scatter6.hpp"
#include "gp3/sigma9.hpp"
#include "gp3/signscan.hpp"
#include "gp3/torus.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

namespace gp3 {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

Scatter6Options omega_options(const RunConfig& c)
{
    Scatter6Options o;
    o.n = c.n6;
    o.coarse_n = c.coarse_n6;
    o.cg.tolerance = c.cg_tolerance;
    o.workers = c.workers;
    return o;
}

MuOptions mu_options(const RunConfig& c)
{
    MuOptions o;
    o.k_cells = c.k_cells;
    return o;
}

GammaOptions gamma_options(const RunConfig& c, double rv)
{
    GammaOptions o;
    o.z_radius = c.z_radius * rv;
    o.workers = c.workers;
    return o;
}

McOptions mc_options(const RunConfig& c)
{
    McOptions o;
    o.born1_samples = c.born1_samples;
    o.born2_samples = c.born2_samples;
    o.inner_samples = c.inner_samples;
    o.seed = c.seed;
    o.workers = c.workers;
    return o;
}

SigmaGridOptions grid_options(const RunConfig& c, double rv)
{
    SigmaGridOptions o;
    o.n = c.n9;
    o.box = c.box * rv;
    o.cg.tolerance = c.cg_tolerance;
    o.workers = c.workers;
    return o;
}

fs::path out_path(const RunConfig& c, const std::string& name) { return fs::path(c.directory) / name; }

Json potential_block(const PotentialModel& v, const RunConfig& c)
{
    return Json{{"kind", c.potential},
                {"coupling", v.coupling()},
                {"symmetrized", v.symmetrized()},
                {"support_radius", v.support_radius()},
                {"integral", v.integral()}};
}

Json cg_block(const CgResult& r)
{
    return Json{{"iterations", r.iterations}, {"relative_residual", r.relative_residual}, {"converged", r.converged}};
}

Json term_block(const TermEstimate& t)
{
    return Json{{"term", t.term},       {"samples", t.samples},       {"mean", t.mean},
                {"stderr", t.std_error}, {"max_weight", t.max_weight}, {"seed", t.seed}};
}

Json omega_block(const PotentialModel& v, const ScatteringSolution6& sol, const RunConfig& c)
{
    Json j;
    j["grid"] = Json{{"n", sol.grid().n}, {"h", sol.grid().h()}, {"support_cells", sol.size()}};
    j["b_m"] = measured(sol.b_M(), sol.b_M_error());
    j["b_m_grid"] = sol.b_M_grid();
    j["b_m_coarse"] = sol.b_M_coarse() ? Json(*sol.b_M_coarse()) : Json(nullptr);
    j["born_second"] = sol.born_second();
    j["cg"] = cg_block(sol.cg());
    j["omega_max"] = sol.omega_nodes().size() ? sol.omega_nodes().maxCoeff() : 0.0;

    Vec6 u;
    u << 1.0, 0.5, -0.3, 0.2, 0.1, -0.4;
    u.normalize();
    Json far = Json::array();
    double lo = INFINITY, hi = 0.0;
    CsvWriter csv(out_path(c, "omega_far_field.csv"), {"r_over_rv", "omega", "r4_omega"});
    for (double r : {8.0, 16.0, 32.0}) {
        const Vec6 x = r * v.support_radius() * u;
        const double w = sol.omega_at(x);
        if (!(w >= 0.0 && w <= 1.0)) throw InvariantError("omega_bounds", "omega outside [0, 1] in the far field");
        const double r4 = w * std::pow(x.norm(), 4);
        lo = std::min(lo, r4);
        hi = std::max(hi, r4);
        far.push_back(Json{{"r_over_rv", r}, {"omega", w}, {"r4_omega", r4}});
        csv << r << w << r4;
        csv.end_row();
    }
    j["far_field"] = far;
    j["far_field_spread"] = lo > 0.0 ? hi / lo - 1.0 : 0.0;
    return j;
}

Json mu_block(const PotentialModel& v, const ScatteringSolution6& sol, const RunConfig& c)
{
    const Field3 veff = sol.effective_potential();
    const MuResult f = mu_fourier(veff, mu_options(c));
    const MuResult r = mu_realspace(veff, mu_options(c));
    Json j;
    j["fourier"] = measured(f.value, f.error);
    j["fourier"]["tail_warning"] = f.tail_warning;
    j["realspace"] = measured(r.value, r.error);
    j["relative_difference"] = f.value > 0.0 ? std::abs(f.value - r.value) / f.value : 0.0;
    j["value"] = f.value;
    j["error"] = std::max(f.error, std::abs(f.value - r.value));
    const double small = v.is_zero() ? 0.0 : mu_fourier(potential_marginal(v, c.n6), mu_options(c)).value;
    j["omega_free_limit"] = small;
    return j;
}

Json gamma_block(const PotentialModel& v, const ScatteringSolution6& sol, const RunConfig& c)
{
    const GammaResult g = gamma(v, sol, gamma_options(c, v.support_radius()));
    Json j = measured(g.value, g.error);
    j["z_radius"] = g.z_radius;
    j["tail_bound"] = g.tail_bound;
    j["cross_term"] = g.cross_term;
    j["square_term"] = g.square_term;
    return j;
}

Json sigma_block(const PotentialModel& v, const ScatteringSolution6& sol, const RunConfig& c)
{
    const SigmaEstimate s = sigma_bracket(v, sol, mc_options(c));
    CsvWriter mc(out_path(c, "mc_diagnostics.csv"), {"term", "samples", "mean", "stderr", "max_weight", "seed"});
    Json terms = Json::array();
    for (const TermEstimate& t : s.diagnostics()) {
        mc << t.term << static_cast<unsigned long long>(t.samples) << t.mean << t.std_error << t.max_weight
           << static_cast<unsigned long long>(t.seed);
        mc.end_row();
        terms.push_back(term_block(t));
    }
    Json j;
    j["bracket"] = Json{{"born1", s.b1.mean},  {"born1_error", s.b1.std_error}, {"born2", s.b2.total.mean},
                        {"born2_error", s.b2.total.std_error}, {"lower", s.lower}, {"upper", s.upper}};
    j["terms"] = terms;
    j["value"] = s.value;
    j["error"] = s.error;
    if (!c.sigma_grid) {
        j["grid"] = skipped("grids.sigma_grid = false");
        return j;
    }
    const double rv = v.support_radius();
    std::vector<double> ells;
    for (double e : c.ell_ladder) ells.push_back(e * rv);
    const SigmaLadder ladder = sigma_grid_ladder(v, sol, ells, grid_options(c, rv), true);
    CsvWriter csv(out_path(c, "sigma_grid.csv"),
                  {"ell", "box", "h", "n", "sigma", "bound_sigma", "audit_relative", "max_bound_violation"});
    Json rungs = Json::array();
    for (const SigmaGridResult& r : ladder.rungs) {
        csv << r.ell << r.box << r.h << r.n << r.sigma << r.bound_sigma << r.audit_relative << r.max_bound_violation;
        csv.end_row();
        rungs.push_back(Json{{"ell", r.ell},
                             {"sigma", r.sigma},
                             {"bound_sigma", r.bound_sigma},
                             {"audit_relative", r.audit_relative},
                             {"max_bound_violation", r.max_bound_violation},
                             {"cg", cg_block(r.cg)}});
    }
    const double err = s.error;
    j["grid"] = measured(ladder.extrapolated, ladder.error);
    j["grid"]["rate"] = ladder.rate ? Json(*ladder.rate) : Json(nullptr);
    j["grid"]["rungs"] = rungs;
    j["grid"]["within_bracket"] =
        ladder.extrapolated >= s.lower - 3.0 * err && ladder.extrapolated <= s.upper + 3.0 * err;
    return j;
}

struct TorusSummary {
    Json json;
    std::string failed;
};

TorusSummary torus_block(const PotentialModel& v, double b_ref, const RunConfig& c)
{
    TorusOptions opt;
    opt.cutoff = c.cutoff;
    opt.low_momentum = c.low_momentum;
    const std::vector<TorusRow> rows = bm_convergence(v, c.particles, opt, b_ref, c.trials, c.seed);
    CsvWriter csv(out_path(c, "torus.csv"),
                  {"N", "m_c", "K", "lambda00", "coeff", "b_M_ref", "deviation", "block_residual", "mu_N"});
    TorusSummary out;
    Json jr = Json::array();
    double worst = 0.0;
    bool below = true;
    for (const TorusRow& r : rows) {
        csv << r.particles << r.cutoff << r.low_momentum << r.lambda00.real() << r.coefficient << r.b_m_reference
            << r.deviation << r.block_residual << r.mu_n;
        csv.end_row();
        jr.push_back(Json{{"particles", r.particles},
                          {"lambda00", r.lambda00.real()},
                          {"coefficient", r.coefficient},
                          {"deviation", r.deviation},
                          {"block_residual", r.block_residual},
                          {"mu_n", r.mu_n}});
        worst = std::max(worst, r.block_residual);
        if (!v.is_zero() && !(r.coefficient < v.integral())) below = false;
    }
    Json trend = Json::array();
    bool decreasing = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double ratio = rows[i - 1].deviation > 0.0 ? rows[i].deviation / rows[i - 1].deviation : 0.0;
        trend.push_back(ratio);
        if (ratio > 1.0) decreasing = false;
    }
    out.json = Json{{"cutoff", c.cutoff},        {"low_momentum", c.low_momentum}, {"b_m_reference", b_ref},
                    {"rows", jr},                {"max_block_residual", worst},   {"deviation_ratios", trend},
                    {"coefficient_below_bare", below}};
    out.json["diagnosis"] = decreasing ? Json(nullptr) : Json("cutoff_too_small");
    if (worst > 1e-8) out.failed = "block_identity";
    else if (!below) out.failed = "coefficient_below_bare";
    return out;
}

std::string timestamp()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

StageOutput finish(const std::string& command, const RunConfig& c, Json body, const std::string& failed = {})
{
    Json j;
    j["command"] = command;
    j["status"] = failed.empty() ? "ok" : "failed";
    if (!failed.empty()) j["invariant"] = failed;
    j["provenance"] = provenance(c);
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    return {j, failed};
}

} // namespace

Json provenance(const RunConfig& config)
{
    return Json{{"config_hash", hex(config_hash(config))},
                {"seed", config.seed},
                {"workers", config.workers},
                {"version", kVersion},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"timestamp", timestamp()}};
}

Json error_document(const std::string& command, const std::string& invariant, const std::string& message)
{
    return Json{{"command", command}, {"status", "error"}, {"invariant", invariant}, {"message", message}};
}

StageOutput run_validate(const RunConfig& c)
{
    const PotentialModel v = make_potential(c);
    const Certification cert = validate(v);
    Json failures = Json::array();
    for (const Violation& f : cert.failures)
        failures.push_back(Json{{"identity", f.identity},
                                {"witness", std::vector<double>(f.witness.data(), f.witness.data() + 6)},
                                {"magnitude", f.magnitude}});
    Json body;
    body["potential"] = potential_block(v, c);
    body["certification"] = Json{{"pass", cert.pass},
                                 {"points_checked", cert.points_checked},
                                 {"max_violation", cert.max_violation},
                                 {"symmetry_tolerance", cert.symmetry_tolerance},
                                 {"failures", failures}};
    return finish("validate", c, body, cert.pass ? "" : cert.failures.front().identity);
}

StageOutput run_omega(const RunConfig& c)
{
    const PotentialModel v = make_potential(c);
    const ScatteringSolution6 sol = solve_omega(v, omega_options(c));
    fs::create_directories(c.directory);
    sol.save(out_path(c, "omega.bin"));
    Json body;
    body["potential"] = potential_block(v, c);
    body["omega"] = omega_block(v, sol, c);
    body["omega"]["artifact"] = "omega.bin";
    return finish("omega", c, body);
}

StageOutput run_coeffs(const RunConfig& c)
{
    const PotentialModel v = make_potential(c);
    const ScatteringSolution6 sol = solve_omega(v, omega_options(c));
    const Json mu = mu_block(v, sol, c);
    const Json g = gamma_block(v, sol, c);
    CsvWriter csv(out_path(c, "coeffs.csv"), {"quantity", "value", "error", "method"});
    csv << std::string("b_M") << sol.b_M() << sol.b_M_error() << std::string("nystrom");
    csv.end_row();
    csv << std::string("mu") << mu["fourier"]["value"].get<double>() << mu["fourier"]["error"].get<double>()
        << std::string("fourier");
    csv.end_row();
    csv << std::string("mu") << mu["realspace"]["value"].get<double>() << mu["realspace"]["error"].get<double>()
        << std::string("realspace");
    csv.end_row();
    csv << std::string("gamma") << g["value"].get<double>() << g["error"].get<double>() << std::string("quadrature");
    csv.end_row();
    Json body;
    body["potential"] = potential_block(v, c);
    body["b_m"] = measured(sol.b_M(), sol.b_M_error());
    body["mu"] = mu;
    body["gamma"] = g;
    return finish("coeffs", c, body);
}

StageOutput run_sigma(const RunConfig& c)
{
    const PotentialModel v = make_potential(c);
    const ScatteringSolution6 sol = solve_omega(v, omega_options(c));
    Json body;
    body["potential"] = potential_block(v, c);
    body["sigma"] = sigma_block(v, sol, c);
    return finish("sigma", c, body);
}

StageOutput run_scan(const RunConfig& c)
{
    const PotentialModel v = make_potential(c);
    ScanOptions o;
    o.omega = omega_options(c);
    o.mu = mu_options(c);
    o.gamma = gamma_options(c, v.support_radius());
    o.mc = mc_options(c);
    o.margin_factor = c.margin;
    o.fingerprint_tolerance = c.fingerprint_tolerance;
    const ScanResult r = scan(v, c.lambdas, o);
    const std::string verdict = to_string(r.verdict);
    CsvWriter csv(out_path(c, "scan.csv"), {"lambda", "b_M", "gamma", "mu", "sigma", "combo", "combo_err", "verdict"});
    Json rows = Json::array();
    for (const ScanRow& row : r.rows) {
        csv << row.lambda << row.b_m << row.gamma << row.mu << row.sigma << row.combo << row.combo_error << verdict;
        csv.end_row();
        rows.push_back(Json{{"lambda", row.lambda},
                            {"b_m", measured(row.b_m, row.b_m_error)},
                            {"gamma", measured(row.gamma, row.gamma_error)},
                            {"mu", measured(row.mu, row.mu_error)},
                            {"mu_realspace", row.mu_realspace},
                            {"sigma", measured(row.sigma, row.sigma_error)},
                            {"combo", measured(row.combo, row.combo_error)}});
    }
    Json body;
    body["potential"] = potential_block(v, c);
    body["rows"] = rows;
    body["verdict"] = verdict;
    body["diagnostics"] = r.diagnostics;
    body["mu_small_limit"] = r.mu_small;
    body["mu_over_lambda2_spread"] = r.mu_spread;
    body["gamma_over_lambda3_spread"] = r.gamma_spread;
    body["limit_deviation"] = r.limit_deviation;
    return finish("scan", c, body);
}

StageOutput run_torus(const RunConfig& c)
{
    const PotentialModel v = make_potential(c);
    const double b_ref = v.is_zero() ? 0.0 : solve_omega(v, omega_options(c)).b_M();
    const TorusSummary t = torus_block(v, b_ref, c);
    Json body;
    body["potential"] = potential_block(v, c);
    body["torus"] = t.json;
    return finish("torus", c, body, t.failed);
}

StageOutput run_report(const RunConfig& c)
{
    const PotentialModel v = make_potential(c);
    const ScatteringSolution6 sol = solve_omega(v, omega_options(c));
    Json body;
    body["potential"] = potential_block(v, c);
    body["b_m"] = measured(sol.b_M(), sol.b_M_error());
    const Json g = gamma_block(v, sol, c);
    const Json mu = mu_block(v, sol, c);
    const Json s = sigma_block(v, sol, c);
    body["gamma"] = g;
    body["mu"] = mu;
    body["sigma"] = s;
    const double combo = g["value"].get<double>() - mu["value"].get<double>() - s["value"].get<double>();
    const double combo_err = g["error"].get<double>() + mu["error"].get<double>() + s["error"].get<double>();
    body["combo"] = measured(combo, combo_err);
    std::string failed;
    if (c.torus) {
        const TorusSummary t = torus_block(v, sol.b_M(), c);
        body["torus"] = t.json;
        failed = t.failed;
    } else {
        body["torus"] = skipped("torus.enabled = false");
    }
    return finish("report", c, body, failed);
}

StageOutput run_stage(const std::string& command, const RunConfig& c)
{
    try {
        if (command == "validate") return run_validate(c);
        if (command == "omega") return run_omega(c);
        if (command == "coeffs") return run_coeffs(c);
        if (command == "sigma") return run_sigma(c);
        if (command == "scan") return run_scan(c);
        if (command == "torus") return run_torus(c);
        if (command == "report") return run_report(c);
        return {error_document(command, "input", "unknown command"), "input"};
    } catch (const InvariantError& e) {
        return {error_document(command, e.invariant(), e.what()), e.invariant()};
    } catch (const InputError& e) {
        return {error_document(command, "input", e.what()), "input"};
    }
}

} // namespace gp3
