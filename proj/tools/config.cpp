#include "gp3/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace gp3 {

namespace {

namespace pt = boost::property_tree;

std::string number(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string list(const std::vector<double>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + number(xs[i]);
    return s;
}

std::vector<double> parse_list(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        try {
            out.push_back(std::stod(item, &used));
        } catch (const std::exception&) {
            throw InputError("bad number in " + key + ": '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos)
            throw InputError("bad number in " + key + ": '" + item + "'");
    }
    if (out.empty()) throw InputError(key + " must not be empty");
    return out;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    template <class T>
    void get(const std::string& key, T& out)
    {
        const auto node = tree_.get_child_optional(pt::ptree::path_type(key, '/'));
        if (!node) return;
        seen_.insert(key);
        try {
            out = node->get_value<T>();
        } catch (const pt::ptree_bad_data&) {
            throw InputError("bad value for " + key + ": '" + node->data() + "'");
        }
    }

    void get(const std::string& key, bool& out)
    {
        std::string s;
        get(key, s);
        if (!seen_.count(key)) return;
        if (s == "true" || s == "1" || s == "yes") out = true;
        else if (s == "false" || s == "0" || s == "no") out = false;
        else throw InputError("bad boolean for " + key + ": '" + s + "'");
    }

    void get(const std::string& key, std::vector<double>& out)
    {
        std::string s;
        get(key, s);
        if (seen_.count(key)) out = parse_list(key, s);
    }

    void reject_unknown() const
    {
        for (const auto& [section, child] : tree_) {
            if (child.empty()) {
                if (!seen_.count(section)) throw InputError("unknown config key '" + section + "'");
                continue;
            }
            for (const auto& [key, value] : child)
                if (!seen_.count(section + "/" + key))
                    throw InputError("unknown config key '" + section + "." + key + "'");
        }
    }

private:
    const pt::ptree& tree_;
    std::set<std::string> seen_;
};

} // namespace

RunConfig parse_config(const std::string& text)
{
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InputError(std::string("config parse error: ") + e.what());
    }
    RunConfig c;
    Reader r(tree);
    r.get("workers", c.workers);
    r.get("budget", c.budget);
    r.get("potential/kind", c.potential);
    r.get("potential/table", c.table_path);
    r.get("potential/table_radius", c.table_radius);
    r.get("potential/coupling", c.coupling);
    r.get("potential/symmetrize", c.symmetrize);
    r.get("grids/n6", c.n6);
    r.get("grids/coarse_n6", c.coarse_n6);
    r.get("grids/n9", c.n9);
    r.get("grids/z_radius", c.z_radius);
    r.get("grids/ell_ladder", c.ell_ladder);
    r.get("grids/box", c.box);
    r.get("grids/k_cells", c.k_cells);
    r.get("grids/cg_tolerance", c.cg_tolerance);
    r.get("grids/sigma_grid", c.sigma_grid);
    r.get("mc/born1_samples", c.born1_samples);
    r.get("mc/born2_samples", c.born2_samples);
    r.get("mc/inner_samples", c.inner_samples);
    r.get("mc/seed", c.seed);
    r.get("scan/lambdas", c.lambdas);
    r.get("scan/margin", c.margin);
    r.get("scan/fingerprint_tolerance", c.fingerprint_tolerance);
    r.get("torus/enabled", c.torus);
    r.get("torus/particles", c.particles);
    r.get("torus/cutoff", c.cutoff);
    r.get("torus/low_momentum", c.low_momentum);
    r.get("torus/trials", c.trials);
    r.get("output/directory", c.directory);
    r.reject_unknown();
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize(const RunConfig& c)
{
    std::ostringstream o;
    auto b = [](bool x) { return x ? "true" : "false"; };
    o << "workers = " << c.workers << "\n"
      << "budget = " << number(c.budget) << "\n\n"
      << "[potential]\n"
      << "kind = " << c.potential << "\n"
      << "table = " << c.table_path << "\n"
      << "table_radius = " << number(c.table_radius) << "\n"
      << "coupling = " << number(c.coupling) << "\n"
      << "symmetrize = " << b(c.symmetrize) << "\n\n"
      << "[grids]\n"
      << "n6 = " << c.n6 << "\n"
      << "coarse_n6 = " << c.coarse_n6 << "\n"
      << "n9 = " << c.n9 << "\n"
      << "z_radius = " << number(c.z_radius) << "\n"
      << "ell_ladder = " << list(c.ell_ladder) << "\n"
      << "box = " << number(c.box) << "\n"
      << "k_cells = " << c.k_cells << "\n"
      << "cg_tolerance = " << number(c.cg_tolerance) << "\n"
      << "sigma_grid = " << b(c.sigma_grid) << "\n\n"
      << "[mc]\n"
      << "born1_samples = " << c.born1_samples << "\n"
      << "born2_samples = " << c.born2_samples << "\n"
      << "inner_samples = " << c.inner_samples << "\n"
      << "seed = " << c.seed << "\n\n"
      << "[scan]\n"
      << "lambdas = " << list(c.lambdas) << "\n"
      << "margin = " << number(c.margin) << "\n"
      << "fingerprint_tolerance = " << number(c.fingerprint_tolerance) << "\n\n"
      << "[torus]\n"
      << "enabled = " << b(c.torus) << "\n"
      << "particles = " << list(c.particles) << "\n"
      << "cutoff = " << c.cutoff << "\n"
      << "low_momentum = " << number(c.low_momentum) << "\n"
      << "trials = " << c.trials << "\n\n"
      << "[output]\n"
      << "directory = " << c.directory << "\n";
    return o.str();
}

bool operator==(const RunConfig& a, const RunConfig& b)
{
    return serialize(a) == serialize(b);
}

std::uint64_t config_hash(const RunConfig& config)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t value)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

void apply_environment(RunConfig& config)
{
    if (const char* w = std::getenv("GP3_WORKERS")) {
        char* end = nullptr;
        const long n = std::strtol(w, &end, 10);
        if (end == w || *end != '\0' || n < 1) throw InputError(std::string("bad GP3_WORKERS: ") + w);
        config.workers = static_cast<int>(n);
    }
}

double scatter6_memory(int n)
{
    const double cells = std::pow(n, 6);
    return cells * 8.0 * 2.0;
}

void check(const RunConfig& c)
{
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw InputError(msg);
    };
    need(c.workers >= 1, "workers must be at least 1");
    need(c.budget >= 0.0, "budget must be non-negative");
    need(c.potential == "bump" || c.potential == "table", "potential.kind must be bump or table");
    need(c.potential != "table" || !c.table_path.empty(), "potential.table is required for kind = table");
    need(c.table_radius > 0.0, "potential.table_radius must be positive");
    need(c.coupling >= 0.0 && std::isfinite(c.coupling), "potential.coupling must be finite and non-negative");
    need(c.n6 >= 4 && c.n6 <= 16 && c.n6 % 2 == 0, "grids.n6 must be even and in [4, 16]");
    need(c.coarse_n6 == 0 || (c.coarse_n6 >= 4 && c.coarse_n6 < c.n6), "grids.coarse_n6 must be 0 or in [4, n6)");
    need(scatter6_memory(c.n6) < 4.0e9, "grids.n6 exceeds the 4 GB memory budget");
    need(c.n9 >= 2 && c.n9 <= 8, "grids.n9 must be in [2, 8]");
    need(c.z_radius == 0.0 || c.z_radius >= 4.0, "grids.z_radius must be 0 or at least 4 (units of R_V)");
    for (double e : c.ell_ladder) need(e > 0.0, "grids.ell_ladder entries must be positive");
    need(c.box >= 0.0, "grids.box must be non-negative");
    need(c.k_cells >= 0 && c.k_cells % 2 == 0, "grids.k_cells must be even and non-negative");
    need(c.cg_tolerance > 0.0 && c.cg_tolerance < 1e-3, "grids.cg_tolerance must be in (0, 1e-3)");
    need(c.born1_samples >= 100 && c.born2_samples >= 100, "mc sample counts must be at least 100");
    need(c.inner_samples >= 1, "mc.inner_samples must be at least 1");
    need(c.lambdas.size() >= 3, "scan.lambdas needs at least three rungs");
    for (std::size_t i = 1; i < c.lambdas.size(); ++i)
        need(c.lambdas[i] < c.lambdas[i - 1], "scan.lambdas must be strictly decreasing");
    need(c.lambdas.back() >= 0.0, "scan.lambdas must be non-negative");
    need(c.margin > 0.0 && c.fingerprint_tolerance > 0.0, "scan tolerances must be positive");
    need(c.cutoff >= 1 && c.cutoff <= 2, "torus.cutoff must be 1 or 2");
    need(c.low_momentum >= 0.0, "torus.low_momentum must be non-negative");
    need(c.trials >= 1, "torus.trials must be at least 1");
    for (double n : c.particles) need(n > 0.0, "torus.particles entries must be positive");
    need(!c.directory.empty(), "output.directory must not be empty");
}

PotentialModel make_potential(const RunConfig& c)
{
    std::shared_ptr<const Profile> base;
    if (c.potential == "bump") base = std::make_shared<BumpProfile>();
    else base = load_table(c.table_path, c.table_radius);
    return c.symmetrize ? symmetrize(base, c.coupling) : PotentialModel(base, c.coupling, false);
}

namespace {

double omega_seconds(int n) { return 14.0 * std::pow(n / 12.0, 6); }
double gamma_seconds(int n) { return 40.0 * std::pow(n / 12.0, 3); }
double bracket_seconds(const RunConfig& c)
{
    return 10.0 * c.born1_samples / 2.0e5 + 13.0 * c.born2_samples / 2.0e4 * c.inner_samples / 4.0;
}
double grid_seconds(const RunConfig& c)
{
    return 90.0 * std::pow(c.n9 / 6.0, 9) * (c.ell_ladder.size() + 1);
}
double torus_seconds(const RunConfig& c)
{
    return (c.cutoff >= 2 ? 12.0 : 4.0) * c.particles.size() + omega_seconds(c.n6);
}

} // namespace

std::vector<BudgetStep> apply_budget(RunConfig& c)
{
    std::vector<BudgetStep> steps;
    if (c.budget <= 0.0) return steps;
    auto stage_cost = [&](const std::string& s) {
        if (s == "omega") return omega_seconds(c.n6);
        if (s == "coeffs") return omega_seconds(c.n6) + gamma_seconds(c.n6);
        if (s == "sigma") return omega_seconds(c.n6) + bracket_seconds(c) + (c.sigma_grid ? grid_seconds(c) : 0.0);
        if (s == "scan") return (omega_seconds(c.n6) + gamma_seconds(c.n6) + bracket_seconds(c)) * c.lambdas.size();
        return torus_seconds(c);
    };
    for (const std::string stage : {"omega", "coeffs", "sigma", "scan", "torus"}) {
        while (stage_cost(stage) > c.budget) {
            std::string change;
            if (stage == "sigma" && c.sigma_grid && c.n9 > 4) {
                --c.n9;
                change = "n9 -> " + std::to_string(c.n9);
            } else if ((stage == "sigma" || stage == "scan") && c.born1_samples > 25000) {
                c.born1_samples /= 2;
                c.born2_samples /= 2;
                change = "mc samples halved";
            } else if (stage == "torus" && c.cutoff > 1) {
                c.cutoff = 1;
                change = "cutoff -> 1";
            } else if (c.n6 > 8) {
                c.n6 -= 2;
                if (c.coarse_n6 >= c.n6) c.coarse_n6 = 0;
                change = "n6 -> " + std::to_string(c.n6);
            } else {
                steps.push_back({stage, "ladder exhausted", stage_cost(stage)});
                break;
            }
            steps.push_back({stage, change, stage_cost(stage)});
        }
    }
    return steps;
}

} // namespace gp3
