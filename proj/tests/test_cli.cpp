#include "gp3/config.hpp"
#include "gp3/pipeline.hpp"
#include "gp3/report.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gp3;
namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("gp3_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("config text round trip")
{
    RunConfig c;
    c.workers = 3;
    c.coupling = 0.1 + 0.2;
    c.lambdas = {0.5, 0.25, 0.125, 1.0 / 3.0};
    c.particles = {64.0, 256.0, 1024.0};
    c.torus = false;
    c.directory = "out dir";
    const RunConfig back = parse_config(serialize(c));
    CHECK(back == c);
    CHECK(back.coupling == c.coupling);
    CHECK(back.lambdas[3] == 1.0 / 3.0);
    CHECK(!(back == RunConfig{}));
}

TEST_CASE("config parsing")
{
    const RunConfig c = parse_config("workers = 2\n[grids]\nn6 = 10\nell_ladder = 1, 2\n[scan]\nlambdas = 0.3,0.2,0.1\n");
    CHECK(c.workers == 2);
    CHECK(c.n6 == 10);
    CHECK(c.ell_ladder == std::vector<double>{1.0, 2.0});
    CHECK(c.n9 == RunConfig{}.n9);
    CHECK_THROWS_AS(parse_config("[grids]\nn7 = 3\n"), InputError);
    CHECK_THROWS_AS(parse_config("[bogus]\nx = 1\n"), InputError);
    CHECK_THROWS_AS(parse_config("[grids]\nn6 = twelve\n"), InputError);
    CHECK_THROWS_AS(parse_config("[torus]\nenabled = maybe\n"), InputError);
    CHECK_THROWS_AS(parse_config("[scan]\nlambdas = 0.3,,0.1\n"), InputError);
    CHECK_THROWS_AS(load_config("/nonexistent/gp3.ini"), InputError);
}

TEST_CASE("range checks")
{
    RunConfig c;
    c.workers = 0;
    CHECK_THROWS_AS(check(c), InputError);
    c = RunConfig{};
    c.n6 = 40;
    CHECK_THROWS_AS(check(c), InputError);
    c = RunConfig{};
    CHECK_NOTHROW(check(c));
}

TEST_CASE("worker override from the environment")
{
    RunConfig c;
    setenv("GP3_WORKERS", "5", 1);
    apply_environment(c);
    CHECK(c.workers == 5);
    setenv("GP3_WORKERS", "x", 1);
    CHECK_THROWS_AS(apply_environment(c), InputError);
    unsetenv("GP3_WORKERS");
    RunConfig d;
    apply_environment(d);
    CHECK(d.workers == 1);
}

TEST_CASE("config hash is FNV-1a of the canonical text")
{
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    RunConfig c;
    CHECK(config_hash(c) == fnv1a(serialize(c)));
    CHECK(hex(0xabcULL) == "0000000000000abc");
    RunConfig d = c;
    d.seed = 2;
    CHECK(config_hash(d) != config_hash(c));
}

TEST_CASE("JSON numbers keep full precision")
{
    Json j;
    j["x"] = 0.1;
    j["third"] = 1.0 / 3.0;
    j["nan"] = std::nan("");
    j["inf"] = HUGE_VAL;
    j["n"] = 7;
    const Json back = Json::parse(dump_json(j));
    CHECK(back["x"].get<double>() == 0.1);
    CHECK(back["third"].get<double>() == 1.0 / 3.0);
    CHECK(back["nan"].is_null());
    CHECK(back["inf"].is_null());
    CHECK(back["n"].get<int>() == 7);
    CHECK(measured(1.5, 0.25)["error"].get<double>() == 0.25);
    CHECK(skipped("off")["value"].is_null());
}

TEST_CASE("CSV writer")
{
    const fs::path dir = scratch("csv");
    fs::create_directories(dir);
    {
        CsvWriter w(dir / "t.csv", {"a", "b", "c"});
        w << 1.0 / 3.0 << 4 << std::string("x");
        w.end_row();
        w << 2.0;
        CHECK_THROWS(w.end_row());
    }
    const std::string text = slurp(dir / "t.csv");
    CHECK(text.rfind("a,b,c\n0.33333333333333331,4,x\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("budget lowers resolutions along the ladders")
{
    RunConfig c;
    c.budget = 0.0;
    CHECK(apply_budget(c).empty());
    CHECK(c == RunConfig{});
    c.budget = 1.0;
    c.cutoff = 2;
    c.sigma_grid = true;
    const std::vector<BudgetStep> steps = apply_budget(c);
    CHECK(!steps.empty());
    CHECK(c.n6 == 8);
    CHECK(c.n9 == 4);
    CHECK(steps.back().change == "ladder exhausted");
    CHECK(c.cutoff == 1);
    CHECK(c.born1_samples >= RunConfig{}.born1_samples / 8);
    CHECK(c.born1_samples < RunConfig{}.born1_samples);
}

TEST_CASE("validate stage")
{
    RunConfig c;
    c.directory = scratch("validate").string();
    const StageOutput out = run_stage("validate", c);
    CHECK(out.ok());
    CHECK(out.json["status"] == "ok");
    CHECK(out.json["certification"]["pass"] == true);
    CHECK(out.json["provenance"]["config_hash"] == hex(config_hash(c)));
    CHECK(run_stage("nope", c).failed_invariant == "input");
}

TEST_CASE("bad table path is an input error")
{
    RunConfig c;
    c.potential = "table";
    c.table_path = "/nonexistent/v.tbl";
    const StageOutput out = run_stage("validate", c);
    CHECK(out.failed_invariant == "input");
    CHECK(out.json["status"] == "error");
}

TEST_CASE("stage output is deterministic apart from the timestamp")
{
    RunConfig c;
    c.n6 = 6;
    c.directory = scratch("determinism").string();
    Json a = run_stage("omega", c).json;
    const std::string bin = slurp(fs::path(c.directory) / "omega.bin");
    Json b = run_stage("omega", c).json;
    CHECK(a["status"] == "ok");
    a["provenance"].erase("timestamp");
    b["provenance"].erase("timestamp");
    CHECK(dump_json(a) == dump_json(b));
    CHECK(slurp(fs::path(c.directory) / "omega.bin") == bin);
    fs::remove_all(c.directory);
}
