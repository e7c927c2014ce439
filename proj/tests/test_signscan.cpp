#include "gp3/signscan.hpp"

#include <doctest.h>

using namespace gp3;

namespace {

ScanOptions cheap()
{
    ScanOptions o;
    o.omega.n = 6;
    o.mc.born1_samples = 4000;
    o.mc.born2_samples = 400;
    return o;
}

} // namespace

TEST_CASE("ladder validation")
{
    const PotentialModel v = default_bump();
    CHECK_THROWS_AS(scan(v, {0.2, 0.1}, cheap()), InputError);
    CHECK_THROWS_AS(scan(v, {0.2, 0.2, 0.1}, cheap()), InputError);
    CHECK_THROWS_AS(scan(v, {0.1, 0.2, 0.4}, cheap()), InputError);
    CHECK_THROWS_AS(scan(v, {0.2, 0.1, -0.1}, cheap()), InputError);
}

TEST_CASE("verdict names")
{
    CHECK(to_string(Verdict::sign_confirmed) == "SIGN_CONFIRMED");
    CHECK(to_string(Verdict::inconclusive) == "INCONCLUSIVE");
}

TEST_CASE("scan row combines its coefficients")
{
    const ScanRow r = scan_row(default_bump(), 0.1, cheap());
    CHECK(r.lambda == 0.1);
    CHECK(r.b_m > 0.0);
    CHECK(r.b_m == doctest::Approx(default_bump(0.1).integral()).epsilon(0.05));
    CHECK(r.mu > 0.0);
    CHECK(r.mu_realspace == doctest::Approx(r.mu).epsilon(0.05));
    CHECK(r.mu_error >= std::abs(r.mu - r.mu_realspace));
    CHECK(r.combo == r.gamma - r.mu - r.sigma);
    CHECK(r.combo_error == r.gamma_error + r.mu_error + r.sigma_error);
}

TEST_CASE("zero potential scan is inconclusive with zero rows")
{
    const ScanResult s = scan(default_bump(0.0), {0.4, 0.2, 0.1}, cheap());
    REQUIRE(s.rows.size() == 3);
    CHECK(s.rows.front().lambda == 0.1);
    CHECK(s.rows.back().lambda == 0.4);
    for (const ScanRow& r : s.rows) {
        CHECK(r.b_m == 0.0);
        CHECK(r.combo == 0.0);
    }
    CHECK(s.verdict == Verdict::inconclusive);
    CHECK(!s.diagnostics.empty());
}

TEST_CASE("progress is reported per rung")
{
    int calls = 0;
    scan(default_bump(0.0), {0.3, 0.2, 0.1, 0.05}, cheap(), [&](const ScanRow&) { ++calls; });
    CHECK(calls == 4);
}
