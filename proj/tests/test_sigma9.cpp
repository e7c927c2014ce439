#include "gp3/rng.hpp"
#include "gp3/sigma9.hpp"

#include <doctest.h>

using namespace gp3;

namespace {

const ScatteringSolution6& solution(double lambda)
{
    static const ScatteringSolution6 a = [] {
        Scatter6Options o;
        o.n = 8;
        return solve_omega(default_bump(0.2), o);
    }();
    static const ScatteringSolution6 b = [] {
        Scatter6Options o;
        o.n = 8;
        return solve_omega(default_bump(0.4), o);
    }();
    return lambda < 0.3 ? a : b;
}

} // namespace

TEST_CASE("cutoff is a smooth plateau")
{
    Vec6 x = Vec6::Zero();
    CHECK(cutoff6(x) == 1.0);
    x[2] = 1.0 / 3.0;
    CHECK(cutoff6(x) == 1.0);
    x[2] = 0.5;
    CHECK(cutoff6(x) == 0.0);
    x[2] = 0.42;
    const double mid = cutoff6(x);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
    x[4] = 0.42;
    CHECK(cutoff6(x) == doctest::Approx(mid * mid).epsilon(1e-14));
    Vec6 y = x;
    y[2] = -0.42;
    CHECK(cutoff6(y) == cutoff6(x));
}

TEST_CASE("nine-dimensional potential is the sum of its pair terms")
{
    const NinePotential vv(default_bump(1.0));
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        Vec9 x;
        for (int d = 0; d < 9; ++d) x[d] = 0.4 * rng.normal();
        double s = 0.0;
        for (int k = 0; k < 4; ++k) {
            CHECK(vv.summand(k, x) >= 0.0);
            s += vv.summand(k, x);
        }
        CHECK(vv(x) == doctest::Approx(s).epsilon(1e-14));
        CHECK(vv.summand(0, x) == default_bump(1.0)(Vec6(x.head<6>())));
    }
}

TEST_CASE("source vanishes where the cutoff does")
{
    const PotentialModel v = default_bump(0.2);
    const SourceF f(v, solution(0.2), 2.0);
    const double rv = v.support_radius();
    CHECK(f.correlation(Vec3(0.1, 0.0, 0.0), Vec3(0.0, 0.1, 0.0)) > 0.0);
    CHECK(f.correlation(Vec3(1.1 * 2.0, 0.0, 0.0), Vec3::Zero()) == 0.0);
    const SourceF g(v, solution(0.2));
    CHECK(g.correlation(Vec3(3.0 * rv, 0.0, 0.0), Vec3::Zero()) > 0.0);
}

TEST_CASE("Born terms are reproducible across worker counts")
{
    const PotentialModel v = default_bump(0.2);
    const SourceF f(v, solution(0.2));
    McOptions o;
    o.born1_samples = 4000;
    o.workers = 1;
    const TermEstimate a = born1(f, o);
    o.workers = 3;
    const TermEstimate b = born1(f, o);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    CHECK(a.mean > 0.0);
    o.seed = 2;
    CHECK(born1(f, o).mean != a.mean);
}

TEST_CASE("first Born term is quartic in the coupling")
{
    McOptions o;
    o.born1_samples = 40000;
    const PotentialModel v1 = default_bump(0.2), v2 = default_bump(0.4);
    const TermEstimate a = born1(SourceF(v1, solution(0.2)), o);
    const TermEstimate b = born1(SourceF(v2, solution(0.4)), o);
    const double ratio = b.mean / a.mean;
    const double err = ratio * std::hypot(a.std_error / a.mean, b.std_error / b.mean);
    CHECK(a.std_error < 0.1 * a.mean);
    CHECK(ratio > 12.0);
    CHECK(ratio < 16.0 + 3.0 * err);
}

TEST_CASE("bracket is ordered")
{
    McOptions o;
    o.born1_samples = 20000;
    o.born2_samples = 2000;
    const SigmaEstimate s = sigma_bracket(default_bump(0.2), solution(0.2), o);
    CHECK(s.b2.total.mean > 0.0);
    CHECK(s.lower < s.upper);
    CHECK(s.value == doctest::Approx(0.5 * (s.lower + s.upper)));
    CHECK(s.error >= 0.5 * (s.upper - s.lower));
    CHECK(s.diagnostics().size() >= 5);
}

TEST_CASE("grid solve respects its bounds and audit")
{
    SigmaGridOptions o;
    o.n = 4;
    const SigmaGridResult r = sigma_grid(default_bump(0.2), solution(0.2), 4.0, o);
    CHECK(r.cg.converged);
    CHECK(r.sigma > 0.0);
    CHECK(r.sigma <= r.bound_sigma * (1.0 + 1e-9));
    CHECK(r.max_bound_violation == 0.0);
    CHECK(r.audit_relative < 1e-6);
    CHECK(r.box == doctest::Approx(1.5 * default_bump().support_radius()));
}

TEST_CASE("grid solve enforces the memory budget")
{
    SigmaGridOptions o;
    o.n = 12;
    o.memory_budget = 1e9;
    CHECK(sigma_grid_memory(12) > 1e9);
    CHECK_THROWS_AS(sigma_grid(default_bump(0.2), solution(0.2), 4.0, o), InvariantError);
}

TEST_CASE("zero potential gives zero sigma")
{
    const PotentialModel v = default_bump(0.0);
    const ScatteringSolution6 sol = solve_omega(v);
    const SigmaEstimate s = sigma_bracket(v, sol);
    CHECK(s.value == 0.0);
    CHECK(s.error == 0.0);
    SigmaGridOptions o;
    o.n = 3;
    CHECK(sigma_grid(v, sol, 2.0, o).sigma == 0.0);
}
