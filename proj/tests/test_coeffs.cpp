#include "gp3/coeffs.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace gp3;

namespace {

Field3 gaussian_field(int n, double amplitude, double s)
{
    Field3 f;
    f.grid = {n, 5.0 * s};
    f.values.resize(f.grid.size());
    for (std::size_t i = 0; i < f.values.size(); ++i)
        f.values[i] = amplitude * std::exp(-f.node(i).squaredNorm() / (2.0 * s * s));
    return f;
}

double integral(const Field3& f)
{
    return std::pow(f.grid.h(), 3) * std::accumulate(f.values.begin(), f.values.end(), 0.0);
}

} // namespace

TEST_CASE("mu of a Gaussian by both routes")
{
    const double exact = oracle::mu_gaussian(0.7, 0.4);
    const Field3 f = gaussian_field(32, 0.7, 0.4);
    const MuResult a = mu_fourier(f);
    const MuResult b = mu_realspace(f);
    CHECK(a.value == doctest::Approx(exact).epsilon(0.005));
    CHECK(b.value == doctest::Approx(exact).epsilon(0.005));
    CHECK(std::abs(a.value - exact) <= 3.0 * a.error + 1e-4 * exact);
}

TEST_CASE("mu scales quadratically with the field")
{
    const Field3 f = gaussian_field(16, 1.0, 0.5);
    Field3 g = f;
    for (double& x : g.values) x *= 3.0;
    CHECK(mu_fourier(g).value == doctest::Approx(9.0 * mu_fourier(f).value).epsilon(1e-12));
    CHECK(mu_realspace(g).value == doctest::Approx(9.0 * mu_realspace(f).value).epsilon(1e-12));
}

TEST_CASE("small-coupling mu of the bump marginal matches the radial integral")
{
    const double exact = oracle::mu_small_bump();
    const Field3 m = potential_marginal(default_bump(1.0), 12);
    CHECK(integral(m) == doctest::Approx(default_bump(1.0).integral()).epsilon(0.02));
    CHECK(mu_fourier(m).value == doctest::Approx(exact).epsilon(0.015));
}

TEST_CASE("coarsening preserves the integral")
{
    const Field3 f = gaussian_field(16, 1.3, 0.6);
    const Field3 c = coarsen(f);
    CHECK(c.grid.n == 8);
    CHECK(c.grid.radius == f.grid.radius);
    CHECK(integral(c) == doctest::Approx(integral(f)).epsilon(1e-13));
    Field3 odd = gaussian_field(7, 1.0, 1.0);
    CHECK_THROWS(coarsen(odd));
}

TEST_CASE("gamma is cubic in the coupling at weak coupling")
{
    Scatter6Options o;
    o.n = 8;
    const PotentialModel v1 = default_bump(0.1), v2 = default_bump(0.2);
    const GammaResult g1 = gamma(v1, solve_omega(v1, o));
    const GammaResult g2 = gamma(v2, solve_omega(v2, o));
    CHECK(g1.value > 0.0);
    CHECK(g1.tail_bound <= 0.1 * g1.value);
    CHECK(g2.value / g1.value == doctest::Approx(8.0).epsilon(0.1));
    CHECK(g1.value == doctest::Approx(g1.cross_term + g1.square_term).epsilon(1e-12));
}

TEST_CASE("zero potential has zero coefficients")
{
    const PotentialModel v = default_bump(0.0);
    const ScatteringSolution6 sol = solve_omega(v);
    CHECK(gamma(v, sol).value == 0.0);
    const Field3 m = potential_marginal(v, 8);
    CHECK(mu_fourier(m).value == 0.0);
    CHECK(mu_realspace(m).value == 0.0);
}
