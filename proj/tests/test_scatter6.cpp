#include "gp3/greens.hpp"
#include "gp3/rng.hpp"
#include "gp3/scatter6.hpp"

#include <doctest.h>

#include <filesystem>

using namespace gp3;

namespace {

const ScatteringSolution6& solution()
{
    static const ScatteringSolution6 sol = [] {
        Scatter6Options o;
        o.n = 8;
        return solve_omega(default_bump(0.2), o);
    }();
    return sol;
}

/// (2 pi)^-6 int |V^(k)|^2 / (2 k.M^2 k) dk by Monte Carlo with density ~ |k|^-2 exp(-|k|^2 / 2 s^2).
std::pair<double, double> born_second_fourier(const PotentialModel& v, int samples)
{
    Rng rng(21);
    const double s = 2.5;
    const double pi3 = kPi * kPi * kPi;
    const Eigen::Matrix<double, 6, 6> m2 = metric6().full() * metric6().full();
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        Vec6 u;
        for (int d = 0; d < 6; ++d) u[d] = rng.normal();
        u.normalize();
        const double r = s * std::sqrt(-2.0 * std::log(rng.uniform_open() * rng.uniform_open()));
        const Vec6 k = r * u;
        const double p = std::exp(-r * r / (2.0 * s * s)) / (r * r * 2.0 * pi3 * std::pow(s, 4));
        const double vk = std::norm(*v.exact_transform(k));
        const double w = vk / (2.0 * k.dot(m2 * k)) / p;
        sum += w;
        sum2 += w * w;
    }
    const double norm = std::pow(2.0 * kPi, -6);
    const double mean = sum / samples;
    return {norm * mean, norm * std::sqrt((sum2 / samples - mean * mean) / samples)};
}

} // namespace

TEST_CASE("support kernel is symmetric and positive")
{
    const ScatteringSolution6& sol = solution();
    const SupportKernel6 k(sol.grid(), sol.cells());
    Rng rng(1);
    Eigen::VectorXd x(k.size()), y(k.size()), kx, ky;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x[i] = rng.normal();
        y[i] = rng.normal();
    }
    k.apply(x, kx);
    k.apply(y, ky);
    CHECK(std::abs(y.dot(kx) - x.dot(ky)) < 1e-12 * std::abs(x.dot(kx)) + 1e-14);
    CHECK(x.dot(kx) > 0.0);
    CHECK(k.diagonal() == doctest::Approx(cell_average6(sol.grid().h())).epsilon(1e-14));
}

TEST_CASE("solution bounds and variational bracket")
{
    const ScatteringSolution6& sol = solution();
    CHECK(sol.cg().converged);
    const Eigen::VectorXd& v = sol.potential();
    const Eigen::VectorXd& rho = sol.density();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        CHECK(rho[i] >= -1e-12);
        CHECK(rho[i] <= v[i] * (1.0 + 1e-12));
    }
    CHECK(sol.omega_nodes().minCoeff() >= 0.0);
    CHECK(sol.omega_nodes().maxCoeff() <= 1.0);
    const double w = std::pow(sol.grid().h(), 6);
    const double bare = w * v.sum();
    CHECK(sol.b_M_grid() < bare);
    CHECK(sol.b_M_grid() >= bare - sol.born_second());
    CHECK(sol.b_M_grid() <= bare - sol.born_second() + sol.born_second() * sol.born_second() / bare * 50.0);
}

TEST_CASE("omega_at agrees with the nodal values and decays like |x|^-4")
{
    const ScatteringSolution6& sol = solution();
    for (std::size_t i = 0; i < sol.size(); i += 97) {
        const double w = sol.omega_at(sol.node(i));
        CHECK(w == doctest::Approx(sol.omega_nodes()[static_cast<Eigen::Index>(i)]).epsilon(1e-3));
    }
    Vec6 u;
    u << 0.3, -0.2, 0.9, 0.1, 0.4, -0.5;
    u.normalize();
    const double rv = default_bump().support_radius();
    const double a = sol.omega_at(8.0 * rv * u) * std::pow(8.0 * rv, 4);
    const double b = sol.omega_at(32.0 * rv * u) * std::pow(32.0 * rv, 4);
    CHECK(b == doctest::Approx(a).epsilon(0.02));
    // Far field: omega -> kernel6(x) * int rho = kernel6(x) * b_M.
    CHECK(sol.omega_at(64.0 * rv * u) == doctest::Approx(kernel6(Vec6(64.0 * rv * u)) * sol.b_M_grid()).epsilon(0.01));
}

TEST_CASE("density file round trip")
{
    const ScatteringSolution6& sol = solution();
    const auto path = std::filesystem::temp_directory_path() / "gp3_rho_roundtrip.bin";
    sol.save(path);
    const ScatteringSolution6 back = ScatteringSolution6::load(path, default_bump(0.2));
    std::filesystem::remove(path);
    CHECK(back.b_M_grid() == sol.b_M_grid());
    Vec6 x;
    x << 0.4, 0.1, -0.3, 0.2, 0.0, 0.5;
    CHECK(back.omega_at(x) == sol.omega_at(x));
    CHECK(back.size() == sol.size());
}

TEST_CASE("second Born coefficient matches the Fourier-space integral")
{
    Scatter6Options o;
    o.n = 10;
    const PotentialModel v = default_bump(1.0);
    const ScatteringSolution6 sol = solve_omega(v, o);
    const auto [fourier, err] = born_second_fourier(v, 200000);
    CHECK(err < 0.01 * fourier);
    CHECK(sol.born_second() == doctest::Approx(fourier).epsilon(0.04));
}

TEST_CASE("zero potential gives a zero solution")
{
    const ScatteringSolution6 sol = solve_omega(default_bump(0.0));
    CHECK(sol.is_zero());
    CHECK(sol.b_M() == 0.0);
    CHECK(sol.omega_at(Vec6::Constant(0.3)) == 0.0);
}

TEST_CASE("coarse solve gives an extrapolated value with an error bar")
{
    Scatter6Options o;
    o.n = 8;
    o.coarse_n = 6;
    const ScatteringSolution6 sol = solve_omega(default_bump(0.2), o);
    REQUIRE(sol.b_M_coarse());
    CHECK(sol.b_M_error() == doctest::Approx(std::abs(sol.b_M_grid() - *sol.b_M_coarse())));
    const double c = *sol.b_M_coarse();
    CHECK(sol.b_M() == doctest::Approx(sol.b_M_grid() + (sol.b_M_grid() - c) * 36.0 / 28.0));
    CHECK(sol.b_M_grid() < c);
}
