#include "gp3/potential.hpp"
#include "gp3/rng.hpp"
#include "oracles.hpp"

#include <Eigen/LU>
#include <doctest.h>

#include <filesystem>

using namespace gp3;

namespace {

Vec6 random_point(Rng& rng, double radius)
{
    Vec6 x;
    for (int d = 0; d < 6; ++d) x[d] = radius * (2.0 * rng.uniform() - 1.0);
    return x;
}

} // namespace

TEST_CASE("bump integral matches the radial reduction")
{
    const BumpProfile bump;
    CHECK(bump.integral() == doctest::Approx(oracle::bump_integral6()).epsilon(1e-8));
    CHECK(bump.integral() == doctest::Approx(0.639464).epsilon(1e-5));
    CHECK(default_bump(0.3).integral() == doctest::Approx(0.3 * bump.integral()).epsilon(1e-10));
}

TEST_CASE("relabelings form a group and leave the symmetrized potential invariant")
{
    const auto& g = relabelings();
    for (const auto& a : g) {
        CHECK(std::abs(std::abs(a.determinant()) - 1.0) < 1e-14);
        for (const auto& b : g) {
            const Eigen::Matrix2d ab = a * b;
            bool found = false;
            for (const auto& c : g) found = found || (ab - c).norm() < 1e-14;
            CHECK(found);
        }
    }
    const PotentialModel v = default_bump();
    CHECK(v.support_radius() == doctest::Approx(1.618034).epsilon(1e-6));
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const Vec6 x = random_point(rng, 1.2);
        for (const auto& m : g) CHECK(v(apply_relabeling(m, x)) == doctest::Approx(v(x)).epsilon(1e-12));
    }
}

TEST_CASE("validate certifies the default bump and reports injected witnesses")
{
    const Certification ok = validate(default_bump());
    CHECK(ok.pass);
    CHECK(ok.failures.empty());

    // An asymmetric profile used without symmetrization fails the symmetry identity.
    auto skew = std::make_shared<FunctionProfile>(
        [](const Vec6& x) { return std::exp(-x.squaredNorm()) * (1.0 + 0.5 * std::tanh(x[0])); }, 1.5, 2.0, "skew");
    const Certification bad = validate(PotentialModel(skew, 1.0, false));
    CHECK_FALSE(bad.pass);
    REQUIRE_FALSE(bad.failures.empty());
    CHECK(bad.failures.front().identity.rfind("symmetry:", 0) == 0);

    // Negative values are rejected by symmetrize and flagged by validate.
    auto negative = std::make_shared<FunctionProfile>([](const Vec6& x) { return x[0] - 0.2; }, 1.0, 1.0, "neg");
    CHECK_THROWS_AS(symmetrize(negative), InputError);
    ValidateOptions opt;
    Vec6 w = Vec6::Zero();
    opt.extra_points.push_back(w);
    const Certification neg = validate(PotentialModel(negative, 1.0, false), opt);
    CHECK_FALSE(neg.pass);
    bool named = false;
    for (const auto& f : neg.failures) named = named || f.identity == "non_negative";
    CHECK(named);
}

TEST_CASE("exact transform agrees with the quadrature transform")
{
    const PotentialModel v = default_bump();
    std::vector<Vec6> waves;
    Rng rng(5);
    waves.push_back(Vec6::Zero());
    for (int i = 0; i < 6; ++i) waves.push_back(random_point(rng, 2.5));
    FourierOptions q;
    q.order = 20;
    q.method = FourierMethod::quadrature;
    FourierOptions e = q;
    e.method = FourierMethod::exact;
    const FourierTable tq = fourier(v, waves, q);
    const FourierTable te = fourier(v, waves, e);
    CHECK(te.values[0].real() == doctest::Approx(v.integral()).epsilon(1e-6));
    for (std::size_t i = 0; i < waves.size(); ++i) {
        CHECK(std::abs(te.values[i] - tq.values[i]) < 2e-3 * v.integral());
        CHECK(std::abs(te.values[i].imag()) < 1e-12);
    }
    CHECK(tq.error_estimate < 1e-2);
}

TEST_CASE("Fourier lattice reproduces pointwise transforms")
{
    const PotentialModel v = default_bump();
    FourierOptions opt;
    opt.order = 16;
    const FourierLattice lat = fourier_lattice(v, 0.7, 1, opt);
    const std::array<int, 6> idx{1, 0, -1, 0, 1, 1};
    Vec6 k;
    for (int d = 0; d < 6; ++d) k[d] = 0.7 * idx[d];
    const FourierTable direct = fourier(v, {k}, opt);
    CHECK(std::abs(lat.at(idx) - direct.values[0]) < 1e-10);
}

TEST_CASE("table profile: multilinear reproduction, sampling and file round trip")
{
    const int n = 5;
    const double radius = 1.0;
    std::vector<double> values(static_cast<std::size_t>(std::pow(n, 6)));
    auto node = [&](std::size_t idx) {
        Vec6 x;
        for (int d = 5; d >= 0; --d) {
            x[d] = -radius + static_cast<double>(idx % n) * 2.0 * radius / (n - 1);
            idx /= n;
        }
        return x;
    };
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Vec6 x = node(i);
        values[i] = 2.0 + x[0] - 0.5 * x[3] + 0.25 * x[5];
    }
    const TableProfile table(n, radius, values);
    Rng rng(9);
    for (int t = 0; t < 50; ++t) {
        const Vec6 x = random_point(rng, 0.99);
        CHECK(table(x) == doctest::Approx(2.0 + x[0] - 0.5 * x[3] + 0.25 * x[5]).epsilon(1e-12));
    }
    // A linear function integrates to its centre value times the volume.
    CHECK(table.integral() == doctest::Approx(2.0 * 64.0).epsilon(1e-12));

    const auto path = std::filesystem::temp_directory_path() / "gp3_table_roundtrip.bin";
    save_table(path, n, values);
    const auto loaded = load_table(path, radius);
    CHECK(loaded->values() == values);
    std::filesystem::remove(path);
}

TEST_CASE("samples follow the potential density")
{
    const PotentialModel v = default_bump();
    Rng rng(11);
    // E[|x|^2] under V / int V from the radial moments of the base bump.
    const int n = 40000;
    double m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec6 x = v.sample(rng);
        CHECK(v(x) > 0.0);
        m2 += x.squaredNorm();
    }
    m2 /= n;
    const double base_m2 = oracle::pi * oracle::pi * oracle::pi *
                           oracle::simpson([](double r) { return std::pow(r, 7) * oracle::bump(r); }, 0.0, 1.0) /
                           oracle::bump_integral6();
    // Identity and swap keep |x|; for isotropic y = (a, b) the other four images have
    // E|(-a, b - a)|^2 = 2 E|a|^2 + E|b|^2 = 1.5 E|y|^2.
    const double expected = base_m2 * (2.0 + 4.0 * 1.5) / 6.0;
    CHECK(m2 == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("scaled potential and zero coupling")
{
    const PotentialModel v = default_bump(0.0);
    CHECK(v.is_zero());
    CHECK(v.integral() == 0.0);
    CHECK(v(Vec6::Zero()) == 0.0);
    CHECK(default_bump().scaled(0.5).coupling() == 0.5);
}
