#include "gp3/coeffs.hpp"

#include "gp3/greens.hpp"
#include "gp3/parallel.hpp"
#include "gp3/quadrature.hpp"

#include <cmath>
#include <algorithm>
#include <map>

namespace gp3 {

Field3 coarsen(const Field3& f)
{
    const int n = f.grid.n;
    if (n % 2 != 0) throw InputError("coarsen needs an even grid");
    Field3 c;
    c.grid = {n / 2, f.grid.radius};
    const int m = n / 2;
    c.values.assign(static_cast<std::size_t>(m) * m * m, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                c.values[(static_cast<std::size_t>(i / 2) * m + j / 2) * m + k / 2]
                    += f.values[(static_cast<std::size_t>(i) * n + j) * n + k] / 8.0;
    return c;
}

Field3 potential_marginal(const PotentialModel& v, int n)
{
    Field3 f;
    f.grid = {n, v.support_radius()};
    f.values.assign(static_cast<std::size_t>(n) * n * n, 0.0);
    std::vector<double> values;
    const CubeGrid<6> grid{n, v.support_radius()};
    const auto cells = support_cells(v, grid, &values);
    const double w = std::pow(grid.h(), 3);
    for (std::size_t j = 0; j < cells.size(); ++j)
        f.values[(static_cast<std::size_t>(cells[j][0]) * n + cells[j][1]) * n + cells[j][2]] += w * values[j];
    return f;
}

namespace {

double mu_fourier_raw(const Field3& f, int k_cells, bool& tail_warning)
{
    const int n = f.grid.n;
    const double h = f.grid.h();
    const double width = 2.0 * kPi / h;
    const double dk = width / k_cells;
    const int m = k_cells;

    std::vector<double> kc(m);
    for (int i = 0; i < m; ++i) kc[i] = -0.5 * width + (i + 0.5) * dk;
    std::vector<cplx> e(static_cast<std::size_t>(m) * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) e[static_cast<std::size_t>(i) * n + j] = std::polar(1.0, -kc[i] * f.grid.coordinate(j));

    // Separable transform: x-axis, then y, then z.
    const double w = f.cell_volume();
    std::vector<cplx> s1(static_cast<std::size_t>(m) * n * n, 0.0);
    for (int a = 0; a < m; ++a)
        for (int i = 0; i < n; ++i) {
            const cplx ph = e[static_cast<std::size_t>(a) * n + i];
            for (int jk = 0; jk < n * n; ++jk) s1[static_cast<std::size_t>(a) * n * n + jk] += ph * w * f.values[static_cast<std::size_t>(i) * n * n + jk];
        }
    std::vector<cplx> s2(static_cast<std::size_t>(m) * m * n, 0.0);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int j = 0; j < n; ++j) {
                const cplx ph = e[static_cast<std::size_t>(b) * n + j];
                for (int k = 0; k < n; ++k)
                    s2[(static_cast<std::size_t>(a) * m + b) * n + k] += ph * s1[(static_cast<std::size_t>(a) * n + j) * n + k];
            }

    // Weights: exact integral of |k|^-2 over each cell, in units of dk (degree -2 in 3-D).
    // Cells touching the origin use the cone decomposition; the rest use 4^3 Gauss points.
    const QuadratureRule g4 = gauss_legendre(4, -0.5, 0.5);
    std::map<std::array<int, 3>, double> weight_cache;
    auto unit_weight = [&](int a, int b, int c) {
        std::array<int, 3> key{std::abs(2 * a - m + 1), std::abs(2 * b - m + 1), std::abs(2 * c - m + 1)};
        std::sort(key.begin(), key.end());
        auto it = weight_cache.find(key);
        if (it != weight_cache.end()) return it->second;
        const Vec3 center(0.5 * key[0], 0.5 * key[1], 0.5 * key[2]);
        double val = 0.0;
        if (key[2] == 1) {
            auto inv2 = [](const Vec3& z) { return 1.0 / z.squaredNorm(); };
            val = homogeneous_cube_integral<3>(inv2, -2.0, center, 0.5, Vec3::Zero().eval(), 12);
        } else {
            for (std::size_t i = 0; i < g4.size(); ++i)
                for (std::size_t j = 0; j < g4.size(); ++j)
                    for (std::size_t k = 0; k < g4.size(); ++k)
                        val += g4.weights[i] * g4.weights[j] * g4.weights[k]
                               / (center + Vec3(g4.nodes[i], g4.nodes[j], g4.nodes[k])).squaredNorm();
        }
        weight_cache.emplace(key, val);
        return val;
    };

    double total = 0.0;
    double v0 = 0.0, boundary = 0.0;
    for (double x : f.values) v0 += w * x;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int c = 0; c < m; ++c) {
                cplx s = 0.0;
                for (int k = 0; k < n; ++k)
                    s += e[static_cast<std::size_t>(c) * n + k] * s2[(static_cast<std::size_t>(a) * m + b) * n + k];
                const double mag2 = std::norm(s);
                total += mag2 * unit_weight(a, b, c) * dk;
                if (a == 0 || b == 0 || c == 0 || a == m - 1 || b == m - 1 || c == m - 1)
                    boundary = std::max(boundary, std::sqrt(mag2));
            }
    tail_warning = v0 > 0.0 && boundary > 1e-8 * v0;
    return total / (2.0 * std::pow(2.0 * kPi, 3));
}

double mu_realspace_raw(const Field3& f)
{
    const int n = f.grid.n;
    const double h = f.grid.h();
    const double w = f.cell_volume();
    std::vector<Vec3> x;
    std::vector<double> mass;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (f.values[i] != 0.0) {
            x.push_back(f.node(i));
            mass.push_back(w * f.values[i]);
        }
    const double self = coulomb_cell_integral(Vec3::Zero(), h, Vec3::Zero(), 16);
    // Offsets are integer multiples of h: tabulate 1 / |d| by squared integer length.
    std::vector<double> inv(3 * n * n + 1, 0.0);
    for (std::size_t q = 1; q < inv.size(); ++q) inv[q] = 1.0 / (8.0 * kPi * h * std::sqrt(static_cast<double>(q)));
    std::vector<std::array<int, 3>> idx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        for (int d = 0; d < 3; ++d) idx[i][d] = static_cast<int>(std::lround((x[i][d] + f.grid.radius) / h - 0.5));
    double offdiag = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        diag += mass[i] * mass[i] / w * self;
        double row = 0.0;
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const int d0 = idx[i][0] - idx[j][0], d1 = idx[i][1] - idx[j][1], d2 = idx[i][2] - idx[j][2];
            row += mass[j] * inv[d0 * d0 + d1 * d1 + d2 * d2];
        }
        offdiag += mass[i] * row;
    }
    // Pairs (i, j) and (j, i) are equal by construction of the table.
    return 2.0 * offdiag + diag;
}

// The 2x coarsened field is far from the asymptotic regime at desk resolutions, so the
// coarse value only sizes the O(h^2) error bar.
MuResult finish_mu(double raw, double coarse, const char* method)
{
    MuResult r;
    r.method = method;
    r.raw = raw;
    r.value = raw;
    r.error = std::abs(raw - coarse) / 3.0;
    return r;
}

} // namespace

MuResult mu_fourier(const Field3& v_eff, const MuOptions& options)
{
    const int n = v_eff.grid.n;
    int k = options.k_cells > 0 ? options.k_cells : 4 * n;
    if (k % 2 != 0) throw InputError("mu_fourier needs an even number of k-cells");
    bool warn = false;
    const double raw = mu_fourier_raw(v_eff, k, warn);
    double coarse = raw;
    const bool extrapolate = options.error_estimate && n % 2 == 0;
    if (extrapolate) {
        bool unused = false;
        coarse = mu_fourier_raw(coarsen(v_eff), k / 2 + (k / 2) % 2, unused);
    }
    MuResult r = finish_mu(raw, coarse, "fourier");
    r.tail_warning = warn;
    if (r.value < 0.0) throw InvariantError("mu_non_negative", "mu_fourier returned a negative value");
    return r;
}

MuResult mu_realspace(const Field3& v_eff, const MuOptions& options)
{
    const int n = v_eff.grid.n;
    const double raw = mu_realspace_raw(v_eff);
    const bool extrapolate = options.error_estimate && n % 2 == 0;
    const double coarse = extrapolate ? mu_realspace_raw(coarsen(v_eff)) : raw;
    MuResult r = finish_mu(raw, coarse, "realspace");
    if (r.value < 0.0) throw InvariantError("mu_non_negative", "mu_realspace returned a negative value");
    return r;
}

// ------------------------------------------------------------------------ gamma

namespace {

struct ShellRule {
    std::vector<Vec3> points;
    std::vector<double> weights;
};

void add_shell(ShellRule& rule, double r0, double r1, int radial, int polar, int azimuthal)
{
    const QuadratureRule rr = gauss_legendre(radial, r0, r1);
    const QuadratureRule ct = gauss_legendre(polar, -1.0, 1.0);
    for (std::size_t i = 0; i < rr.size(); ++i)
        for (std::size_t j = 0; j < ct.size(); ++j)
            for (int k = 0; k < azimuthal; ++k) {
                const double r = rr.nodes[i];
                const double c = ct.nodes[j];
                const double s = std::sqrt(1.0 - c * c);
                const double phi = 2.0 * kPi * (k + 0.5) / azimuthal;
                rule.points.emplace_back(r * s * std::cos(phi), r * s * std::sin(phi), r * c);
                rule.weights.push_back(rr.weights[i] * r * r * ct.weights[j] * 2.0 * kPi / azimuthal);
            }
}

} // namespace

GammaResult gamma(const PotentialModel& v, const ScatteringSolution6& sol, const GammaOptions& options)
{
    GammaResult out;
    const double rv = v.support_radius();
    out.z_radius = options.z_radius > 0.0 ? options.z_radius : 4.0 * rv;
    if (out.z_radius < 4.0 * rv * (1.0 - 1e-12)) throw InputError("gamma needs Z >= 4 R_V");
    if (v.is_zero() || sol.is_zero()) return out;

    const double z = out.z_radius;
    ShellRule rule;
    add_shell(rule, 0.0, rv, 5, 6, 12);
    add_shell(rule, rv, 2.0 * rv, 4, 6, 12);
    add_shell(rule, 2.0 * rv, 3.0 * rv, 3, 4, 8);
    add_shell(rule, 3.0 * rv, z, 3, 4, 8);
    ShellRule sphere;
    {
        const QuadratureRule ct = gauss_legendre(4, -1.0, 1.0);
        for (std::size_t j = 0; j < ct.size(); ++j)
            for (int k = 0; k < 8; ++k) {
                const double c = ct.nodes[j], s = std::sqrt(1.0 - c * c), phi = 2.0 * kPi * (k + 0.5) / 8;
                sphere.points.emplace_back(z * s * std::cos(phi), z * s * std::sin(phi), z * c);
            }
    }

    // Distinct 3-D nodes entering either slot of a support cell.
    const int n = sol.grid().n;
    std::map<int, std::size_t> slot;
    std::vector<int> nodes;
    auto key3 = [n](const std::array<std::uint8_t, 6>& c, int off) { return (c[off] * n + c[off + 1]) * n + c[off + 2]; };
    for (const auto& c : sol.cells())
        for (int off : {0, 3})
            if (slot.emplace(key3(c, off), 0).second) nodes.push_back(key3(c, off));
    std::sort(nodes.begin(), nodes.end());
    for (std::size_t i = 0; i < nodes.size(); ++i) slot[nodes[i]] = i;

    const std::size_t nz = rule.points.size();
    Eigen::MatrixXd omega(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(nz));
    std::vector<double> fit(nodes.size(), 0.0);
    parallel_for(nodes.size(), options.workers, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) {
            const int k = nodes[i];
            const Vec3 x(sol.grid().coordinate(k / (n * n)), sol.grid().coordinate(k / n % n), sol.grid().coordinate(k % n));
            for (std::size_t j = 0; j < nz; ++j) omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sol.omega_at(join(x, rule.points[j]));
            for (const Vec3& p : sphere.points) fit[i] = std::max(fit[i], sol.omega_at(join(x, p)) * std::pow(z, 4));
        }
    });
    for (Eigen::Index i = 0; i < omega.size(); ++i)
        if (omega.data()[i] < -1e-12 || omega.data()[i] > 1.0 + 1e-10)
            throw InvariantError("omega_bounds", "omega outside [0, 1] in the gamma quadrature");

    const Eigen::Map<const Eigen::VectorXd> wz(rule.weights.data(), static_cast<Eigen::Index>(nz));
    const double w6 = std::pow(sol.grid().h(), 6);
    double cross = 0.0, square = 0.0, mass = 0.0;
    for (std::size_t j = 0; j < sol.size(); ++j) {
        const auto& c = sol.cells()[j];
        const Eigen::Index a = static_cast<Eigen::Index>(slot[key3(c, 0)]);
        const Eigen::Index b = static_cast<Eigen::Index>(slot[key3(c, 3)]);
        const double vw = w6 * sol.potential()[static_cast<Eigen::Index>(j)];
        cross += vw * (omega.row(a).cwiseProduct(omega.row(b))).dot(wz.transpose());
        square += 0.5 * vw * omega.row(b).cwiseAbs2().dot(wz.transpose());
        mass += vw;
    }
    out.cross_term = cross;
    out.square_term = square;
    out.value = cross + square;
    out.c_fit = *std::max_element(fit.begin(), fit.end());
    out.tail_bound = 1.5 * mass * out.c_fit * out.c_fit * 4.0 * kPi / (5.0 * std::pow(z, 5));
    out.error = out.tail_bound;
    if (out.tail_bound > options.max_tail_fraction * out.value)
        throw InvariantError("gamma_tail", "gamma tail bound exceeds the allowed fraction; retry with a larger Z");
    return out;
}

} // namespace gp3
