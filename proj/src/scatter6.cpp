#include "gp3/scatter6.hpp"

#include "gp3/greens.hpp"
#include "gp3/parallel.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace gp3 {

double Field3::integral() const
{
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell_volume();
}

namespace {
constexpr char kRhoMagic[8] = {'G', 'P', '3', 'R', 'H', 'O', '1', '\0'};
static_assert(std::endian::native == std::endian::little, "density files are little-endian");

std::size_t flat_index(const std::array<std::uint8_t, 6>& c, int n)
{
    std::size_t idx = 0;
    for (int d = 0; d < 6; ++d) idx = idx * n + c[d];
    return idx;
}
} // namespace

// ------------------------------------------------------------------ SupportKernel6

SupportKernel6::SupportKernel6(const CubeGrid<6>& grid, std::vector<std::array<std::uint8_t, 6>> cells, int workers)
    : grid_(grid), cells_(std::move(cells)), workers_(workers)
{
    const int n = grid_.n;
    if (n > 16) throw InputError("support kernel supports at most 16 cells per side");
    const int n2 = n * n;
    codes_.resize(cells_.size());
    for (std::size_t i = 0; i < cells_.size(); ++i)
        for (int c = 0; c < 3; ++c) codes_[i][c] = static_cast<std::uint16_t>(cells_[i][c] * n + cells_[i][3 + c]);
    pair_table_.resize(static_cast<std::size_t>(n2) * n2);
    for (int u = 0; u < n2; ++u)
        for (int w = 0; w < n2; ++w) {
            const int da = u / n - w / n;
            const int db = u % n - w % n;
            pair_table_[static_cast<std::size_t>(u) * n2 + w] = da * da - da * db + db * db;
        }
    const double h = grid_.h();
    diagonal_ = cell_average6(h);
    const int qmax = 9 * (n - 1) * (n - 1) + 1;
    weight_.resize(qmax);
    weight_[0] = diagonal_;
    // |M^{-1} h d|^2 = (4/3) h^2 q for integer offsets d.
    for (int q = 1; q < qmax; ++q) weight_[q] = std::pow(h, 6) * c6() / std::pow(4.0 / 3.0 * h * h * q, 2);
}

void SupportKernel6::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const
{
    const std::size_t s = cells_.size();
    y.resize(static_cast<Eigen::Index>(s));
    const int n2 = grid_.n * grid_.n;
    std::vector<std::uint16_t> c0(s), c1(s), c2(s);
    for (std::size_t j = 0; j < s; ++j) {
        c0[j] = codes_[j][0];
        c1[j] = codes_[j][1];
        c2[j] = codes_[j][2];
    }
    parallel_for(s, workers_, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::int32_t* t0 = &pair_table_[static_cast<std::size_t>(codes_[i][0]) * n2];
            const std::int32_t* t1 = &pair_table_[static_cast<std::size_t>(codes_[i][1]) * n2];
            const std::int32_t* t2 = &pair_table_[static_cast<std::size_t>(codes_[i][2]) * n2];
            double acc = 0.0;
            for (std::size_t j = 0; j < s; ++j) acc += weight_[t0[c0[j]] + t1[c1[j]] + t2[c2[j]]] * x[j];
            y[i] = acc;
        }
    });
}

// ------------------------------------------------------------- ScatteringSolution6

std::vector<std::array<std::uint8_t, 6>> support_cells(const PotentialModel& v, const CubeGrid<6>& grid,
                                                       std::vector<double>* values)
{
    std::vector<std::array<std::uint8_t, 6>> cells;
    if (values) values->clear();
    if (v.is_zero()) return cells;
    const int n = grid.n;
    std::array<std::uint8_t, 6> idx{};
    Vec6 x;
    const std::size_t total = grid.size();
    for (std::size_t cell = 0; cell < total; ++cell) {
        std::size_t rem = cell;
        for (int d = 5; d >= 0; --d) {
            idx[d] = static_cast<std::uint8_t>(rem % n);
            rem /= n;
            x[d] = grid.coordinate(idx[d]);
        }
        const double val = v(x);
        if (val > 0.0) {
            cells.push_back(idx);
            if (values) values->push_back(val);
        }
    }
    return cells;
}

Vec6 ScatteringSolution6::node(std::size_t i) const
{
    Vec6 x;
    for (int d = 0; d < 6; ++d) x[d] = grid_.coordinate(cells_[i][d]);
    return x;
}

void ScatteringSolution6::finish(const PotentialModel& v, const SupportKernel6& kernel)
{
    coupling_ = v.coupling();
    const double w = std::pow(grid_.h(), 6);
    const double vmax = v_.size() ? v_.maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < rho_.size(); ++i) {
        if (rho_[i] < -1e-10 * vmax)
            throw InvariantError("density_non_negative", "rho < 0 at a support node: quadrature failure");
        if (rho_[i] > v_[i] * (1.0 + 1e-10) + 1e-300)
            throw InvariantError("density_below_potential", "rho > V at a support node");
    }
    kernel.apply(rho_, omega_);
    for (Eigen::Index i = 0; i < omega_.size(); ++i)
        if (omega_[i] < -1e-10 || omega_[i] > 1.0 + 1e-10)
            throw InvariantError("omega_bounds", "omega outside [0, 1] at a support node");
    b_grid_ = w * rho_.sum();
    coords_.resize(static_cast<Eigen::Index>(cells_.size()), 6);
    lookup_.clear();
    for (std::size_t j = 0; j < cells_.size(); ++j) {
        coords_.row(static_cast<Eigen::Index>(j)) = node(j).transpose();
        lookup_.emplace(flat_index(cells_[j], grid_.n), j);
    }
    far_weight_ = w * c6() * rho_;
    b_extrapolated_ = b_grid_;
    Eigen::VectorXd kv;
    kernel.apply(v_, kv);
    born_second_ = w * v_.dot(kv);
}

double ScatteringSolution6::omega_at(const Vec6& x) const
{
    if (cells_.empty()) return 0.0;
    const double h = grid_.h();
    std::uint64_t key = 0;
    bool inside = true;
    for (int d = 0; d < 6; ++d) {
        const int i = grid_.locate(x[d]);
        inside = inside && i >= 0;
        key = key * grid_.n + static_cast<std::uint64_t>(std::max(i, 0));
    }
    std::size_t home = cells_.size();
    if (inside) {
        const auto it = lookup_.find(key);
        if (it != lookup_.end()) home = it->second;
    }
    const std::size_t s = cells_.size();
    auto partial = [&](std::size_t begin, std::size_t end) {
        double acc = 0.0;
        const double* a0 = coords_.col(0).data();
        const double* a1 = coords_.col(1).data();
        const double* a2 = coords_.col(2).data();
        const double* b0 = coords_.col(3).data();
        const double* b1 = coords_.col(4).data();
        const double* b2 = coords_.col(5).data();
        const double* w = far_weight_.data();
        for (std::size_t j = begin; j < end; ++j) {
            const double da0 = x[0] - a0[j], da1 = x[1] - a1[j], da2 = x[2] - a2[j];
            const double db0 = x[3] - b0[j], db1 = x[4] - b1[j], db2 = x[5] - b2[j];
            const double q = (4.0 / 3.0)
                             * (da0 * da0 + da1 * da1 + da2 * da2 - da0 * db0 - da1 * db1 - da2 * db2 + db0 * db0
                                + db1 * db1 + db2 * db2);
            acc += w[j] / (q * q);
        }
        return acc;
    };
    if (home == s) return partial(0, s);
    return partial(0, home) + partial(home + 1, s) + rho_[home] * cell_integral6(node(home), h, x);
}

Field3 ScatteringSolution6::effective_potential() const
{
    Field3 f;
    f.grid = {grid_.n, grid_.radius};
    const int n = grid_.n;
    f.values.assign(static_cast<std::size_t>(n) * n * n, 0.0);
    const double w = std::pow(grid_.h(), 3);
    for (std::size_t j = 0; j < cells_.size(); ++j) {
        const std::size_t a = (static_cast<std::size_t>(cells_[j][0]) * n + cells_[j][1]) * n + cells_[j][2];
        f.values[a] += w * rho_[j];
    }
    return f;
}

void ScatteringSolution6::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write density file " + path.string());
    const std::uint64_t n = static_cast<std::uint64_t>(grid_.n);
    const double h = grid_.h();
    const double center[6] = {0, 0, 0, 0, 0, 0};
    std::vector<double> dense(grid_.size(), 0.0);
    for (std::size_t j = 0; j < cells_.size(); ++j) dense[flat_index(cells_[j], grid_.n)] = rho_[j];
    out.write(kRhoMagic, 8);
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&h), 8);
    out.write(reinterpret_cast<const char*>(center), sizeof(center));
    out.write(reinterpret_cast<const char*>(dense.data()), static_cast<std::streamsize>(dense.size() * 8));
}

ScatteringSolution6 ScatteringSolution6::load(const std::filesystem::path& path, const PotentialModel& v, int workers)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open density file " + path.string());
    char magic[8];
    std::uint64_t n = 0;
    double h = 0.0, center[6];
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&n), 8);
    in.read(reinterpret_cast<char*>(&h), 8);
    in.read(reinterpret_cast<char*>(center), sizeof(center));
    if (!in || std::memcmp(magic, kRhoMagic, 8) != 0) throw InputError("bad magic in density file");
    if (n < 2 || n > 16) throw InputError("density file resolution out of range");
    for (double c : center)
        if (c != 0.0) throw InputError("density file grid must be centred at the origin");

    ScatteringSolution6 sol;
    sol.grid_ = {static_cast<int>(n), 0.5 * h * static_cast<double>(n)};
    if (std::abs(sol.grid_.radius - v.support_radius()) > 1e-9 * v.support_radius())
        throw InputError("density file grid does not match the potential support");
    std::vector<double> dense(sol.grid_.size());
    in.read(reinterpret_cast<char*>(dense.data()), static_cast<std::streamsize>(dense.size() * 8));
    if (!in) throw InputError("truncated density file");

    std::vector<double> values;
    sol.cells_ = support_cells(v, sol.grid_, &values);
    sol.v_ = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    sol.rho_.resize(static_cast<Eigen::Index>(sol.cells_.size()));
    double inside = 0.0, total = 0.0;
    for (std::size_t j = 0; j < sol.cells_.size(); ++j) {
        sol.rho_[j] = dense[flat_index(sol.cells_[j], sol.grid_.n)];
        inside += std::abs(sol.rho_[j]);
    }
    for (double d : dense) total += std::abs(d);
    if (total > inside) throw InputError("density file has mass outside the support of V");
    SupportKernel6 kernel(sol.grid_, sol.cells_, workers);
    sol.cg_.converged = true;
    sol.finish(v, kernel);
    return sol;
}

ScatteringSolution6 solve_omega(const PotentialModel& v, const Scatter6Options& options)
{
    if (options.n < 6) throw InputError("scatter6 grid needs n >= 6");
    ScatteringSolution6 sol;
    sol.grid_ = {options.n, v.support_radius()};
    sol.coupling_ = v.coupling();
    std::vector<double> values;
    sol.cells_ = support_cells(v, sol.grid_, &values);
    sol.v_ = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    if (sol.cells_.empty()) {
        sol.cg_.converged = true;
        return sol;
    }

    SupportKernel6 kernel(sol.grid_, sol.cells_, options.workers);
    const Eigen::VectorXd sqrt_v = sol.v_.cwiseSqrt();
    Eigen::VectorXd tmp;
    auto apply = [&](const Eigen::VectorXd& u, Eigen::VectorXd& out) {
        kernel.apply(sqrt_v.cwiseProduct(u), tmp);
        out = u + sqrt_v.cwiseProduct(tmp);
    };
    Eigen::VectorXd u = Eigen::VectorXd::Zero(sqrt_v.size());
    sol.cg_ = conjugate_gradient(apply, sqrt_v, u, options.cg);
    if (!sol.cg_.converged)
        throw InvariantError("cg_convergence", "scatter6 CG did not reach the requested residual within the iteration cap");
    sol.rho_ = sqrt_v.cwiseProduct(u);
    sol.finish(v, kernel);

    if (options.coarse_n > 0) {
        Scatter6Options coarse = options;
        coarse.n = options.coarse_n;
        coarse.coarse_n = 0;
        const ScatteringSolution6 c = solve_omega(v, coarse);
        const double n2 = static_cast<double>(options.n) * options.n;
        const double c2 = static_cast<double>(coarse.n) * coarse.n;
        sol.b_coarse_ = c.b_M_grid();
        sol.b_extrapolated_ = sol.b_grid_ + (sol.b_grid_ - c.b_M_grid()) * c2 / (n2 - c2);
        sol.b_error_ = std::abs(sol.b_grid_ - c.b_M_grid());
    }
    return sol;
}

} // namespace gp3
