#pragma once

#include "gp3/cg.hpp"
#include "gp3/common.hpp"
#include "gp3/potential.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <unordered_map>
#include <vector>

namespace gp3 {

/// Uniform cell-centred grid on the cube [-R, R]^D with n cells per side.
template <int D>
struct CubeGrid {
    int n = 0;
    double radius = 0.0;

    double h() const { return 2.0 * radius / n; }
    double coordinate(int i) const { return -radius + (i + 0.5) * h(); }
    std::size_t size() const
    {
        std::size_t s = 1;
        for (int d = 0; d < D; ++d) s *= static_cast<std::size_t>(n);
        return s;
    }
    /// Cell index containing coordinate x along one axis, or -1 outside.
    int locate(double x) const
    {
        const double u = (x + radius) / h();
        if (u < 0.0 || u >= n) return -1;
        return static_cast<int>(u);
    }
};

/// Scalar field sampled at the cell centres of a 3-D grid, row-major (x slowest).
struct Field3 {
    CubeGrid<3> grid;
    std::vector<double> values;

    Vec3 node(std::size_t i) const
    {
        const int n = grid.n;
        return Vec3(grid.coordinate(static_cast<int>(i / (n * n))), grid.coordinate(static_cast<int>(i / n % n)),
                    grid.coordinate(static_cast<int>(i % n)));
    }
    double cell_volume() const { return std::pow(grid.h(), 3); }
    double integral() const;
};

/// Nystrom discretisation of convolution with kernel6 restricted to a set of grid cells:
/// (K x)_i = sum_{j != i} h^6 kernel6(y_i - y_j) x_j + cell_average6(h) x_i.
/// Off-diagonal entries are looked up from integer offset tables.
class SupportKernel6 {
public:
    SupportKernel6(const CubeGrid<6>& grid, std::vector<std::array<std::uint8_t, 6>> cells, int workers = 1);

    std::size_t size() const { return cells_.size(); }
    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
    double diagonal() const { return diagonal_; }

private:
    CubeGrid<6> grid_;
    std::vector<std::array<std::uint8_t, 6>> cells_;
    std::vector<std::array<std::uint16_t, 3>> codes_; // per-component pair (a_c, b_c)
    std::vector<std::int32_t> pair_table_;             // t(u, v) = u^2 - uv + v^2 between pair codes
    std::vector<double> weight_;                       // h^6 kernel6 as a function of the integer form q
    double diagonal_;
    int workers_;
};

struct Scatter6Options {
    int n = 12;
    /// Second resolution for the grid-convergence estimate; 0 disables it.
    int coarse_n = 0;
    CgOptions cg{1e-10, 500};
    int workers = 1;
};

/// Density formulation of (-2 Delta_M + V) omega = V on the support grid of V:
/// rho = V (1 - omega), omega = K6 rho.
class ScatteringSolution6 {
public:
    ScatteringSolution6() = default;

    const CubeGrid<6>& grid() const { return grid_; }
    std::size_t size() const { return cells_.size(); }
    const std::vector<std::array<std::uint8_t, 6>>& cells() const { return cells_; }
    Vec6 node(std::size_t i) const;

    const Eigen::VectorXd& potential() const { return v_; }
    const Eigen::VectorXd& density() const { return rho_; }
    const Eigen::VectorXd& omega_nodes() const { return omega_; }

    /// h^6 sum rho on the solve grid.
    double b_M_grid() const { return b_grid_; }
    /// Richardson-extrapolated b_M when a coarse solve was requested, else b_M_grid().
    double b_M() const { return b_extrapolated_; }
    double b_M_error() const { return b_error_; }
    std::optional<double> b_M_coarse() const { return b_coarse_; }
    const CgResult& cg() const { return cg_; }
    double coupling() const { return coupling_; }
    bool is_zero() const { return rho_.size() == 0 || rho_.isZero(0.0); }

    /// Discrete <V, K6 V> on the solve grid (second Born coefficient).
    double born_second() const { return born_second_; }

    /// omega(x) = int kernel6(x - y) rho(y) dy; the cell containing x is integrated exactly.
    double omega_at(const Vec6& x) const;

    /// V_eff(a) = int rho(a, b) db on the 3-D grid of the first factor.
    Field3 effective_potential() const;

    /// Binary density file: "GP3RHO1\0", u64 n, f64 h, 6 x f64 centre, n^6 f64 rho.
    void save(const std::filesystem::path& path) const;
    static ScatteringSolution6 load(const std::filesystem::path& path, const PotentialModel& v, int workers = 1);

    friend ScatteringSolution6 solve_omega(const PotentialModel& v, const Scatter6Options& options);

private:
    CubeGrid<6> grid_;
    std::vector<std::array<std::uint8_t, 6>> cells_;
    Eigen::VectorXd v_, rho_, omega_;
    double b_grid_ = 0.0, b_extrapolated_ = 0.0, b_error_ = 0.0, born_second_ = 0.0;
    std::optional<double> b_coarse_;
    double coupling_ = 0.0;
    CgResult cg_;
    Eigen::Matrix<double, Eigen::Dynamic, 6> coords_; // support nodes, one row each
    Eigen::VectorXd far_weight_;                     // h^6 c6 rho
    std::unordered_map<std::uint64_t, std::size_t> lookup_;

    void finish(const PotentialModel& v, const SupportKernel6& kernel);
};

/// Cells of the n^6 grid on [-R_V, R_V]^6 whose centre has V > 0, with V at the centres.
std::vector<std::array<std::uint8_t, 6>> support_cells(const PotentialModel& v, const CubeGrid<6>& grid,
                                                       std::vector<double>* values = nullptr);

ScatteringSolution6 solve_omega(const PotentialModel& v, const Scatter6Options& options = {});

} // namespace gp3
