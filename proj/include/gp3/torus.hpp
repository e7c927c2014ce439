#pragma once

#include "gp3/cg.hpp"
#include "gp3/potential.hpp"

#include <Eigen/Core>

#include <array>
#include <map>
#include <vector>

namespace gp3 {

/// Momenta k = 2 pi n with |n|_inf <= m_c.
class ModeSet {
public:
    explicit ModeSet(int cutoff);

    int cutoff() const { return m_; }
    int size() const { return static_cast<int>(modes_.size()); }
    const Eigen::Vector3i& mode(int i) const { return modes_[i]; }
    /// Index of integer mode n, or -1 if outside the set.
    int index(const Eigen::Vector3i& n) const;
    int zero() const { return index(Eigen::Vector3i::Zero()); }
    Vec3 momentum(int i) const { return 2.0 * kPi * modes_[i].cast<double>(); }
    double k2(int i) const { return momentum(i).squaredNorm(); }

private:
    int m_;
    int side_;
    std::vector<Eigen::Vector3i> modes_;
};

struct TorusOptions {
    double particles = 64.0; ///< N
    int cutoff = 1;          ///< m_c
    double low_momentum = 0.0; ///< K
    CgOptions cg{1e-11, 1000};
    FourierOptions fourier{16, FourierMethod::automatic, false};
};

/// Three-particle states u_i u_j u_k on the truncated torus lattice, grouped in sectors
/// of fixed total momentum i + j + k. Full fields are indexed (i * M + j) * M + k.
class TorusModel {
public:
    using Field = Eigen::VectorXcd;

    TorusModel(const PotentialModel& v, const TorusOptions& options);

    const ModeSet& modes() const { return modes_; }
    double particles() const { return n_; }
    double low_momentum() const { return k_; }
    std::size_t dimension() const { return static_cast<std::size_t>(m3_); }
    std::size_t state(int i, int j, int k) const
    {
        return (static_cast<std::size_t>(i) * modes_.size() + j) * modes_.size() + k;
    }
    std::array<int, 3> modes_of(std::size_t s) const;
    Field basis(int i, int j, int k) const;

    /// <u_i u_j u_k, V_N u_l u_m u_n> from the Fourier table.
    cplx matrix_element(int i, int j, int k, int l, int m, int n) const;
    /// True if all three modes are nonzero (range of Q^{x3}).
    bool excited(std::size_t s) const;
    bool low(std::size_t s) const;

    Field apply_kinetic(const Field& x) const;
    Field apply_potential(const Field& x) const;
    Field apply_hamiltonian(const Field& x) const;
    Field project_excited(const Field& x) const;
    Field project_low(const Field& x) const;
    /// Pseudo-inverse of Q(-Delta + V_N)Q applied to x.
    Field resolvent(const Field& x) const;
    /// W = V_N - V_N R V_N.
    Field apply_renormalized(const Field& x) const;
    Field apply_T(const Field& x) const;
    Field apply_T_adjoint(const Field& x) const;
    Field apply_tilde_potential(const Field& x) const;

    /// |H psi - T^dag(-Delta + V~)T psi| / |H psi|.
    double block_identity_residual(const Field& psi) const;
    /// Random field supported on the sectors that contain low-momentum states, where T != 1.
    Field random_low_sector_field(std::uint64_t seed) const;
    Field random_field(std::uint64_t seed) const;

    /// Worst relative residual of the last resolvent solves.
    double last_cg_residual() const { return last_residual_; }

private:
    struct Sector {
        Eigen::Vector3i total;
        std::vector<std::size_t> states;
        std::vector<std::int64_t> code;     // lattice code of (j, k)
        std::vector<double> kinetic;
        std::vector<int> excited;           // positions of Q-states in `states`
        bool has_low = false;
    };

    PotentialModel v_;
    ModeSet modes_;
    double n_;
    double k_;
    CgOptions cg_;
    long m3_;
    int lattice_m_;
    std::array<std::int64_t, 6> stride_{};
    std::int64_t centre_ = 0;
    std::vector<cplx> table_; // N^-2 V^(-2 pi d / sqrt N) indexed by lattice code of d
    std::vector<Sector> sectors_;
    std::vector<int> sector_of_;
    std::vector<int> position_;
    std::vector<char> low_;
    mutable double last_residual_ = 0.0;

    std::int64_t code(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const;
    template <class Fn>
    Field per_sector(const Field& x, bool low_only, Fn&& fn) const;
    Eigen::VectorXcd sector_potential(const Sector& s, const Eigen::VectorXcd& x) const;
    Eigen::VectorXcd sector_resolvent(const Sector& s, const Eigen::VectorXcd& x) const;
};

struct LambdaTable {
    double particles = 0.0;
    double low_momentum = 0.0;
    /// lambda_{k,l}: keyed by (mode index of k, mode index of l).
    std::map<std::pair<int, int>, cplx> values;
    /// (T - 1)_{ijk,000} on excited states of the zero-momentum sector.
    std::vector<std::pair<std::array<int, 3>, cplx>> t_column;

    cplx at(int k, int l) const { return values.at({k, l}); }
};

/// lambda_{k,l} = (1/18) <u_0 u_l u_{k-l}, W (u_0 u_0 u_k + u_0 u_k u_0 + u_k u_0 u_0)> for |k| <= K.
LambdaTable lambda_table(const TorusModel& model);

/// mu_N = 9 N^4 sum_{|l| > K} |lambda_{0,l}|^2 / |l|^2.
double mu_N(const TorusModel& model, const LambdaTable& table);

/// |lambda_{0,l}| N^2 (1 + |l|^2 / N) for each l != 0.
std::vector<double> lambda_decay_constants(const TorusModel& model, const LambdaTable& table);
/// |(T-1)_{ijk,000}| N^2 s (1 + s / N)^2 with s = |i|^2 + |j|^2 + |k|^2.
std::vector<double> t_decay_constants(const TorusModel& model, const LambdaTable& table);

struct TorusRow {
    double particles = 0.0;
    int cutoff = 0;
    double low_momentum = 0.0;
    cplx lambda00;
    double coefficient = 0.0; ///< 6 N^2 Re lambda_00
    double b_m_reference = 0.0;
    double deviation = 0.0;
    double block_residual = 0.0;
    double mu_n = 0.0;
};

/// One row per N: renormalized coefficient against b_M, block residual on `trials`
/// random fields, and mu_N.
std::vector<TorusRow> bm_convergence(const PotentialModel& v, const std::vector<double>& particles,
                                     const TorusOptions& base, double b_m_reference, int trials = 20,
                                     std::uint64_t seed = 7);

} // namespace gp3
