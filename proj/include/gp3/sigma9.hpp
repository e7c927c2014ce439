#pragma once

#include "gp3/cg.hpp"
#include "gp3/potential.hpp"
#include "gp3/scatter6.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gp3 {

/// V(x1,x2) + V(x1,x3) + V(x2,x3) + V(x2-x1, x3-x1).
class NinePotential {
public:
    explicit NinePotential(PotentialModel v) : v_(std::move(v)) {}

    double operator()(const Vec9& x) const;
    /// Summand s in 0..3 in the order above.
    double summand(int s, const Vec9& x) const;
    const PotentialModel& potential() const { return v_; }

private:
    PotentialModel v_;
};

/// Smooth cutoff on R^6: product of one-dimensional steps, 1 for |x|_inf <= 1/3 and 0 for
/// |x|_inf >= 1/2.
double cutoff6(const Vec6& x);

/// f(x1,x2,x3) = V(x1,x2) omega(x2,x3), optionally times cutoff6((x2, x3) / ell).
class SourceF {
public:
    SourceF(const PotentialModel& v, const ScatteringSolution6& sol, std::optional<double> ell = std::nullopt)
        : v_(v), sol_(sol), ell_(ell)
    {
    }

    double operator()(const Vec9& x) const;
    /// omega(x2, x3), with the cutoff if one is set.
    double correlation(const Vec3& x2, const Vec3& x3) const;
    const PotentialModel& potential() const { return v_; }
    const ScatteringSolution6& solution() const { return sol_; }
    bool is_zero() const { return v_.is_zero() || sol_.is_zero(); }

private:
    const PotentialModel& v_;
    const ScatteringSolution6& sol_;
    std::optional<double> ell_;
};

struct McOptions {
    std::uint64_t born1_samples = 100000;
    std::uint64_t born2_samples = 20000; ///< outer samples per summand
    int inner_samples = 4;               ///< per inner (G f) estimate
    std::uint64_t seed = 1;
    int workers = 1;
    double r0 = 0.0;          ///< displacement proposal scale; 0 picks R_V
    double tail_scale = 0.0;  ///< free-coordinate proposal scale; 0 picks R_V
    double weight_abort = 1e6;
};

struct TermEstimate {
    std::string term;
    std::uint64_t samples = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double max_weight = 0.0;
    std::uint64_t seed = 0;
};

struct Born2Estimate {
    TermEstimate total;
    std::array<TermEstimate, 4> summands;
};

/// B1 = <f, G9 f>.
TermEstimate born1(const SourceF& f, const McOptions& options = {});
/// B2 = <G9 f, VV G9 f>, one estimate per summand of VV.
Born2Estimate born2(const SourceF& f, const McOptions& options = {});

struct SigmaEstimate {
    TermEstimate b1;
    Born2Estimate b2;
    double lower = 0.0; ///< B1 - B2
    double upper = 0.0; ///< B1
    double value = 0.0; ///< midpoint
    double error = 0.0; ///< half-width plus Monte-Carlo standard errors
    std::vector<TermEstimate> diagnostics() const;
};

/// Two-term Born bracket B1 - B2 <= sigma <= B1.
SigmaEstimate sigma_bracket(const PotentialModel& v, const ScatteringSolution6& sol, const McOptions& options = {});

struct SigmaGridOptions {
    int n = 6;          ///< interior nodes per dimension
    double box = 0.0;   ///< half-width L, fixed across the ell ladder; 0 picks 1.5 R_V
    CgOptions cg{1e-10, 4000};
    int workers = 1;
    double memory_budget = 4.0e9; ///< bytes
};

struct SigmaGridResult {
    double ell = 0.0;
    double box = 0.0;
    double h = 0.0;
    int n = 0;
    double sigma = 0.0;          ///< <f_ell, eta>
    double bound_sigma = 0.0;    ///< <f_ell, beta>, beta = A^{-1} f_ell
    double q_zero = 0.0;         ///< Q(0)
    double q_eta = 0.0;          ///< Q(eta)
    double audit_relative = 0.0; ///< |Q(0) - Q(eta) - sigma| / sigma
    double max_bound_violation = 0.0;
    CgResult cg;
    CgResult cg_bound;
};

/// Bytes needed by sigma_grid at n interior nodes per dimension.
double sigma_grid_memory(int n);

/// Dirichlet finite-difference solve of (-2 Delta_{M_*} + VV) eta = f_ell on [-L, L]^9.
SigmaGridResult sigma_grid(const PotentialModel& v, const ScatteringSolution6& sol, double ell,
                           const SigmaGridOptions& options = {});

struct SigmaLadder {
    std::vector<SigmaGridResult> rungs;
    double extrapolated = 0.0;
    double error = 0.0;
    std::optional<double> rate; ///< fitted p in sigma_ell = sigma - c ell^-p
};

/// sigma_grid along a doubling ell ladder, extrapolated in ell. The error combines the
/// extrapolation step with a resolution comparison at n - 1.
SigmaLadder sigma_grid_ladder(const PotentialModel& v, const ScatteringSolution6& sol, const std::vector<double>& ells,
                              const SigmaGridOptions& options = {}, bool resolution_check = true);

} // namespace gp3
