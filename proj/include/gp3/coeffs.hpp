#pragma once

#include "gp3/potential.hpp"
#include "gp3/scatter6.hpp"

#include <string>

namespace gp3 {

struct MuResult {
    double value = 0.0;
    double error = 0.0;
    std::string method;
    double raw = 0.0;
    bool tail_warning = false;
};

struct MuOptions {
    /// k-cells per dimension over the Brillouin cube (even); 0 picks 4n.
    int k_cells = 0;
    /// Size the error bar from the 2x coarsened field (requires even n).
    bool error_estimate = true;
};

/// mu = (1 / (2 (2 pi)^3)) int |V_eff^(k)|^2 / |k|^2 dk with the band-limited transform of
/// the grid field. Each k-cell weight is the exact integral of |k|^-2 over the cell.
MuResult mu_fourier(const Field3& v_eff, const MuOptions& options = {});

/// mu = sum_{i != j} w^2 V_i V_j / (8 pi |x_i - x_j|) + sum_i w V_i^2 int_cell 1 / (8 pi |z|).
MuResult mu_realspace(const Field3& v_eff, const MuOptions& options = {});

/// Average 2x2x2 blocks; the integral is preserved.
Field3 coarsen(const Field3& f);

/// The omega-free marginal int V(a, b) db on the scatter6 grid of V.
Field3 potential_marginal(const PotentialModel& v, int n);

struct GammaOptions {
    /// Radius of the z ball; 0 picks 4 R_V.
    double z_radius = 0.0;
    double max_tail_fraction = 0.1;
    int workers = 1;
};

struct GammaResult {
    double value = 0.0;
    double error = 0.0;
    double z_radius = 0.0;
    double tail_bound = 0.0;
    double c_fit = 0.0;
    double cross_term = 0.0;  // int V(x,y) omega(x,z) omega(y,z)
    double square_term = 0.0; // (1/2) int V(x,y) omega(y,z)^2
};

GammaResult gamma(const PotentialModel& v, const ScatteringSolution6& sol, const GammaOptions& options = {});

} // namespace gp3
