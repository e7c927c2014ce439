#pragma once

#include "gp3/common.hpp"
#include "gp3/rng.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gp3 {

/// A base interaction profile on R^6 = R^3 x R^3, the pair of relative coordinates (a, b).
class Profile {
public:
    virtual ~Profile() = default;

    virtual double operator()(const Vec6& x) const = 0;
    /// Profile vanishes for |x| >= support_radius().
    virtual double support_radius() const = 0;
    virtual double integral() const = 0;
    /// Draw a point with density proportional to the profile.
    virtual Vec6 sample(Rng& rng) const = 0;
    /// 6-D Fourier transform as a function of |k| for radial profiles.
    virtual std::optional<double> radial_transform(double k) const
    {
        (void)k;
        return std::nullopt;
    }
    virtual std::string name() const = 0;
};

/// e * exp(-1 / (1 - (r/r0)^2)) for r = |(a,b)| < r0, zero otherwise. Peak value 1.
class BumpProfile final : public Profile {
public:
    explicit BumpProfile(double radius = 1.0);

    double operator()(const Vec6& x) const override { return radial(x.norm()); }
    double radial(double r) const;
    double support_radius() const override { return radius_; }
    double integral() const override;
    Vec6 sample(Rng& rng) const override;
    std::optional<double> radial_transform(double k) const override;
    std::string name() const override { return "bump"; }

private:
    double radius_;
    double radial_peak_; // max of r^5 * bump(r), rejection envelope
    mutable std::vector<double> table_; // transform samples on a uniform |k| grid
    mutable double table_step_ = 0.0;
    double transform_direct(double k) const;
};

/// Sampled profile on the node grid -R + i*2R/(n-1), multilinear in between and zero
/// outside the node cube. support_radius() is the farthest point of any nonzero cell.
class TableProfile final : public Profile {
public:
    TableProfile(int points_per_dim, double radius, std::vector<double> values);

    double operator()(const Vec6& x) const override;
    double support_radius() const override { return radius_; }
    double integral() const override;
    Vec6 sample(Rng& rng) const override;
    std::string name() const override { return "table"; }

    int points_per_dim() const { return n_; }
    const std::vector<double>& values() const { return values_; }

private:
    int n_;
    double radius_;
    double step_;
    std::vector<double> values_;
    std::vector<double> cell_max_;
    std::vector<double> cell_cdf_;
    std::vector<std::size_t> cell_index_;
    double integral_ = 0.0;
};

/// Arbitrary callable profile; `bound` must dominate the function for sampling.
class FunctionProfile final : public Profile {
public:
    FunctionProfile(std::function<double(const Vec6&)> fn, double support_radius, double bound,
                    std::string label = "function");

    double operator()(const Vec6& x) const override
    {
        return x.norm() >= radius_ ? 0.0 : fn_(x);
    }
    double support_radius() const override { return radius_; }
    double integral() const override;
    Vec6 sample(Rng& rng) const override;
    std::string name() const override { return label_; }

private:
    std::function<double(const Vec6&)> fn_;
    double radius_;
    double bound_;
    std::string label_;
    mutable std::optional<double> integral_;
};

/// The six linear images (a,b) -> (a,b), (b,a), (-a,b-a), (b-a,-a), (-b,a-b), (a-b,-b)
/// realising particle relabelings. Each acts as a 2x2 matrix on the pair (a, b).
const std::array<Eigen::Matrix2d, 6>& relabelings();

inline Vec6 apply_relabeling(const Eigen::Matrix2d& m, const Vec6& x)
{
    Vec6 y;
    y.head<3>() = m(0, 0) * x.head<3>() + m(0, 1) * x.tail<3>();
    y.tail<3>() = m(1, 0) * x.head<3>() + m(1, 1) * x.tail<3>();
    return y;
}

/// Three-body interaction V = coupling * (base profile, or its S3 average).
class PotentialModel {
public:
    PotentialModel(std::shared_ptr<const Profile> base, double coupling, bool symmetrized);

    double operator()(const Vec6& x) const;
    double base_value(const Vec6& x) const;

    double coupling() const { return coupling_; }
    double support_radius() const { return support_radius_; }
    bool symmetrized() const { return symmetrized_; }
    bool is_zero() const { return coupling_ == 0.0; }
    const Profile& profile() const { return *base_; }
    std::shared_ptr<const Profile> profile_ptr() const { return base_; }

    /// Same base, coupling multiplied by `lambda`.
    PotentialModel scaled(double lambda) const;
    double integral() const;
    /// Exact draw with density V / integral(). Requires coupling > 0.
    Vec6 sample(Rng& rng) const;
    /// Exact Fourier transform at (p, q) when the base profile is radial.
    std::optional<cplx> exact_transform(const Vec6& k) const;

private:
    std::shared_ptr<const Profile> base_;
    double coupling_;
    bool symmetrized_;
    double support_radius_;
};

/// Average of `profile` over the six relabelings. Throws InputError on negative samples
/// or non-finite support.
PotentialModel symmetrize(std::shared_ptr<const Profile> profile, double coupling = 1.0);

/// Default potential: symmetrized unit bump.
PotentialModel default_bump(double coupling = 1.0);

struct Violation {
    std::string identity; // "non_negative", "compact_support", or "symmetry:<image>"
    Vec6 witness;
    double magnitude;
};

struct Certification {
    bool pass = true;
    double max_violation = 0.0;
    double symmetry_tolerance = 1e-10;
    int points_checked = 0;
    std::vector<Violation> failures;
};

struct ValidateOptions {
    int random_points = 1000;
    std::uint64_t seed = 12345;
    double symmetry_tolerance = 1e-10;
    /// Extra points that are always checked (e.g. injected witnesses).
    std::vector<Vec6> extra_points;
};

Certification validate(const PotentialModel& v, const ValidateOptions& options = {});

enum class FourierMethod { quadrature, exact, automatic };

struct FourierOptions {
    int order = 16; ///< midpoint cells per dimension over the support cube
    FourierMethod method = FourierMethod::quadrature;
    bool estimate_error = true;
};

struct FourierTable {
    std::vector<Vec6> waves;
    std::vector<cplx> values;
    double error_estimate = 0.0;
    std::string method;
};

/// V^(p,q) = integral of V(a,b) exp(-i(p.a + q.b)) over R^6.
FourierTable fourier(const PotentialModel& v, const std::vector<Vec6>& waves, const FourierOptions& options = {});

/// V^ on the lattice step * (i1..i6), |i_d| <= m, stored row-major with i1 slowest.
struct FourierLattice {
    double step = 0.0;
    int m = 0;
    std::vector<cplx> values;
    std::string method;

    int side() const { return 2 * m + 1; }
    cplx at(const std::array<int, 6>& i) const
    {
        std::size_t idx = 0;
        for (int d = 0; d < 6; ++d) idx = idx * side() + static_cast<std::size_t>(i[d] + m);
        return values[idx];
    }
};

FourierLattice fourier_lattice(const PotentialModel& v, double step, int m, const FourierOptions& options = {});

/// Binary table file: "GP3POT1\0", u64 points-per-dim, u64 dims (=6), u64 payload bytes,
/// then little-endian float64 values in row-major order.
std::shared_ptr<TableProfile> load_table(const std::filesystem::path& path, double radius);
void save_table(const std::filesystem::path& path, int points_per_dim, const std::vector<double>& values);

} // namespace gp3
