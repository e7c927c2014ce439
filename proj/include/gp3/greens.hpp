#pragma once

#include "gp3/common.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace gp3 {

/// Relative-coordinate metric for P relative vectors in R^3: the symmetric square root
/// of (1/2)(I + J) (J all ones), lifted by (x) I_3. P = 2 gives M on R^6, P = 3 gives M_*.
template <int P>
class ModifiedMetric {
public:
    static constexpr int dim = 3 * P;
    using Core = Eigen::Matrix<double, P, P>;
    using Vector = Eigen::Matrix<double, dim, 1>;

    ModifiedMetric()
    {
        squared_ = 0.5 * (Core::Identity() + Core::Ones());
        Eigen::SelfAdjointEigenSolver<Core> es(squared_);
        eigenvalues_ = es.eigenvalues().cwiseSqrt();
        core_ = es.eigenvectors() * eigenvalues_.asDiagonal() * es.eigenvectors().transpose();
        inverse_squared_ = 2.0 * (Core::Identity() - Core::Ones() / (P + 1.0));
        determinant_ = std::pow(eigenvalues_.prod(), 3);
    }

    const Core& core() const { return core_; }
    /// (1/2)(I + J), the square of core().
    const Core& core_squared() const { return squared_; }
    const Eigen::Matrix<double, P, 1>& core_eigenvalues() const { return eigenvalues_; }
    /// Determinant of the full dim x dim matrix.
    double determinant() const { return determinant_; }

    Eigen::Matrix<double, dim, dim> full() const
    {
        Eigen::Matrix<double, dim, dim> m = Eigen::Matrix<double, dim, dim>::Zero();
        for (int i = 0; i < P; ++i)
            for (int j = 0; j < P; ++j) m.template block<3, 3>(3 * i, 3 * j) = core_(i, j) * Eigen::Matrix3d::Identity();
        return m;
    }

    /// |M^{-1} x|^2 without forming the inverse.
    template <class Derived>
    double inverse_norm_squared(const Eigen::MatrixBase<Derived>& x) const
    {
        double s = 0.0;
        for (int i = 0; i < P; ++i)
            for (int j = 0; j < P; ++j)
                s += inverse_squared_(i, j) * x.template segment<3>(3 * i).dot(x.template segment<3>(3 * j));
        return s;
    }

    /// Map u -> M u (metric coordinates to physical).
    Vector apply(const Vector& u) const
    {
        Vector x = Vector::Zero();
        for (int i = 0; i < P; ++i)
            for (int j = 0; j < P; ++j) x.template segment<3>(3 * i) += core_(i, j) * u.template segment<3>(3 * j);
        return x;
    }

private:
    Core squared_;
    Core core_;
    Core inverse_squared_;
    Eigen::Matrix<double, P, 1> eigenvalues_;
    double determinant_;
};

using Metric6 = ModifiedMetric<2>;
using Metric9 = ModifiedMetric<3>;

const Metric6& metric6();
const Metric9& metric9();

/// Green's constant of -2 Delta_M on R^6: 1 / (8 pi^3 det M).
double c6();
/// Green's constant of -2 Delta_{M_*} on R^9: Gamma(9/2) / (28 pi^{9/2} det M_*).
double c9();

struct SingularEvaluation : InvariantError {
    explicit SingularEvaluation(const std::string& message) : InvariantError("singular_evaluation", message) {}
};

/// c6 / |M^{-1} x|^4. Throws SingularEvaluation for |x| < epsilon.
double kernel6(const Vec6& x, double epsilon = 1e-12);
/// c9 / |M_*^{-1} x|^7. Throws SingularEvaluation for |x| < epsilon.
double kernel9(const Vec9& x, double epsilon = 1e-12);

/// Integral of kernel6 over the cube of side `side` centred at the origin.
double cell_average6(double side);

/// Integral of kernel6(z - apex) over the cube centred at `center` with side `side`;
/// `apex` must lie in the closed cube.
double cell_integral6(const Vec6& center, double side, const Vec6& apex, int order = 4);

/// Integral of 1 / (8 pi |z - apex|) over a cube in R^3 containing `apex`.
double coulomb_cell_integral(const Vec3& center, double side, const Vec3& apex, int order = 8);

} // namespace gp3
