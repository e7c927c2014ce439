#pragma once

#include <Eigen/Core>

#include <cmath>

namespace gp3 {

struct CgOptions {
    double tolerance = 1e-10; ///< relative residual |b - Ax| / |b|
    int max_iterations = 1000;
};

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Preconditioned conjugate gradients for a symmetric positive definite operator.
/// `apply(x, y)` sets y = A x, `precondition(r, z)` sets z = P^{-1} r. `x` holds the
/// initial guess on entry.
template <class Vector, class Apply, class Precondition>
CgResult conjugate_gradient(Apply&& apply, Precondition&& precondition, const Vector& b, Vector& x,
                            const CgOptions& options = {})
{
    CgResult result;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero();
        result.converged = true;
        return result;
    }
    Vector r(b.size()), z(b.size()), p(b.size()), ap(b.size());
    apply(x, ap);
    r = b - ap;
    precondition(r, z);
    p = z;
    auto rz = std::real(r.dot(z));
    result.relative_residual = r.norm() / bnorm;
    while (result.relative_residual > options.tolerance && result.iterations < options.max_iterations) {
        apply(p, ap);
        const auto alpha = rz / std::real(p.dot(ap));
        x += alpha * p;
        r -= alpha * ap;
        ++result.iterations;
        result.relative_residual = r.norm() / bnorm;
        if (result.relative_residual <= options.tolerance) break;
        precondition(r, z);
        const auto rz_next = std::real(r.dot(z));
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    // Recompute the true residual to guard against drift in the recursion.
    apply(x, ap);
    result.relative_residual = (b - ap).norm() / bnorm;
    result.converged = result.relative_residual <= options.tolerance * 10.0;
    return result;
}

template <class Vector, class Apply>
CgResult conjugate_gradient(Apply&& apply, const Vector& b, Vector& x, const CgOptions& options = {})
{
    return conjugate_gradient(std::forward<Apply>(apply), [](const Vector& r, Vector& z) { z = r; }, b, x, options);
}

} // namespace gp3
