#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gp3 {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Raised when a numerical invariant asserted by a module is violated.
/// `invariant()` is a stable snake_case tag used in machine-readable errors.
class InvariantError : public std::runtime_error {
public:
    InvariantError(std::string invariant, const std::string& message)
        : std::runtime_error(message), invariant_(std::move(invariant)) {}

    const std::string& invariant() const noexcept { return invariant_; }

private:
    std::string invariant_;
};

/// Bad input: malformed config, inadmissible potential, unreadable file.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Vec6 join(const Vec3& a, const Vec3& b)
{
    Vec6 x;
    x << a, b;
    return x;
}

inline Vec3 head3(const Vec6& x) { return x.head<3>(); }
inline Vec3 tail3(const Vec6& x) { return x.tail<3>(); }

} // namespace gp3
