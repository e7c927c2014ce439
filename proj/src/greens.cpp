#include "gp3/greens.hpp"

#include "gp3/quadrature.hpp"


#include <mutex>

namespace gp3 {

const Metric6& metric6()
{
    static const Metric6 m;
    return m;
}

const Metric9& metric9()
{
    static const Metric9 m;
    return m;
}

double c6() { return 1.0 / (8.0 * kPi * kPi * kPi * metric6().determinant()); }

double c9()
{
    const double gamma_9_2 = 105.0 * std::sqrt(kPi) / 16.0;
    return gamma_9_2 / (28.0 * std::pow(kPi, 4.5) * metric9().determinant());
}

double kernel6(const Vec6& x, double epsilon)
{
    if (x.norm() < epsilon) throw SingularEvaluation("kernel6 evaluated at |x| below epsilon");
    const double q = metric6().inverse_norm_squared(x);
    return c6() / (q * q);
}

double kernel9(const Vec9& x, double epsilon)
{
    if (x.norm() < epsilon) throw SingularEvaluation("kernel9 evaluated at |x| below epsilon");
    const double q = metric9().inverse_norm_squared(x);
    return c9() / (q * q * q * std::sqrt(q));
}

double cell_integral6(const Vec6& center, double side, const Vec6& apex, int order)
{
    const double c = c6();
    const Metric6& m = metric6();
    auto f = [&](const Vec6& z) {
        const double q = m.inverse_norm_squared(z);
        return c / (q * q);
    };
    return homogeneous_cube_integral<6>(f, -4.0, center, 0.5 * side, apex, order);
}

double cell_average6(double side)
{
    // Degree -4 in six dimensions: the origin-centred integral scales as side^2.
    static std::once_flag once;
    static double unit = 0.0;
    std::call_once(once, [] { unit = cell_integral6(Vec6::Zero(), 1.0, Vec6::Zero(), 10); });
    return unit * side * side;
}

double coulomb_cell_integral(const Vec3& center, double side, const Vec3& apex, int order)
{
    auto f = [](const Vec3& z) { return 1.0 / (8.0 * kPi * z.norm()); };
    return homogeneous_cube_integral<3>(f, -1.0, center, 0.5 * side, apex, order);
}

} // namespace gp3
