#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace gp3 {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule with `order` nodes on [a, b].
QuadratureRule gauss_legendre(int order, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre over consecutive panels [breaks[i], breaks[i+1]].
QuadratureRule composite_gauss_legendre(const std::vector<double>& breaks, const std::vector<int>& orders);

/// Integral over an axis-aligned cube of a function that is positively homogeneous
/// of degree `degree` about `apex` (a point inside the closed cube), in D dimensions.
///
/// The cube is split into pyramids joining the apex to each face; along each ray the
/// radial integral is analytic, leaving smooth (D-1)-dimensional face integrals done
/// by tensor Gauss-Legendre with `order` nodes per direction. Requires D + degree > 0.
template <int D, class F, class Point>
double homogeneous_cube_integral(F&& f, double degree, const Point& center, double half_width,
                                 const Point& apex, int order)
{
    const QuadratureRule rule = gauss_legendre(order);
    const double radial = 1.0 / (static_cast<double>(D) + degree);
    double total = 0.0;
    Point y;
    std::vector<int> idx(D - 1);
    for (int axis = 0; axis < D; ++axis) {
        for (int side = -1; side <= 1; side += 2) {
            const double plane = center[axis] + side * half_width;
            const double height = std::abs(plane - apex[axis]);
            if (height == 0.0) continue;
            double face = 0.0;
            std::fill(idx.begin(), idx.end(), 0);
            while (true) {
                double w = 1.0;
                int k = 0;
                for (int d = 0; d < D; ++d) {
                    if (d == axis) {
                        y[d] = plane - apex[d];
                        continue;
                    }
                    y[d] = center[d] + half_width * rule.nodes[idx[k]] - apex[d];
                    w *= half_width * rule.weights[idx[k]];
                    ++k;
                }
                face += w * f(y);
                int carry = 0;
                while (carry < D - 1 && ++idx[carry] == order) {
                    idx[carry] = 0;
                    ++carry;
                }
                if (carry == D - 1) break;
            }
            total += height * radial * face;
        }
    }
    return total;
}

} // namespace gp3
