#include "gp3/quadrature.hpp"

#include "gp3/common.hpp"

#include <stdexcept>

namespace gp3 {

QuadratureRule gauss_legendre(int order, double a, double b)
{
    if (order < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
    QuadratureRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < (order + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = mid - half * x;
        rule.nodes[order - 1 - i] = mid + half * x;
        rule.weights[i] = rule.weights[order - 1 - i] = half * w;
    }
    return rule;
}

QuadratureRule composite_gauss_legendre(const std::vector<double>& breaks, const std::vector<int>& orders)
{
    if (breaks.size() != orders.size() + 1)
        throw std::invalid_argument("composite_gauss_legendre: need one order per panel");
    QuadratureRule out;
    for (std::size_t p = 0; p < orders.size(); ++p) {
        const QuadratureRule r = gauss_legendre(orders[p], breaks[p], breaks[p + 1]);
        out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
        out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
    }
    return out;
}

} // namespace gp3
