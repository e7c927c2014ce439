#include "gp3/sigma9.hpp"

#include "gp3/greens.hpp"
#include "gp3/parallel.hpp"
#include "gp3/quadrature.hpp"
#include "gp3/rng.hpp"

#include <algorithm>
#include <cmath>

namespace gp3 {

namespace {

Vec3 part(const Vec9& x, int i) { return x.segment<3>(3 * i); }

Vec9 join9(const Vec3& a, const Vec3& b, const Vec3& c)
{
    Vec9 x;
    x << a, b, c;
    return x;
}

double smooth_step(double t)
{
    // 1 for t <= 1/3, 0 for t >= 1/2, C-infinity in between.
    if (t <= 1.0 / 3.0) return 1.0;
    if (t >= 0.5) return 0.0;
    const double u = (0.5 - t) * 6.0;
    const double a = std::exp(-1.0 / u);
    const double b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

Vec3 random_direction3(Rng& rng)
{
    Vec3 d;
    do {
        d = Vec3(rng.normal(), rng.normal(), rng.normal());
    } while (d.norm() < 1e-12);
    return d.normalized();
}

/// Radial density 3 / (4 pi a^3) (1 + r / a)^-4 on R^3.
struct TailProposal {
    double a;

    Vec3 sample(Rng& rng) const
    {
        const double u = std::cbrt(rng.uniform());
        return a * u / (1.0 - u) * random_direction3(rng);
    }
    double density(const Vec3& x) const
    {
        return 3.0 / (4.0 * kPi * a * a * a) * std::pow(1.0 + x.norm() / a, -4);
    }
};

/// D = M_* (r theta), theta uniform on S^8, r with density (6 / r0^2) r (1 + r / r0)^-4.
/// kernel9(D) / g(D) = c9 |S^8| det M_* (r0^2 / 6) (1 + r / r0)^4 stays bounded near 0.
struct DisplacementProposal {
    double r0;
    double constant;

    explicit DisplacementProposal(double scale) : r0(scale)
    {
        const double sphere = 2.0 * std::pow(kPi, 4.5) / (105.0 * std::sqrt(kPi) / 16.0);
        constant = c9() * sphere * metric9().determinant() * r0 * r0 / 6.0;
    }

    /// Returns the displacement and writes kernel9 / g into `ratio`.
    Vec9 sample(Rng& rng, double& ratio) const
    {
        double u[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
        std::sort(u, u + 3);
        const double t = u[1];
        const double r = r0 * t / (1.0 - t);
        Vec9 theta;
        do {
            for (int i = 0; i < 9; ++i) theta[i] = rng.normal();
        } while (theta.norm() < 1e-12);
        ratio = constant * std::pow(1.0 + r / r0, 4);
        return metric9().apply(r * theta.normalized());
    }
};

struct Accumulator {
    double sum = 0.0;
    double sum2 = 0.0;
    double max = 0.0;
    std::uint64_t count = 0;

    void add(double w)
    {
        sum += w;
        sum2 += w * w;
        max = std::max(max, std::abs(w));
        ++count;
    }
    void merge(const Accumulator& o)
    {
        sum += o.sum;
        sum2 += o.sum2;
        max = std::max(max, o.max);
        count += o.count;
    }
};

constexpr std::uint64_t kChunk = 2048;

/// Runs `draw(rng)` for `samples` draws in fixed chunks; chunk c uses substream
/// (seed, stream_base + c). Chunks are merged in index order, so the result does not
/// depend on the worker count.
template <class Draw>
Accumulator run_chunks(std::uint64_t samples, std::uint64_t seed, std::uint64_t stream_base, int workers, Draw&& draw)
{
    const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
    std::vector<Accumulator> partial(chunks);
    parallel_for(chunks, workers, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t c = begin; c < end; ++c) {
            Rng rng(seed, stream_base + c);
            const std::uint64_t count = std::min<std::uint64_t>(kChunk, samples - c * kChunk);
            for (std::uint64_t i = 0; i < count; ++i) partial[c].add(draw(rng));
        }
    });
    Accumulator total;
    for (const auto& p : partial) total.merge(p);
    return total;
}

TermEstimate to_estimate(const std::string& term, const Accumulator& acc, std::uint64_t seed, double abort)
{
    TermEstimate e;
    e.term = term;
    e.samples = acc.count;
    e.seed = seed;
    if (acc.count == 0) return e;
    const double n = static_cast<double>(acc.count);
    e.mean = acc.sum / n;
    const double var = std::max(0.0, acc.sum2 / n - e.mean * e.mean);
    e.std_error = acc.count > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    e.max_weight = acc.max;
    if (e.mean != 0.0 && acc.max > abort * std::abs(e.mean))
        throw InvariantError("weight_bounded", term + ": a single weight exceeded the abort multiple of the mean");
    return e;
}

} // namespace

double NinePotential::summand(int s, const Vec9& x) const
{
    const Vec3 x1 = part(x, 0), x2 = part(x, 1), x3 = part(x, 2);
    switch (s) {
    case 0: return v_(join(x1, x2));
    case 1: return v_(join(x1, x3));
    case 2: return v_(join(x2, x3));
    default: return v_(join(x2 - x1, x3 - x1));
    }
}

double NinePotential::operator()(const Vec9& x) const
{
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += summand(i, x);
    return s;
}

double cutoff6(const Vec6& x)
{
    double c = 1.0;
    for (int i = 0; i < 6 && c > 0.0; ++i) c *= smooth_step(std::abs(x[i]));
    return c;
}

double SourceF::correlation(const Vec3& x2, const Vec3& x3) const
{
    double c = 1.0;
    if (ell_) {
        c = cutoff6(join(x2, x3) / *ell_);
        if (c == 0.0) return 0.0;
    }
    return c * sol_.omega_at(join(x2, x3));
}

double SourceF::operator()(const Vec9& x) const
{
    const double v = v_(join(part(x, 0), part(x, 1)));
    if (v == 0.0) return 0.0;
    return v * correlation(part(x, 1), part(x, 2));
}

// --------------------------------------------------------------------- Born terms

TermEstimate born1(const SourceF& f, const McOptions& options)
{
    if (f.is_zero()) return {"born1", options.born1_samples, 0.0, 0.0, 0.0, options.seed};
    const PotentialModel& v = f.potential();
    const double rv = v.support_radius();
    const TailProposal tail{options.tail_scale > 0.0 ? options.tail_scale : rv};
    const DisplacementProposal disp(options.r0 > 0.0 ? options.r0 : rv);
    const double mass = v.integral();

    auto draw = [&](Rng& rng) {
        const Vec6 pair = v.sample(rng);
        const Vec3 x1 = pair.head<3>(), x2 = pair.tail<3>();
        const Vec3 offset = tail.sample(rng);
        const Vec3 x3 = x2 + offset;
        // f(X) / h(X) with h = V(x1, x2) / int V * s(|x3 - x2|).
        const double weight = mass * f.correlation(x2, x3) / tail.density(offset);
        double ratio = 0.0;
        const Vec9 d = disp.sample(rng, ratio);
        if (weight == 0.0) return 0.0;
        return weight * ratio * f(join9(x1, x2, x3) - d);
    };
    const Accumulator acc = run_chunks(options.born1_samples, options.seed, 0, options.workers, draw);
    return to_estimate("born1", acc, options.seed, options.weight_abort);
}

Born2Estimate born2(const SourceF& f, const McOptions& options)
{
    Born2Estimate out;
    static const char* kNames[4] = {"born2_v12", "born2_v13", "born2_v23", "born2_vrel"};
    if (f.is_zero()) {
        for (int s = 0; s < 4; ++s) out.summands[s] = {kNames[s], options.born2_samples, 0.0, 0.0, 0.0, options.seed};
        out.total = {"born2", 4 * options.born2_samples, 0.0, 0.0, 0.0, options.seed};
        return out;
    }
    const PotentialModel& v = f.potential();
    const double rv = v.support_radius();
    const TailProposal tail{options.tail_scale > 0.0 ? options.tail_scale : rv};
    const DisplacementProposal disp(options.r0 > 0.0 ? options.r0 : rv);
    const double mass = v.integral();
    const int inner = std::max(1, options.inner_samples);

    auto green_f = [&](const Vec9& z, Rng& rng) {
        double s = 0.0;
        for (int k = 0; k < inner; ++k) {
            double ratio = 0.0;
            const Vec9 d = disp.sample(rng, ratio);
            s += ratio * f(z - d);
        }
        return s / inner;
    };

    double total_mean = 0.0, total_var = 0.0, total_max = 0.0;
    for (int s = 0; s < 4; ++s) {
        auto draw = [&](Rng& rng) {
            const Vec6 pair = v.sample(rng);
            const Vec3 a = pair.head<3>(), b = pair.tail<3>();
            const Vec3 offset = tail.sample(rng);
            Vec9 z;
            switch (s) {
            case 0: z = join9(a, b, b + offset); break;          // V(z1,z2), z3 free about z2
            case 1: z = join9(a, a + offset, b); break;          // V(z1,z3), z2 free about z1
            case 2: z = join9(a + offset, a, b); break;          // V(z2,z3), z1 free about z2
            default: z = join9(offset, offset + a, offset + b); // V(z2-z1, z3-z1), z1 free about 0
            }
            // VV_s(Z) / q_s(Z) = int V / s(|free - centre|); the two (G f) factors use
            // disjoint draws, so their product is unbiased.
            const double weight = mass / tail.density(offset);
            const double g1 = green_f(z, rng);
            if (g1 == 0.0) {
                green_f(z, rng);
                return 0.0;
            }
            return weight * g1 * green_f(z, rng);
        };
        const Accumulator acc = run_chunks(options.born2_samples, options.seed, (s + 1) * (1ULL << 40), options.workers, draw);
        out.summands[s] = to_estimate(kNames[s], acc, options.seed, options.weight_abort);
        total_mean += out.summands[s].mean;
        total_var += out.summands[s].std_error * out.summands[s].std_error;
        total_max = std::max(total_max, out.summands[s].max_weight);
    }
    out.total = {"born2", 4 * options.born2_samples, total_mean, std::sqrt(total_var), total_max, options.seed};
    return out;
}

std::vector<TermEstimate> SigmaEstimate::diagnostics() const
{
    std::vector<TermEstimate> rows{b1};
    for (const auto& s : b2.summands) rows.push_back(s);
    rows.push_back(b2.total);
    return rows;
}

SigmaEstimate sigma_bracket(const PotentialModel& v, const ScatteringSolution6& sol, const McOptions& options)
{
    const SourceF f(v, sol);
    SigmaEstimate e;
    e.b1 = born1(f, options);
    e.b2 = born2(f, options);
    const double err = e.b1.std_error + e.b2.total.std_error;
    if (e.b2.total.mean > e.b1.mean + 3.0 * err)
        throw InvariantError("bracket_inverted",
                             "B2 exceeds B1 beyond the Monte-Carlo error: coupling too large for the two-term bracket; "
                             "use the grid oracle");
    e.upper = e.b1.mean;
    e.lower = e.b1.mean - e.b2.total.mean;
    e.value = 0.5 * (e.upper + e.lower);
    e.error = 0.5 * (e.upper - e.lower) + err;
    return e;
}

// --------------------------------------------------------------------- grid oracle

double sigma_grid_memory(int n) { return 10.0 * std::pow(static_cast<double>(n), 9) * sizeof(double); }

namespace {

/// n^9 interior nodes of [-L, L]^9, row-major with axis 0 slowest.
struct Grid9 {
    int n;
    double box;
    double h;
    std::size_t size;
    std::array<std::size_t, 9> stride;

    Grid9(int n_, double box_) : n(n_), box(box_), h(2.0 * box_ / (n_ + 1))
    {
        size = 1;
        for (int d = 8; d >= 0; --d) {
            stride[d] = size;
            size *= static_cast<std::size_t>(n);
        }
    }
    double coordinate(int i) const { return -box + (i + 1) * h; }
};

/// A = discrete -2 Delta_{M_*}: the 18 axis neighbours plus the 6 neighbours along
/// e_{1c} + e_{2c} + e_{3c}, every off-diagonal weight -1/h^2, diagonal 24/h^2.
void apply_laplacian9(const Grid9& g, const Eigen::VectorXd& x, Eigen::VectorXd& y, const Eigen::VectorXd* diag,
                      int workers)
{
    y.resize(x.size());
    const double inv_h2 = 1.0 / (g.h * g.h);
    const int n = g.n;
    const std::size_t plane = g.size / n; // split along axis 0
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t begin, std::size_t end, int) {
        std::array<int, 9> idx{};
        for (std::size_t i0 = begin; i0 < end; ++i0) {
            idx.fill(0);
            idx[0] = static_cast<int>(i0);
            for (std::size_t k = 0; k < plane; ++k) {
                const std::size_t p = i0 * plane + k;
                double acc = 24.0 * x[p];
                for (int d = 0; d < 9; ++d) {
                    if (idx[d] > 0) acc -= x[p - g.stride[d]];
                    if (idx[d] < n - 1) acc -= x[p + g.stride[d]];
                }
                for (int c = 0; c < 3; ++c) {
                    const std::size_t s = g.stride[c] + g.stride[3 + c] + g.stride[6 + c];
                    if (idx[c] < n - 1 && idx[3 + c] < n - 1 && idx[6 + c] < n - 1) acc -= x[p + s];
                    if (idx[c] > 0 && idx[3 + c] > 0 && idx[6 + c] > 0) acc -= x[p - s];
                }
                y[p] = acc * inv_h2 + (diag ? (*diag)[p] * x[p] : 0.0);
                for (int d = 8; d >= 1; --d) {
                    if (++idx[d] < n) break;
                    idx[d] = 0;
                }
            }
        }
    });
}

/// Exact inverse of the 19-point Dirichlet Laplacian -Delta_h by a sine transform along
/// each axis (dense n x n factors).
class SinePreconditioner {
public:
    explicit SinePreconditioner(const Grid9& g) : g_(g)
    {
        const int n = g.n;
        sine_.resize(n, n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) sine_(j, k) = std::sqrt(2.0 / (n + 1)) * std::sin(kPi * (j + 1) * (k + 1) / (n + 1));
        lambda_.resize(n);
        for (int k = 0; k < n; ++k) lambda_[k] = (2.0 - 2.0 * std::cos(kPi * (k + 1) / (n + 1))) / (g.h * g.h);
    }

    void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const
    {
        z = r;
        transform(z);
        std::array<int, 9> idx{};
        for (std::size_t p = 0; p < g_.size; ++p) {
            double s = 0.0;
            for (int d = 0; d < 9; ++d) s += lambda_[idx[d]];
            z[p] /= s;
            for (int d = 8; d >= 0; --d) {
                if (++idx[d] < g_.n) break;
                idx[d] = 0;
            }
        }
        transform(z); // the sine matrix is symmetric and orthogonal
    }

private:
    const Grid9& g_;
    Eigen::MatrixXd sine_;
    std::vector<double> lambda_;

    void transform(Eigen::VectorXd& v) const
    {
        const int n = g_.n;
        std::vector<double> line(n), out(n);
        for (int d = 0; d < 9; ++d) {
            const std::size_t stride = g_.stride[d];
            const std::size_t outer = g_.size / (stride * n);
            for (std::size_t a = 0; a < outer; ++a)
                for (std::size_t b = 0; b < stride; ++b) {
                    const std::size_t base = a * stride * n + b;
                    for (int j = 0; j < n; ++j) line[j] = v[base + j * stride];
                    for (int k = 0; k < n; ++k) {
                        double s = 0.0;
                        for (int j = 0; j < n; ++j) s += sine_(k, j) * line[j];
                        out[k] = s;
                    }
                    for (int k = 0; k < n; ++k) v[base + k * stride] = out[k];
                }
        }
    }
};

/// Mean of V over the 6-D cube of side h centred at c (tensor Gauss-Legendre, 3 nodes per axis).
double cell_mean(const PotentialModel& v, const Vec6& c, double h, double reach2)
{
    if (c.squaredNorm() > reach2) return 0.0;
    static const QuadratureRule unit = gauss_legendre(3, -0.5, 0.5);
    double sum = 0.0;
    std::array<int, 6> k{};
    for (;;) {
        Vec6 x;
        double w = 1.0;
        for (int d = 0; d < 6; ++d) {
            x[d] = c[d] + h * unit.nodes[k[d]];
            w *= unit.weights[k[d]];
        }
        sum += w * v(x);
        int d = 5;
        while (d >= 0 && ++k[d] == 3) k[d--] = 0;
        if (d < 0) break;
    }
    return sum;
}

} // namespace

SigmaGridResult sigma_grid(const PotentialModel& v, const ScatteringSolution6& sol, double ell,
                           const SigmaGridOptions& options)
{
    if (options.n < 2) throw InputError("sigma_grid needs n >= 2");
    if (sigma_grid_memory(options.n) > options.memory_budget)
        throw InvariantError("memory_budget", "sigma_grid resolution exceeds the memory budget");
    const double rv = v.support_radius();
    SigmaGridResult out;
    out.ell = ell;
    out.n = options.n;
    out.box = options.box > 0.0 ? options.box : 1.5 * rv;
    const Grid9 g(options.n, out.box);
    out.h = g.h;
    const int n = g.n;
    if (v.is_zero() || sol.is_zero()) return out;

    // Tables over pairs of 3-D nodes: index (i, j) with i, j in [0, n^3).
    const std::size_t n3 = static_cast<std::size_t>(n) * n * n;
    auto node3 = [&](std::size_t i) {
        return Vec3(g.coordinate(static_cast<int>(i / (n * n))), g.coordinate(static_cast<int>(i / n % n)),
                    g.coordinate(static_cast<int>(i % n)));
    };
    // V enters through cell means so that the grid carries the right mass of a peaked V.
    const double reach = rv + 0.5 * std::sqrt(6.0) * g.h;
    const double reach2 = reach * reach;
    const SourceF source(v, sol, ell);
    std::vector<double> vpair(n3 * n3), corr(n3 * n3);
    parallel_for(n3, options.workers, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t j = 0; j < n3; ++j) {
                vpair[i * n3 + j] = cell_mean(v, join(node3(i), node3(j)), g.h, reach2);
                corr[i * n3 + j] = source.correlation(node3(i), node3(j));
            }
    });
    // Relative term V(x2 - x1, x3 - x1) on integer offsets in [-(n-1), n-1]^6.
    const int side = 2 * n - 1;
    std::size_t offsets = 1;
    for (int d = 0; d < 6; ++d) offsets *= side;
    std::vector<double> vrel(offsets);
    parallel_for(offsets, options.workers, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t o = begin; o < end; ++o) {
            Vec6 c;
            std::size_t r = o;
            for (int d = 5; d >= 0; --d) {
                c[d] = (static_cast<int>(r % side) - (n - 1)) * g.h;
                r /= side;
            }
            vrel[o] = cell_mean(v, c, g.h, reach2);
        }
    });
    auto offset3 = [&](std::size_t a, std::size_t b) {
        // Base-side digits of node3(b) - node3(a), axis 0 most significant.
        const int da[3] = {static_cast<int>(a / (n * n)), static_cast<int>(a / n % n), static_cast<int>(a % n)};
        const int db[3] = {static_cast<int>(b / (n * n)), static_cast<int>(b / n % n), static_cast<int>(b % n)};
        std::size_t code = 0;
        for (int d = 0; d < 3; ++d) code = code * side + static_cast<std::size_t>(db[d] - da[d] + n - 1);
        return code;
    };
    const std::size_t half = static_cast<std::size_t>(side) * side * side;

    Eigen::VectorXd f(static_cast<Eigen::Index>(g.size)), vv(static_cast<Eigen::Index>(g.size));
    parallel_for(n3, options.workers, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i1 = begin; i1 < end; ++i1) {
            for (std::size_t i2 = 0; i2 < n3; ++i2) {
                const std::size_t o2 = offset3(i1, i2) * half;
                for (std::size_t i3 = 0; i3 < n3; ++i3) {
                    const std::size_t p = (i1 * n3 + i2) * n3 + i3;
                    vv[p] = vpair[i1 * n3 + i2] + vpair[i1 * n3 + i3] + vpair[i2 * n3 + i3] + vrel[o2 + offset3(i1, i3)];
                    f[p] = vpair[i1 * n3 + i2] * corr[i2 * n3 + i3];
                }
            }
        }
    });
    vpair.clear();
    corr.clear();
    vrel.clear();

    const SinePreconditioner pre(g);
    auto precondition = [&](const Eigen::VectorXd& r, Eigen::VectorXd& z) { pre.apply(r, z); };
    auto apply_full = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { apply_laplacian9(g, x, y, &vv, options.workers); };
    auto apply_free = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { apply_laplacian9(g, x, y, nullptr, options.workers); };

    const double w = std::pow(g.h, 9);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(f.size());
    out.cg = conjugate_gradient(apply_full, precondition, f, eta, options.cg);
    if (!out.cg.converged) throw InvariantError("cg_convergence", "sigma_grid CG stagnated");
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(f.size());
    out.cg_bound = conjugate_gradient(apply_free, precondition, f, beta, options.cg);
    if (!out.cg_bound.converged) throw InvariantError("cg_convergence", "sigma_grid bound-field CG stagnated");

    const double scale = std::max(beta.maxCoeff(), 1e-300);
    for (Eigen::Index p = 0; p < eta.size(); ++p) {
        out.max_bound_violation = std::max(out.max_bound_violation, -eta[p] / scale);
        out.max_bound_violation = std::max(out.max_bound_violation, (eta[p] - beta[p]) / scale);
    }
    if (out.max_bound_violation > 1e-8)
        throw InvariantError("eta_pointwise_bounds", "0 <= eta <= (-2 Delta_{M_*})^{-1} f violated on the grid");

    out.sigma = w * f.dot(eta);
    out.bound_sigma = w * f.dot(beta);
    // Q(phi) = <phi, A phi> + sum VV (f / VV - phi)^2, with f = 0 wherever VV = 0.
    Eigen::VectorXd a_eta;
    apply_free(eta, a_eta);
    double q0 = 0.0, penalty = 0.0;
    for (Eigen::Index p = 0; p < f.size(); ++p) {
        if (vv[p] <= 0.0) continue;
        const double target = f[p] / vv[p];
        q0 += vv[p] * target * target;
        penalty += vv[p] * (target - eta[p]) * (target - eta[p]);
    }
    out.q_zero = w * q0;
    out.q_eta = w * (eta.dot(a_eta) + penalty);
    out.audit_relative = out.sigma > 0.0 ? std::abs(out.q_zero - out.q_eta - out.sigma) / out.sigma : 0.0;
    return out;
}

SigmaLadder sigma_grid_ladder(const PotentialModel& v, const ScatteringSolution6& sol, const std::vector<double>& ells,
                              const SigmaGridOptions& options, bool resolution_check)
{
    if (ells.empty()) throw InputError("sigma_grid_ladder needs at least one ell");
    SigmaLadder ladder;
    for (double ell : ells) ladder.rungs.push_back(sigma_grid(v, sol, ell, options));
    const std::size_t m = ladder.rungs.size();
    const double last = ladder.rungs.back().sigma;
    ladder.extrapolated = last;
    if (m >= 3) {
        const double s1 = ladder.rungs[m - 3].sigma, s2 = ladder.rungs[m - 2].sigma, s3 = last;
        const double d1 = s2 - s1, d2 = s3 - s2;
        const double ratio_ell = ells[m - 1] / ells[m - 2];
        if (d1 > 0.0 && d2 > 0.0 && d2 < d1 && std::abs(ells[m - 2] / ells[m - 3] - ratio_ell) < 1e-9) {
            const double q = d2 / d1; // = ratio_ell^-p
            ladder.rate = -std::log(q) / std::log(ratio_ell);
            ladder.extrapolated = s3 + d2 * q / (1.0 - q);
            ladder.error = std::abs(ladder.extrapolated - s3);
        } else {
            ladder.error = std::abs(d2);
        }
    } else if (m == 2) {
        ladder.error = std::abs(last - ladder.rungs[0].sigma);
    }
    if (resolution_check && options.n > 2 && !v.is_zero() && !sol.is_zero()) {
        SigmaGridOptions coarse = options;
        coarse.n = options.n - 1;
        const SigmaGridResult c = sigma_grid(v, sol, ells.back(), coarse);
        ladder.error += std::abs(last - c.sigma);
    }
    return ladder;
}

} // namespace gp3
