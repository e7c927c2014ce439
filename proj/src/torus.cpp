#include "gp3/torus.hpp"

#include "gp3/rng.hpp"

#include <algorithm>
#include <cmath>

namespace gp3 {

ModeSet::ModeSet(int cutoff) : m_(cutoff), side_(2 * cutoff + 1)
{
    if (cutoff < 0) throw InputError("mode cutoff must be non-negative");
    for (int a = -m_; a <= m_; ++a)
        for (int b = -m_; b <= m_; ++b)
            for (int c = -m_; c <= m_; ++c) modes_.emplace_back(a, b, c);
}

int ModeSet::index(const Eigen::Vector3i& n) const
{
    if (n.cwiseAbs().maxCoeff() > m_) return -1;
    return ((n[0] + m_) * side_ + (n[1] + m_)) * side_ + (n[2] + m_);
}

TorusModel::TorusModel(const PotentialModel& v, const TorusOptions& options)
    : v_(v), modes_(options.cutoff), n_(options.particles), k_(options.low_momentum), cg_(options.cg)
{
    if (!(n_ > 0.0)) throw InputError("particle number must be positive");
    if (std::sqrt(n_) < 2.0 * v.support_radius())
        throw InputError("sqrt(N) must be at least twice the support radius of V");
    const int M = modes_.size();
    m3_ = static_cast<long>(M) * M * M;
    lattice_m_ = 2 * modes_.cutoff();

    const std::int64_t side = 2 * lattice_m_ + 1;
    std::int64_t s = 1;
    for (int d = 5; d >= 0; --d) {
        stride_[d] = s;
        s *= side;
    }
    table_.assign(static_cast<std::size_t>(s), cplx(0.0));
    centre_ = 0;
    for (int d = 0; d < 6; ++d) centre_ += lattice_m_ * stride_[d];
    const double scale = 1.0 / (n_ * n_);
    std::array<int, 6> i{};
    const FourierLattice lat = v.is_zero() ? FourierLattice{}
                                           : fourier_lattice(v, 2.0 * kPi / std::sqrt(n_), lattice_m_, options.fourier);
    for (std::int64_t idx = 0; !v.is_zero() && idx < s; ++idx) {
        std::int64_t r = idx;
        std::array<int, 6> neg{};
        for (int d = 0; d < 6; ++d) {
            i[d] = static_cast<int>(r / stride_[d]) - lattice_m_;
            r %= stride_[d];
            neg[d] = -i[d];
        }
        table_[idx] = scale * lat.at(neg);
    }

    std::map<std::array<int, 3>, int> sector_index;
    sector_of_.assign(m3_, -1);
    position_.assign(m3_, -1);
    low_.assign(M, 0);
    for (int i = 0; i < M; ++i) low_[i] = std::sqrt(modes_.k2(i)) <= k_ + 1e-12;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            for (int c = 0; c < M; ++c) {
                const Eigen::Vector3i p = modes_.mode(a) + modes_.mode(b) + modes_.mode(c);
                const std::array<int, 3> key{p[0], p[1], p[2]};
                auto [it, inserted] = sector_index.try_emplace(key, static_cast<int>(sectors_.size()));
                if (inserted) {
                    sectors_.emplace_back();
                    sectors_.back().total = p;
                }
                Sector& sec = sectors_[it->second];
                const std::size_t st = state(a, b, c);
                sector_of_[st] = it->second;
                position_[st] = static_cast<int>(sec.states.size());
                sec.states.push_back(st);
                sec.code.push_back(code(modes_.mode(b), modes_.mode(c)));
                sec.kinetic.push_back(modes_.k2(a) + modes_.k2(b) + modes_.k2(c));
                const int z = modes_.zero();
                if (a != z && b != z && c != z) sec.excited.push_back(position_[st]);
                if (low_[a] && low_[b] && low_[c]) sec.has_low = true;
            }
}

std::int64_t TorusModel::code(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const
{
    std::int64_t c = 0;
    for (int d = 0; d < 3; ++d) c += a[d] * stride_[d] + b[d] * stride_[d + 3];
    return c;
}

std::array<int, 3> TorusModel::modes_of(std::size_t s) const
{
    const std::size_t M = modes_.size();
    return {static_cast<int>(s / (M * M)), static_cast<int>((s / M) % M), static_cast<int>(s % M)};
}

TorusModel::Field TorusModel::basis(int i, int j, int k) const
{
    Field f = Field::Zero(m3_);
    f[state(i, j, k)] = 1.0;
    return f;
}

bool TorusModel::excited(std::size_t s) const
{
    const auto m = modes_of(s);
    const int z = modes_.zero();
    return m[0] != z && m[1] != z && m[2] != z;
}

bool TorusModel::low(std::size_t s) const
{
    const auto m = modes_of(s);
    return low_[m[0]] && low_[m[1]] && low_[m[2]];
}

cplx TorusModel::matrix_element(int i, int j, int k, int l, int m, int n) const
{
    const Eigen::Vector3i lhs = modes_.mode(i) + modes_.mode(j) + modes_.mode(k);
    const Eigen::Vector3i rhs = modes_.mode(l) + modes_.mode(m) + modes_.mode(n);
    if (lhs != rhs) return 0.0;
    return table_[centre_ + code(modes_.mode(j), modes_.mode(k)) - code(modes_.mode(m), modes_.mode(n))];
}

template <class Fn>
TorusModel::Field TorusModel::per_sector(const Field& x, bool low_only, Fn&& fn) const
{
    if (x.size() != m3_) throw InputError("field has the wrong dimension");
    Field y = Field::Zero(m3_);
    for (const Sector& s : sectors_) {
        if (low_only && !s.has_low) continue;
        Eigen::VectorXcd xs(s.states.size());
        bool any = false;
        for (std::size_t a = 0; a < s.states.size(); ++a) {
            xs[a] = x[s.states[a]];
            any = any || xs[a] != cplx(0.0);
        }
        if (!any) continue;
        const Eigen::VectorXcd ys = fn(s, xs);
        for (std::size_t a = 0; a < s.states.size(); ++a) y[s.states[a]] = ys[a];
    }
    return y;
}

Eigen::VectorXcd TorusModel::sector_potential(const Sector& s, const Eigen::VectorXcd& x) const
{
    const std::size_t n = s.states.size();
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(n);
    const cplx* t = table_.data() + centre_;
    for (std::size_t b = 0; b < n; ++b) {
        if (x[b] == cplx(0.0)) continue;
        const cplx xb = x[b];
        const std::int64_t cb = s.code[b];
        for (std::size_t a = 0; a < n; ++a) y[a] += t[s.code[a] - cb] * xb;
    }
    return y;
}

Eigen::VectorXcd TorusModel::sector_resolvent(const Sector& s, const Eigen::VectorXcd& x) const
{
    const std::size_t q = s.excited.size();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(s.states.size());
    if (q == 0) return out;
    std::vector<std::int64_t> codes(q);
    Eigen::VectorXd kin(q);
    Eigen::VectorXcd rhs(q);
    for (std::size_t a = 0; a < q; ++a) {
        codes[a] = s.code[s.excited[a]];
        kin[a] = s.kinetic[s.excited[a]];
        rhs[a] = x[s.excited[a]];
    }
    if (rhs.squaredNorm() == 0.0) return out;
    const cplx* t = table_.data() + centre_;
    const double diag = t[0].real();
    auto apply = [&](const Eigen::VectorXcd& u, Eigen::VectorXcd& w) {
        w.noalias() = kin.cast<cplx>().cwiseProduct(u);
        for (std::size_t b = 0; b < q; ++b) {
            const cplx ub = u[b];
            const std::int64_t cb = codes[b];
            for (std::size_t a = 0; a < q; ++a) w[a] += t[codes[a] - cb] * ub;
        }
    };
    auto precondition = [&](const Eigen::VectorXcd& r, Eigen::VectorXcd& z) {
        z = r.cwiseQuotient((kin.array() + diag).matrix().cast<cplx>());
    };
    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(q);
    const CgResult res = conjugate_gradient(apply, precondition, rhs, u, cg_);
    last_residual_ = std::max(last_residual_, res.relative_residual);
    if (!res.converged)
        throw InvariantError("cg_convergence", "torus resolvent did not converge");
    for (std::size_t a = 0; a < q; ++a) out[s.excited[a]] = u[a];
    return out;
}

TorusModel::Field TorusModel::apply_kinetic(const Field& x) const
{
    return per_sector(x, false, [](const Sector& s, const Eigen::VectorXcd& xs) {
        Eigen::VectorXcd y = xs;
        for (Eigen::Index a = 0; a < y.size(); ++a) y[a] *= s.kinetic[a];
        return y;
    });
}

TorusModel::Field TorusModel::apply_potential(const Field& x) const
{
    if (v_.is_zero()) return Field::Zero(m3_);
    return per_sector(x, false, [this](const Sector& s, const Eigen::VectorXcd& xs) { return sector_potential(s, xs); });
}

TorusModel::Field TorusModel::apply_hamiltonian(const Field& x) const
{
    return apply_kinetic(x) + apply_potential(x);
}

TorusModel::Field TorusModel::project_excited(const Field& x) const
{
    Field y = x;
    for (long s = 0; s < m3_; ++s)
        if (!excited(s)) y[s] = 0.0;
    return y;
}

TorusModel::Field TorusModel::project_low(const Field& x) const
{
    Field y = x;
    for (long s = 0; s < m3_; ++s)
        if (!low(s)) y[s] = 0.0;
    return y;
}

TorusModel::Field TorusModel::resolvent(const Field& x) const
{
    if (v_.is_zero()) {
        Field y = project_excited(x);
        for (long st = 0; st < m3_; ++st)
            if (y[st] != cplx(0.0)) y[st] /= sectors_[sector_of_[st]].kinetic[position_[st]];
        return y;
    }
    return per_sector(x, false, [this](const Sector& s, const Eigen::VectorXcd& xs) { return sector_resolvent(s, xs); });
}

TorusModel::Field TorusModel::apply_renormalized(const Field& x) const
{
    if (v_.is_zero()) return Field::Zero(m3_);
    return per_sector(x, false, [this](const Sector& s, const Eigen::VectorXcd& xs) {
        const Eigen::VectorXcd vx = sector_potential(s, xs);
        return Eigen::VectorXcd(vx - sector_potential(s, sector_resolvent(s, vx)));
    });
}

TorusModel::Field TorusModel::apply_T(const Field& x) const
{
    return x + resolvent(apply_potential(project_low(x)));
}

TorusModel::Field TorusModel::apply_T_adjoint(const Field& x) const
{
    return x + project_low(apply_potential(resolvent(x)));
}

TorusModel::Field TorusModel::apply_tilde_potential(const Field& x) const
{
    auto between = [this](const Field& z) { return Field(z - project_low(z) - project_excited(z)); };
    const Field px = project_low(x);
    const Field wpx = apply_renormalized(px);
    const Field vrest = apply_potential(x - px);
    Field y = project_low(wpx) + vrest - project_low(vrest) + between(wpx);
    y += project_low(apply_renormalized(between(x)));
    return y;
}

double TorusModel::block_identity_residual(const Field& psi) const
{
    const Field lhs = apply_hamiltonian(psi);
    const Field t = apply_T(psi);
    const Field rhs = apply_T_adjoint(apply_kinetic(t) + apply_tilde_potential(t));
    const double scale = lhs.norm();
    return scale > 0.0 ? (lhs - rhs).norm() / scale : (lhs - rhs).norm();
}

TorusModel::Field TorusModel::random_field(std::uint64_t seed) const
{
    Rng rng(seed);
    Field f(m3_);
    for (long s = 0; s < m3_; ++s) f[s] = cplx(rng.normal(), rng.normal());
    return f;
}

TorusModel::Field TorusModel::random_low_sector_field(std::uint64_t seed) const
{
    Rng rng(seed);
    Field f = Field::Zero(m3_);
    for (const Sector& s : sectors_)
        if (s.has_low)
            for (std::size_t st : s.states) f[st] = cplx(rng.normal(), rng.normal());
    return f;
}

LambdaTable lambda_table(const TorusModel& model)
{
    LambdaTable out;
    out.particles = model.particles();
    out.low_momentum = model.low_momentum();
    const ModeSet& ms = model.modes();
    const int z = ms.zero();
    for (int k = 0; k < ms.size(); ++k) {
        if (std::sqrt(ms.k2(k)) > model.low_momentum() + 1e-12) continue;
        TorusModel::Field src = model.basis(z, z, k) + model.basis(z, k, z) + model.basis(k, z, z);
        if (k == z) src = 3.0 * model.basis(z, z, z);
        const TorusModel::Field w = model.apply_renormalized(src);
        for (int l = 0; l < ms.size(); ++l) {
            const int kl = ms.index(ms.mode(k) - ms.mode(l));
            if (kl < 0) continue;
            out.values[{k, l}] = w[model.state(z, l, kl)] / 18.0;
        }
        if (k == z) {
            const TorusModel::Field t = model.apply_T(model.basis(z, z, z)) - model.basis(z, z, z);
            for (std::size_t s = 0; s < model.dimension(); ++s)
                if (model.excited(s) && t[s] != cplx(0.0)) out.t_column.emplace_back(model.modes_of(s), t[s]);
        }
    }
    return out;
}

double mu_N(const TorusModel& model, const LambdaTable& table)
{
    const ModeSet& ms = model.modes();
    const int z = ms.zero();
    const double n = model.particles();
    double sum = 0.0;
    for (int l = 0; l < ms.size(); ++l) {
        const double k2 = ms.k2(l);
        if (l == z || std::sqrt(k2) <= table.low_momentum + 1e-12) continue;
        sum += std::norm(table.at(z, l)) / k2;
    }
    return 9.0 * n * n * n * n * sum;
}

std::vector<double> lambda_decay_constants(const TorusModel& model, const LambdaTable& table)
{
    const ModeSet& ms = model.modes();
    const int z = ms.zero();
    const double n = model.particles();
    std::vector<double> out;
    for (int l = 0; l < ms.size(); ++l) {
        if (l == z) continue;
        out.push_back(std::abs(table.at(z, l)) * n * n * (1.0 + ms.k2(l) / n));
    }
    return out;
}

std::vector<double> t_decay_constants(const TorusModel& model, const LambdaTable& table)
{
    const ModeSet& ms = model.modes();
    const double n = model.particles();
    std::vector<double> out;
    for (const auto& [m, value] : table.t_column) {
        const double s = ms.k2(m[0]) + ms.k2(m[1]) + ms.k2(m[2]);
        out.push_back(std::abs(value) * n * n * s * std::pow(1.0 + s / n, 2));
    }
    return out;
}

std::vector<TorusRow> bm_convergence(const PotentialModel& v, const std::vector<double>& particles,
                                     const TorusOptions& base, double b_m_reference, int trials, std::uint64_t seed)
{
    std::vector<TorusRow> rows;
    for (double n : particles) {
        TorusOptions opt = base;
        opt.particles = n;
        const TorusModel model(v, opt);
        const LambdaTable table = lambda_table(model);
        TorusRow row;
        row.particles = n;
        row.cutoff = opt.cutoff;
        row.low_momentum = opt.low_momentum;
        const int z = model.modes().zero();
        row.lambda00 = table.at(z, z);
        row.coefficient = 6.0 * n * n * row.lambda00.real();
        row.b_m_reference = b_m_reference;
        row.deviation = std::abs(row.coefficient - b_m_reference);
        for (int t = 0; t < trials; ++t) {
            const TorusModel::Field psi = opt.cutoff <= 1 ? model.random_field(seed + t)
                                                          : model.random_low_sector_field(seed + t);
            row.block_residual = std::max(row.block_residual, model.block_identity_residual(psi));
        }
        row.mu_n = mu_N(model, table);
        rows.push_back(row);
    }
    return rows;
}

} // namespace gp3
