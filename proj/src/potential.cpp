#include "gp3/potential.hpp"

#include "gp3/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numeric>

namespace gp3 {

namespace {

constexpr double kE = 2.71828182845904523536;

Vec6 random_unit6(Rng& rng)
{
    Vec6 d;
    do {
        for (int i = 0; i < 6; ++i) d[i] = rng.normal();
    } while (d.norm() < 1e-12);
    return d.normalized();
}

// Operator 2-norm of a 2x2 matrix.
double norm2(const Eigen::Matrix2d& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m.transpose() * m);
    return std::sqrt(es.eigenvalues().maxCoeff());
}

const std::array<Eigen::Matrix2d, 6>& inverse_relabelings()
{
    static const std::array<Eigen::Matrix2d, 6> inv = [] {
        std::array<Eigen::Matrix2d, 6> out;
        for (int s = 0; s < 6; ++s) out[s] = relabelings()[s].inverse();
        return out;
    }();
    return inv;
}

const std::array<Eigen::Matrix2d, 6>& inverse_transposed_relabelings()
{
    static const std::array<Eigen::Matrix2d, 6> inv = [] {
        std::array<Eigen::Matrix2d, 6> out;
        for (int s = 0; s < 6; ++s) out[s] = relabelings()[s].inverse().transpose();
        return out;
    }();
    return inv;
}

} // namespace

const std::array<Eigen::Matrix2d, 6>& relabelings()
{
    static const std::array<Eigen::Matrix2d, 6> maps = [] {
        std::array<Eigen::Matrix2d, 6> m;
        m[0] << 1, 0, 0, 1;   // (a, b)
        m[1] << 0, 1, 1, 0;   // (b, a)
        m[2] << -1, 0, -1, 1; // (-a, b-a)
        m[3] << -1, 1, -1, 0; // (b-a, -a)
        m[4] << 0, -1, 1, -1; // (-b, a-b)
        m[5] << 1, -1, 0, -1; // (a-b, -b)
        return m;
    }();
    return maps;
}

// ---------------------------------------------------------------- BumpProfile

BumpProfile::BumpProfile(double radius) : radius_(radius)
{
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InputError("bump radius must be positive and finite");
    radial_peak_ = 0.0;
    for (int i = 1; i < 4000; ++i) {
        const double r = radius_ * i / 4000.0;
        radial_peak_ = std::max(radial_peak_, std::pow(r, 5) * radial(r));
    }
    radial_peak_ *= 1.01;
}

double BumpProfile::radial(double r) const
{
    const double t = r / radius_;
    if (t >= 1.0) return 0.0;
    return kE * std::exp(-1.0 / (1.0 - t * t));
}

double BumpProfile::integral() const
{
    static thread_local QuadratureRule rule;
    if (rule.size() == 0) rule = gauss_legendre(256, 0.0, 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double r = radius_ * rule.nodes[i];
        s += rule.weights[i] * std::pow(r, 5) * radial(r);
    }
    return kPi * kPi * kPi * s * radius_;
}

Vec6 BumpProfile::sample(Rng& rng) const
{
    double r;
    do {
        r = radius_ * rng.uniform();
    } while (rng.uniform() * radial_peak_ > std::pow(r, 5) * radial(r));
    return r * random_unit6(rng);
}

double BumpProfile::transform_direct(double k) const
{
    if (k == 0.0) return integral();
    static thread_local QuadratureRule rule;
    if (rule.size() == 0) rule = gauss_legendre(256, 0.0, 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double r = radius_ * rule.nodes[i];
        s += rule.weights[i] * radial(r) * std::cyl_bessel_j(2.0, k * r) * r * r * r;
    }
    return 8.0 * kPi * kPi * kPi * s * radius_ / (k * k);
}

std::optional<double> BumpProfile::radial_transform(double k) const
{
    // |k| up to 80 / radius is tabulated once and interpolated with 4-point Lagrange.
    static std::mutex mutex;
    {
        std::lock_guard<std::mutex> lock(mutex);
        if (table_.empty()) {
            table_step_ = 0.004 / radius_;
            const int count = static_cast<int>(80.0 / radius_ / table_step_) + 4;
            table_.resize(count);
            for (int i = 0; i < count; ++i) table_[i] = transform_direct(i * table_step_);
        }
    }
    const double u = k / table_step_;
    const int i0 = static_cast<int>(u);
    if (i0 < 1 || i0 + 2 >= static_cast<int>(table_.size())) return transform_direct(k);
    const double t = u - i0;
    const double fm = table_[i0 - 1], f0 = table_[i0], f1 = table_[i0 + 1], f2 = table_[i0 + 2];
    return -t * (t - 1) * (t - 2) / 6.0 * fm + (t + 1) * (t - 1) * (t - 2) / 2.0 * f0
           - (t + 1) * t * (t - 2) / 2.0 * f1 + (t + 1) * t * (t - 1) / 6.0 * f2;
}

// ---------------------------------------------------------------- TableProfile

TableProfile::TableProfile(int points_per_dim, double radius, std::vector<double> values)
    : n_(points_per_dim), radius_(radius), values_(std::move(values))
{
    if (n_ < 2) throw InputError("table needs at least 2 points per dimension");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InputError("table support_radius must be positive");
    std::size_t total = 1;
    for (int d = 0; d < 6; ++d) total *= static_cast<std::size_t>(n_);
    if (values_.size() != total) throw InputError("table payload size does not match points-per-dim^6");
    for (double v : values_)
        if (!std::isfinite(v)) throw InputError("table contains non-finite values");
    step_ = 2.0 * radius_ / (n_ - 1);

    // Per-cell maxima drive the exact rejection sampler and the support radius.
    const int c = n_ - 1;
    double support = 0.0;
    double cumulative = 0.0;
    const double cell_volume = std::pow(step_, 6);
    std::array<int, 6> idx{};
    std::size_t cells = 1;
    for (int d = 0; d < 6; ++d) cells *= static_cast<std::size_t>(c);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::size_t rem = cell;
        for (int d = 5; d >= 0; --d) {
            idx[d] = static_cast<int>(rem % c);
            rem /= c;
        }
        double mx = 0.0, sum = 0.0;
        for (int corner = 0; corner < 64; ++corner) {
            std::size_t node = 0;
            for (int d = 0; d < 6; ++d) node = node * n_ + idx[d] + ((corner >> d) & 1);
            mx = std::max(mx, values_[node]);
            sum += values_[node];
        }
        if (mx <= 0.0) continue;
        integral_ += sum / 64.0 * cell_volume;
        double far = 0.0;
        for (int d = 0; d < 6; ++d) {
            const double lo = std::abs(-radius_ + idx[d] * step_);
            const double hi = std::abs(-radius_ + (idx[d] + 1) * step_);
            far += std::max(lo, hi) * std::max(lo, hi);
        }
        support = std::max(support, std::sqrt(far));
        cumulative += mx * cell_volume;
        cell_index_.push_back(cell);
        cell_max_.push_back(mx);
        cell_cdf_.push_back(cumulative);
    }
    radius_ = support > 0.0 ? support : radius_;
}

double TableProfile::operator()(const Vec6& x) const
{
    std::array<int, 6> i0{};
    std::array<double, 6> t{};
    const double r0 = -(step_ * (n_ - 1)) / 2.0;
    for (int d = 0; d < 6; ++d) {
        const double u = (x[d] - r0) / step_;
        if (u < 0.0 || u > n_ - 1) return 0.0;
        int i = std::min(static_cast<int>(u), n_ - 2);
        i0[d] = i;
        t[d] = u - i;
    }
    double v = 0.0;
    for (int corner = 0; corner < 64; ++corner) {
        double w = 1.0;
        std::size_t node = 0;
        for (int d = 0; d < 6; ++d) {
            const int bit = (corner >> d) & 1;
            w *= bit ? t[d] : 1.0 - t[d];
            node = node * n_ + i0[d] + bit;
        }
        if (w != 0.0) v += w * values_[node];
    }
    return v;
}

double TableProfile::integral() const { return integral_; }

Vec6 TableProfile::sample(Rng& rng) const
{
    if (cell_cdf_.empty()) throw InputError("cannot sample a zero table");
    const double r0 = -(step_ * (n_ - 1)) / 2.0;
    const int c = n_ - 1;
    while (true) {
        const double u = rng.uniform() * cell_cdf_.back();
        const auto it = std::upper_bound(cell_cdf_.begin(), cell_cdf_.end(), u);
        const std::size_t k = std::min<std::size_t>(it - cell_cdf_.begin(), cell_cdf_.size() - 1);
        std::size_t rem = cell_index_[k];
        Vec6 x;
        for (int d = 5; d >= 0; --d) {
            const int i = static_cast<int>(rem % c);
            rem /= c;
            x[d] = r0 + (i + rng.uniform()) * step_;
        }
        if (rng.uniform() * cell_max_[k] <= (*this)(x)) return x;
    }
}

// ------------------------------------------------------------- FunctionProfile

FunctionProfile::FunctionProfile(std::function<double(const Vec6&)> fn, double support_radius, double bound,
                                 std::string label)
    : fn_(std::move(fn)), radius_(support_radius), bound_(bound), label_(std::move(label))
{
    if (!(support_radius > 0.0) || !std::isfinite(support_radius))
        throw InputError("profile support radius must be positive and finite");
}

double FunctionProfile::integral() const
{
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    if (!integral_) {
        const int n = 12;
        const double h = 2.0 * radius_ / n;
        double s = 0.0;
        Vec6 x;
        std::array<int, 6> i{};
        for (std::size_t cell = 0; cell < 2985984; ++cell) {
            std::size_t rem = cell;
            for (int d = 5; d >= 0; --d) {
                i[d] = static_cast<int>(rem % n);
                rem /= n;
                x[d] = -radius_ + (i[d] + 0.5) * h;
            }
            s += (*this)(x);
        }
        integral_ = s * std::pow(h, 6);
    }
    return *integral_;
}

Vec6 FunctionProfile::sample(Rng& rng) const
{
    while (true) {
        const Vec6 x = radius_ * std::pow(rng.uniform(), 1.0 / 6.0) * random_unit6(rng);
        if (rng.uniform() * bound_ <= (*this)(x)) return x;
    }
}

// -------------------------------------------------------------- PotentialModel

PotentialModel::PotentialModel(std::shared_ptr<const Profile> base, double coupling, bool symmetrized)
    : base_(std::move(base)), coupling_(coupling), symmetrized_(symmetrized)
{
    if (!base_) throw InputError("potential needs a profile");
    if (!(coupling >= 0.0) || !std::isfinite(coupling)) throw InputError("coupling must be non-negative");
    support_radius_ = base_->support_radius();
    if (symmetrized_) {
        double worst = 0.0;
        for (const auto& m : inverse_relabelings()) worst = std::max(worst, norm2(m));
        support_radius_ *= worst;
    }
}

double PotentialModel::base_value(const Vec6& x) const { return (*base_)(x); }

double PotentialModel::operator()(const Vec6& x) const
{
    if (coupling_ == 0.0) return 0.0;
    if (!symmetrized_) return coupling_ * (*base_)(x);
    double s = 0.0;
    for (const auto& m : relabelings()) s += (*base_)(apply_relabeling(m, x));
    return coupling_ * s / 6.0;
}

PotentialModel PotentialModel::scaled(double lambda) const
{
    return PotentialModel(base_, coupling_ * lambda, symmetrized_);
}

double PotentialModel::integral() const { return coupling_ == 0.0 ? 0.0 : coupling_ * base_->integral(); }

Vec6 PotentialModel::sample(Rng& rng) const
{
    if (coupling_ == 0.0) throw InputError("cannot sample the zero potential");
    const Vec6 y = base_->sample(rng);
    if (!symmetrized_) return y;
    const int s = static_cast<int>(rng.uniform() * 6.0);
    return apply_relabeling(inverse_relabelings()[std::min(s, 5)], y);
}

std::optional<cplx> PotentialModel::exact_transform(const Vec6& k) const
{
    if (!base_->radial_transform(0.0)) return std::nullopt;
    if (coupling_ == 0.0) return cplx(0.0);
    if (!symmetrized_) return cplx(coupling_ * *base_->radial_transform(k.norm()));
    double s = 0.0;
    for (const auto& m : inverse_transposed_relabelings())
        s += *base_->radial_transform(apply_relabeling(m, k).norm());
    return cplx(coupling_ * s / 6.0);
}

PotentialModel symmetrize(std::shared_ptr<const Profile> profile, double coupling)
{
    if (!profile) throw InputError("symmetrize: null profile");
    const double r = profile->support_radius();
    if (!(r > 0.0) || !std::isfinite(r)) throw InputError("symmetrize: profile support is not bounded");
    Rng rng(0x5eedULL);
    for (int i = 0; i < 2000; ++i) {
        const Vec6 x = r * std::pow(rng.uniform(), 1.0 / 6.0) * random_unit6(rng);
        const double v = (*profile)(x);
        if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("symmetrize: profile has a negative or non-finite sample");
    }
    return PotentialModel(std::move(profile), coupling, true);
}

PotentialModel default_bump(double coupling)
{
    return symmetrize(std::make_shared<BumpProfile>(1.0), coupling);
}

// -------------------------------------------------------------------- validate

Certification validate(const PotentialModel& v, const ValidateOptions& options)
{
    Certification cert;
    cert.symmetry_tolerance = options.symmetry_tolerance;
    Rng rng(options.seed);
    const double r = v.support_radius();

    std::vector<Vec6> inside = options.extra_points;
    for (int i = 0; i < options.random_points; ++i)
        inside.push_back(r * std::pow(rng.uniform(), 1.0 / 6.0) * random_unit6(rng));

    static const char* kImageNames[6] = {"(a,b)", "(b,a)", "(-a,b-a)", "(b-a,-a)", "(-b,a-b)", "(a-b,-b)"};
    Violation worst_neg{"non_negative", Vec6::Zero(), 0.0};
    Violation worst_support{"compact_support", Vec6::Zero(), 0.0};
    std::array<Violation, 6> worst_sym;
    for (int s = 0; s < 6; ++s) worst_sym[s] = {std::string("symmetry:") + kImageNames[s], Vec6::Zero(), 0.0};

    for (const Vec6& x : inside) {
        const double vx = v(x);
        if (vx < 0.0 || !std::isfinite(vx)) {
            const double mag = std::isfinite(vx) ? -vx : 1e300;
            if (mag > worst_neg.magnitude) worst_neg = {"non_negative", x, mag};
        }
        for (int s = 1; s < 6; ++s) {
            const double diff = std::abs(v(apply_relabeling(relabelings()[s], x)) - vx);
            if (diff > worst_sym[s].magnitude) worst_sym[s] = {worst_sym[s].identity, x, diff};
        }
        ++cert.points_checked;
    }
    for (int i = 0; i < options.random_points; ++i) {
        const Vec6 x = r * (1.0 + rng.uniform()) * random_unit6(rng);
        const double vx = v(x);
        if (vx != 0.0 && std::abs(vx) > worst_support.magnitude) worst_support = {"compact_support", x, std::abs(vx)};
        ++cert.points_checked;
    }

    auto record = [&](const Violation& viol, double tol) {
        cert.max_violation = std::max(cert.max_violation, viol.magnitude);
        if (viol.magnitude > tol) {
            cert.pass = false;
            cert.failures.push_back(viol);
        }
    };
    record(worst_neg, 0.0);
    record(worst_support, 0.0);
    for (int s = 1; s < 6; ++s) record(worst_sym[s], options.symmetry_tolerance);
    return cert;
}

// --------------------------------------------------------------------- fourier

namespace {

struct SupportSamples {
    std::vector<Vec6> points;
    std::vector<double> weighted; // cell volume * V
};

SupportSamples support_samples(const PotentialModel& v, int n)
{
    SupportSamples s;
    const double r = v.support_radius();
    const double h = 2.0 * r / n;
    const double w = std::pow(h, 6);
    std::size_t cells = 1;
    for (int d = 0; d < 6; ++d) cells *= static_cast<std::size_t>(n);
    Vec6 x;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::size_t rem = cell;
        for (int d = 5; d >= 0; --d) {
            x[d] = -r + (static_cast<double>(rem % n) + 0.5) * h;
            rem /= n;
        }
        if (x.squaredNorm() >= r * r) continue;
        const double val = v(x);
        if (val > 0.0) {
            s.points.push_back(x);
            s.weighted.push_back(w * val);
        }
    }
    return s;
}

std::vector<cplx> quadrature_values(const PotentialModel& v, const std::vector<Vec6>& waves, int n)
{
    const SupportSamples s = support_samples(v, n);
    std::vector<cplx> out(waves.size());
    for (std::size_t k = 0; k < waves.size(); ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < s.points.size(); ++j) {
            const double phase = waves[k].dot(s.points[j]);
            re += s.weighted[j] * std::cos(phase);
            im -= s.weighted[j] * std::sin(phase);
        }
        out[k] = cplx(re, im);
    }
    return out;
}

int coarse_order(int n) { return std::max(4, n - std::max(2, n / 4)); }

std::vector<cplx> lattice_quadrature(const PotentialModel& v, double step, int m, int n)
{
    const double r = v.support_radius();
    const double h = 2.0 * r / n;
    const int side = 2 * m + 1;
    std::vector<cplx> basis(static_cast<std::size_t>(side) * n);
    for (int j = 0; j < side; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = -r + (i + 0.5) * h;
            basis[static_cast<std::size_t>(j) * n + i] = std::polar(1.0, -step * (j - m) * x);
        }

    std::size_t total = 1;
    for (int d = 0; d < 6; ++d) total *= static_cast<std::size_t>(n);
    std::vector<cplx> cur(total);
    const double w = std::pow(h, 6);
    Vec6 x;
    for (std::size_t cell = 0; cell < total; ++cell) {
        std::size_t rem = cell;
        for (int d = 5; d >= 0; --d) {
            x[d] = -r + (static_cast<double>(rem % n) + 0.5) * h;
            rem /= n;
        }
        cur[cell] = x.squaredNorm() >= r * r ? 0.0 : w * v(x);
    }

    // Contract one axis at a time: [A][n][B] -> [A][side][B].
    std::size_t a = 1;
    for (int axis = 0; axis < 6; ++axis) {
        std::size_t b = 1;
        for (int d = axis + 1; d < 6; ++d) b *= static_cast<std::size_t>(n);
        std::vector<cplx> next(a * side * b, cplx(0.0));
        for (std::size_t ia = 0; ia < a; ++ia)
            for (int i = 0; i < n; ++i) {
                const cplx* src = &cur[(ia * n + i) * b];
                for (int j = 0; j < side; ++j) {
                    const cplx e = basis[static_cast<std::size_t>(j) * n + i];
                    cplx* dst = &next[(ia * side + j) * b];
                    for (std::size_t ib = 0; ib < b; ++ib) dst[ib] += e * src[ib];
                }
            }
        cur.swap(next);
        a *= side;
    }
    return cur;
}

} // namespace

FourierTable fourier(const PotentialModel& v, const std::vector<Vec6>& waves, const FourierOptions& options)
{
    FourierTable table;
    table.waves = waves;
    const bool exact_available = v.exact_transform(Vec6::Zero()).has_value();
    const bool use_exact = options.method == FourierMethod::exact
                           || (options.method == FourierMethod::automatic && exact_available);
    if (use_exact) {
        if (!exact_available) throw InputError("exact Fourier transform needs a radial base profile");
        table.method = "exact";
        table.values.reserve(waves.size());
        for (const Vec6& k : waves) table.values.push_back(*v.exact_transform(k));
        return table;
    }
    table.method = "quadrature";
    if (v.is_zero()) {
        table.values.assign(waves.size(), cplx(0.0));
        return table;
    }
    table.values = quadrature_values(v, waves, options.order);
    if (options.estimate_error) {
        const std::vector<cplx> coarse = quadrature_values(v, waves, coarse_order(options.order));
        for (std::size_t k = 0; k < waves.size(); ++k)
            table.error_estimate = std::max(table.error_estimate, std::abs(table.values[k] - coarse[k]));
    }
    return table;
}

FourierLattice fourier_lattice(const PotentialModel& v, double step, int m, const FourierOptions& options)
{
    FourierLattice lat;
    lat.step = step;
    lat.m = m;
    const int side = 2 * m + 1;
    std::size_t total = 1;
    for (int d = 0; d < 6; ++d) total *= static_cast<std::size_t>(side);

    const bool exact_available = v.exact_transform(Vec6::Zero()).has_value();
    const bool use_exact = options.method == FourierMethod::exact
                           || (options.method == FourierMethod::automatic && exact_available);
    if (v.is_zero()) {
        lat.values.assign(total, cplx(0.0));
        lat.method = use_exact ? "exact" : "quadrature";
        return lat;
    }
    if (use_exact) {
        if (!exact_available) throw InputError("exact Fourier transform needs a radial base profile");
        lat.method = "exact";
        lat.values.resize(total);
        Vec6 k;
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rem = idx;
            for (int d = 5; d >= 0; --d) {
                k[d] = step * (static_cast<double>(rem % side) - m);
                rem /= side;
            }
            lat.values[idx] = *v.exact_transform(k);
        }
        return lat;
    }
    lat.method = "quadrature";
    lat.values = lattice_quadrature(v, step, m, options.order);
    return lat;
}

// ----------------------------------------------------------------- table files

namespace {
constexpr char kPotMagic[8] = {'G', 'P', '3', 'P', 'O', 'T', '1', '\0'};

static_assert(std::endian::native == std::endian::little, "table files are little-endian");
} // namespace

std::shared_ptr<TableProfile> load_table(const std::filesystem::path& path, double radius)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open potential table " + path.string());
    char magic[8];
    std::uint64_t header[3];
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || std::memcmp(magic, kPotMagic, 8) != 0) throw InputError("bad magic in potential table " + path.string());
    const std::uint64_t n = header[0], dims = header[1], bytes = header[2];
    if (dims != 6) throw InputError("potential table must have dims = 6");
    if (n < 2 || n > 64) throw InputError("potential table points-per-dim out of range");
    std::uint64_t count = 1;
    for (int d = 0; d < 6; ++d) count *= n;
    if (bytes != count * sizeof(double)) throw InputError("potential table payload length mismatch");
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw InputError("truncated potential table " + path.string());
    return std::make_shared<TableProfile>(static_cast<int>(n), radius, std::move(values));
}

void save_table(const std::filesystem::path& path, int points_per_dim, const std::vector<double>& values)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write potential table " + path.string());
    std::uint64_t header[3] = {static_cast<std::uint64_t>(points_per_dim), 6, values.size() * sizeof(double)};
    out.write(kPotMagic, 8);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
}

} // namespace gp3
