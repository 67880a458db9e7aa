#include "hetphase/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hetphase {

namespace {

std::string describe(const Vec &v) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (int i = 0; i < v.dim(); ++i) os << (i ? ", " : "") << v[i];
    os << ')';
    return os.str();
}

double frac(double y) { return y - std::floor(y); }

// Enumerate a tensor lattice of `per_axis` points per axis in `dim` dimensions.
template <class Fn>
void for_each_lattice_point(int dim, int per_axis, double lo, double hi, Fn &&fn) {
    const double step = per_axis > 1 ? (hi - lo) / (per_axis - 1) : 0.0;
    std::array<int, kMaxDim> idx{};
    Vec p(dim);
    while (true) {
        for (int i = 0; i < dim; ++i) p[i] = lo + step * idx[i];
        fn(p);
        int k = 0;
        while (k < dim && ++idx[k] == per_axis) idx[k++] = 0;
        if (k == dim) break;
    }
}

} // namespace

// --- BaseWell --------------------------------------------------------------

BaseWell::BaseWell(Kind kind, Vec a, Vec b, double anisotropy)
    : kind_(kind), a_(a), b_(b), anisotropy_(anisotropy) {
    if (a.dim() != b.dim() || a.dim() < 1)
        throw std::invalid_argument("BaseWell: wells must share a positive dimension");
    if (kind == Kind::QuarticScalar && a.dim() != 1)
        throw std::invalid_argument("BaseWell: quartic_scalar requires d = 1");
    if (kind == Kind::QuadraticProduct && !(anisotropy > 0.0))
        throw std::invalid_argument("BaseWell: anisotropy weight must be positive");
}

BaseWell BaseWell::from_name(std::string_view name, Vec a, Vec b, double anisotropy) {
    if (name == "quartic_scalar") return BaseWell(Kind::QuarticScalar, a, b, anisotropy);
    if (name == "quartic_vector") return BaseWell(Kind::QuarticVector, a, b, anisotropy);
    if (name == "quadratic_product") return BaseWell(Kind::QuadraticProduct, a, b, anisotropy);
    throw std::invalid_argument("unknown base well '" + std::string(name) + "'");
}

std::string BaseWell::name() const {
    switch (kind_) {
    case Kind::QuarticScalar: return "quartic_scalar";
    case Kind::QuarticVector: return "quartic_vector";
    case Kind::QuadraticProduct: return "quadratic_product";
    }
    return {};
}

double BaseWell::weight_max() const { return kind_ == Kind::QuadraticProduct && dim() > 1 ? std::max(1.0, anisotropy_) : 1.0; }
double BaseWell::weight_min() const { return kind_ == Kind::QuadraticProduct && dim() > 1 ? std::min(1.0, anisotropy_) : 1.0; }

double BaseWell::quad(const Vec &p, const Vec &c) const {
    double s = 0.0;
    for (int i = 0; i < p.dim(); ++i) {
        const double t = p[i] - c[i];
        s += weight(i) * t * t;
    }
    return s;
}

double BaseWell::value(const Vec &p) const { return quad(p, a_) * quad(p, b_); }

Vec BaseWell::gradient(const Vec &p) const {
    const double qa = quad(p, a_), qb = quad(p, b_);
    Vec g(p.dim());
    for (int i = 0; i < p.dim(); ++i)
        g[i] = 2.0 * weight(i) * ((p[i] - a_[i]) * qb + (p[i] - b_[i]) * qa);
    return g;
}

double BaseWell::gradient_bound(double radius) const {
    const double da = radius + a_.norm(), db = radius + b_.norm();
    const double w = weight_max();
    return 2.0 * w * w * da * db * (da + db);
}

double BaseWell::radial_lower_bound(double r) const {
    const double da = std::max(0.0, r - a_.norm()), db = std::max(0.0, r - b_.norm());
    const double w = weight_min();
    return w * w * da * da * db * db;
}

double BaseWell::curvature_bound(double radius) const {
    const double da = radius + a_.norm(), db = radius + b_.norm();
    const double w = weight_max();
    return w * w * (2.0 * da * da + 2.0 * db * db + 8.0 * da * db);
}

// --- Modulation ------------------------------------------------------------

Modulation Modulation::constant(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("constant modulation must be finite");
    return Modulation(Kind::Constant, value, value);
}

Modulation Modulation::sine(double amplitude) {
    if (!std::isfinite(amplitude)) throw std::invalid_argument("sine amplitude must be finite");
    return Modulation(Kind::Sine, amplitude, 0.0);
}

Modulation Modulation::checkerboard(double v1, double v2) {
    if (!std::isfinite(v1) || !std::isfinite(v2)) throw std::invalid_argument("checkerboard values must be finite");
    return Modulation(Kind::Checkerboard, v1, v2);
}

double Modulation::operator()(const Vec &y) const {
    switch (kind_) {
    case Kind::Constant: return v1_;
    case Kind::Sine: return 1.0 + v1_ * std::sin(2.0 * std::numbers::pi * frac(y[0]));
    case Kind::Checkerboard: {
        int parity = 0;
        for (int i = 0; i < y.dim(); ++i) parity += static_cast<int>(std::floor(2.0 * frac(y[i])));
        return (parity % 2 == 0) ? v1_ : v2_;
    }
    }
    return 0.0;
}

double Modulation::cell_average(const Vec &lo, const Vec &hi) const {
    switch (kind_) {
    case Kind::Constant: return v1_;
    case Kind::Sine: {
        const double w = hi[0] - lo[0];
        if (w <= 0.0) return (*this)(lo);
        const double tau = 2.0 * std::numbers::pi;
        return 1.0 + v1_ * (std::cos(tau * lo[0]) - std::cos(tau * hi[0])) / (tau * w);
    }
    case Kind::Checkerboard: {
        // m = mean + (v1 - v2)/2 * prod_i s(y_i), s = +1 on [0, 1/2), -1 on [1/2, 1); S' = s.
        auto S = [](double t) {
            const double f = frac(t);
            return f <= 0.5 ? f : 1.0 - f;
        };
        double prod = 1.0;
        for (int i = 0; i < lo.dim(); ++i) {
            const double w = hi[i] - lo[i];
            prod *= w > 0.0 ? (S(hi[i]) - S(lo[i])) / w : (frac(lo[i]) < 0.5 ? 1.0 : -1.0);
        }
        return 0.5 * (v1_ + v2_) + 0.5 * (v1_ - v2_) * prod;
    }
    }
    return 0.0;
}

double Modulation::mean() const {
    switch (kind_) {
    case Kind::Constant: return v1_;
    case Kind::Sine: return 1.0;
    case Kind::Checkerboard: return 0.5 * (v1_ + v2_);
    }
    return 0.0;
}

double Modulation::min() const {
    switch (kind_) {
    case Kind::Constant: return v1_;
    case Kind::Sine: return 1.0 - std::abs(v1_);
    case Kind::Checkerboard: return std::min(v1_, v2_);
    }
    return 0.0;
}

double Modulation::max() const {
    switch (kind_) {
    case Kind::Constant: return v1_;
    case Kind::Sine: return 1.0 + std::abs(v1_);
    case Kind::Checkerboard: return std::max(v1_, v2_);
    }
    return 0.0;
}

std::string Modulation::name() const {
    switch (kind_) {
    case Kind::Constant: return "constant";
    case Kind::Sine: return "sine";
    case Kind::Checkerboard: return "checkerboard";
    }
    return {};
}

std::vector<Vec> Modulation::extremal_points(int space_dim) const {
    std::vector<Vec> pts;
    Vec y(space_dim, 0.25);
    switch (kind_) {
    case Kind::Constant: pts.push_back(y); break;
    case Kind::Sine:
        pts.push_back(y);
        y[0] = 0.75;
        pts.push_back(y);
        break;
    case Kind::Checkerboard:
        pts.push_back(y); // parity 0 -> v1
        y[0] = 0.75;
        pts.push_back(y); // parity 1 -> v2
        break;
    }
    return pts;
}

Vec reduce_to_cell(const Vec &y) {
    Vec r(y.dim());
    for (int i = 0; i < y.dim(); ++i) r[i] = frac(y[i]);
    return r;
}

// --- PotentialSpec ---------------------------------------------------------

PotentialSpec::PotentialSpec(BaseWell base, Modulation modulation, int space_dim, double growth_exponent,
                             double growth_constant, bool lower_witness)
    : base_(std::move(base)), modulation_(modulation), space_dim_(space_dim), growth_exponent_(growth_exponent),
      growth_constant_(growth_constant), lower_witness_(lower_witness) {
    if (space_dim < 1 || space_dim > kMaxDim) throw std::invalid_argument("PotentialSpec: space dimension must be 1..3");
    if (growth_exponent < 2.0) throw std::invalid_argument("PotentialSpec: growth exponent q must be >= 2");
    if (growth_constant_ <= 0.0) {
        // Bounds of the multiplicative quartic family with q = 4.
        const double rho = std::max(base_.a().norm(), base_.b().norm());
        const double wmax = base_.kind() == BaseWell::Kind::QuadraticProduct ? std::max(1.0, base_.anisotropy()) : 1.0;
        const double wmin = base_.kind() == BaseWell::Kind::QuadraticProduct ? std::min(1.0, base_.anisotropy()) : 1.0;
        const double mmin = modulation_.min();
        const double lower = mmin > 0.0 ? 16.0 / (mmin * wmin * wmin) : std::numeric_limits<double>::infinity();
        const double upper = 8.0 * wmax * wmax * std::max(modulation_.max(), 0.0) * std::max(1.0, std::pow(rho, 4));
        growth_constant_ = std::max({1.0, lower, 4.0 * rho * rho, upper});
    }
}

std::optional<double> PotentialSpec::lower_witness(const Vec &p) const {
    if (!lower_witness_) return std::nullopt;
    return modulation_.min() * base_.value(p);
}

double eval_W(const PotentialSpec &spec, const Vec &x, const Vec &p) { return spec.value(x, p); }
Vec eval_gradW_p(const PotentialSpec &spec, const Vec &x, const Vec &p) { return spec.gradient(x, p); }

// --- Truncation ------------------------------------------------------------

TruncatedPotential::TruncatedPotential(PotentialSpec inner, double radius, double cap)
    : inner_(std::move(inner)), radius_(radius), cap_(cap) {
    if (!(radius > 0.0) || !(cap > 0.0)) throw std::invalid_argument("TruncatedPotential: radius and cap must be positive");
}

Vec TruncatedPotential::gradient(const Vec &x, const Vec &p) const {
    const double w = inner_.value(x, p);
    if (w < cap_) return inner_.gradient(x, p);
    return Vec(p.dim());
}

double TruncatedPotential::sublevel_radius() const {
    const double mmin = inner_.modulation().min();
    if (!(mmin > 0.0)) return std::numeric_limits<double>::infinity();
    const BaseWell &base = inner_.base();
    double lo = std::max(base.a().norm(), base.b().norm());
    double hi = std::max(2.0 * lo, 1.0);
    while (mmin * base.radial_lower_bound(hi) < cap_) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mmin * base.radial_lower_bound(mid) >= cap_ ? hi : lo) = mid;
    }
    return hi;
}

double TruncatedPotential::lipschitz() const { return inner_.lipschitz(sublevel_radius()); }

double default_truncation_radius(const PotentialSpec &spec) {
    return 2.0 * (spec.a().norm() + spec.b().norm() + distance(spec.a(), spec.b()));
}

TruncatedPotential truncate(const PotentialSpec &spec, double radius, const TruncationOptions &opts) {
    const double needed = std::max(spec.a().norm(), spec.b().norm());
    if (!(radius >= needed))
        throw std::invalid_argument("truncate: radius " + std::to_string(radius) + " would cut the wells (needs >= " +
                                    std::to_string(needed) + ")");
    if (opts.safety_factor < 1.0) throw std::invalid_argument("truncate: safety factor must be >= 1");
    if (opts.cell_samples < 1 || opts.p_samples < 2) throw std::invalid_argument("truncate: sample counts too small");

    // W = m(x) W0(p) with both factors nonnegative, so the lattice max factorizes.
    double m_max = 0.0;
    const int n = spec.space_dim();
    const double half = 0.5 / opts.cell_samples;
    for_each_lattice_point(n, opts.cell_samples, half, 1.0 - half,
                           [&](const Vec &y) { m_max = std::max(m_max, spec.modulation()(y)); });
    double w0_max = 0.0;
    for_each_lattice_point(spec.state_dim(), opts.p_samples, -radius, radius, [&](const Vec &p) {
        if (p.norm() <= radius) w0_max = std::max(w0_max, spec.base().value(p));
    });
    for (const Vec *w : {&spec.a(), &spec.b()}) w0_max = std::max(w0_max, spec.base().value(*w));
    const double cap = opts.safety_factor * m_max * w0_max;
    if (!(cap > 0.0)) throw std::invalid_argument("truncate: potential vanishes on the whole ball, cap would be 0");
    return TruncatedPotential(spec, radius, cap);
}

// --- Hypothesis validation ---------------------------------------------------

bool ValidationReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const HypothesisCheck &c) { return c.passed; });
}

const HypothesisCheck &ValidationReport::check(std::string_view name) const {
    for (const auto &c : checks)
        if (c.name == name) return c;
    throw std::out_of_range("no hypothesis check named " + std::string(name));
}

ValidationReport validate_hypotheses(const PotentialSpec &spec, const ValidationOptions &opts) {
    if (opts.x_samples <= 0 || opts.p_grid <= 1 || opts.random_pairs <= 0)
        throw std::invalid_argument("validate_hypotheses: sample budget must be positive");

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = spec.space_dim(), d = spec.state_dim();
    const double rho = std::max(spec.a().norm(), spec.b().norm());

    std::vector<Vec> xs = spec.modulation().extremal_points(n);
    for (int s = 0; s < opts.x_samples; ++s) {
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = unit(rng);
        xs.push_back(x);
    }
    auto random_ball = [&](double radius) {
        Vec p(d);
        do {
            for (int i = 0; i < d; ++i) p[i] = radius * (2.0 * unit(rng) - 1.0);
        } while (p.norm() > radius);
        return p;
    };

    ValidationReport report;

    // dyadic sample points make x + e_i exactly representable.
    {
        HypothesisCheck c;
        c.name = "periodicity";
        std::uniform_int_distribution<long> dyadic(-(1L << 22), 1L << 22);
        for (int s = 0; s < opts.random_pairs && c.passed; ++s) {
            Vec x(n);
            for (int i = 0; i < n; ++i) x[i] = std::ldexp(static_cast<double>(dyadic(rng)), -20);
            const Vec p = random_ball(2.0 * (1.0 + rho));
            for (int i = 0; i < n; ++i) {
                Vec shifted = x;
                shifted[i] += 1.0;
                if (spec.value(shifted, p) != spec.value(x, p)) {
                    c.passed = false;
                    c.witness = "x=" + describe(x) + " axis=" + std::to_string(i) + " p=" + describe(p);
                    break;
                }
            }
        }
        report.checks.push_back(c);
    }

    // Zero-set scan on a p-grid around the wells.
    Vec lo(d), hi(d);
    const double margin = std::max(1.0, distance(spec.a(), spec.b()));
    for (int i = 0; i < d; ++i) {
        lo[i] = std::min(spec.a()[i], spec.b()[i]) - margin;
        hi[i] = std::max(spec.a()[i], spec.b()[i]) + margin;
    }
    const int per_axis = d == 3 ? std::min(opts.p_grid, 41) : opts.p_grid;
    double spacing = 0.0;
    for (int i = 0; i < d; ++i) spacing = std::max(spacing, (hi[i] - lo[i]) / (per_axis - 1));
    auto scan_grid = [&](auto &&fn) {
        std::array<int, kMaxDim> idx{};
        Vec p(d);
        while (true) {
            for (int i = 0; i < d; ++i) p[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (per_axis - 1);
            if (!fn(p)) return;
            int k = 0;
            while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
            if (k == d) return;
        }
    };
    auto near_well = [&](const Vec &p) {
        return distance(p, spec.a()) <= 0.5 * spacing || distance(p, spec.b()) <= 0.5 * spacing;
    };

    {
        HypothesisCheck c;
        c.name = "wells";
        for (const Vec &x : xs) {
            for (const Vec *w : {&spec.a(), &spec.b()}) {
                if (spec.value(x, *w) > opts.zero_tolerance && c.passed) {
                    c.passed = false;
                    c.witness = "W(x, well) != 0 at x=" + describe(x) + " well=" + describe(*w);
                }
            }
            if (!c.passed) break;
            scan_grid([&](const Vec &p) {
                if (!near_well(p) && spec.value(x, p) <= opts.zero_tolerance) {
                    c.passed = false;
                    c.witness = "extra zero at x=" + describe(x) + " p=" + describe(p);
                    return false;
                }
                return true;
            });
            if (!c.passed) break;
        }
        report.checks.push_back(c);
    }

    {
        HypothesisCheck c;
        c.name = "lower_bound";
        if (!spec.has_lower_witness()) {
            c.skipped = true;
        } else {
            for (const Vec &x : xs) {
                for (int s = 0; s < 8 && c.passed; ++s) {
                    const Vec p = random_ball(2.0 * (1.0 + rho));
                    if (*spec.lower_witness(p) > spec.value(x, p) * (1.0 + 1e-14)) {
                        c.passed = false;
                        c.witness = "W_c > W at x=" + describe(x) + " p=" + describe(p);
                    }
                }
                if (!c.passed) break;
            }
            if (c.passed) {
                scan_grid([&](const Vec &p) {
                    if (!near_well(p) && *spec.lower_witness(p) <= opts.zero_tolerance) {
                        c.passed = false;
                        c.witness = "W_c vanishes off the wells at p=" + describe(p);
                        return false;
                    }
                    return true;
                });
            }
        }
        report.checks.push_back(c);
    }

    {
        HypothesisCheck c;
        c.name = "growth";
        const double radius = opts.growth_radius > 0.0 ? opts.growth_radius : 4.0 * (1.0 + rho);
        const double C = spec.growth_constant(), q = spec.growth_exponent();
        for (int s = 0; s < opts.random_pairs && c.passed; ++s) {
            const Vec &x = xs[s % xs.size()];
            const Vec p = random_ball(radius);
            const double w = spec.value(x, p), r = std::pow(p.norm(), q);
            const bool below = std::isinf(C) || r / C - C <= w;
            const bool above = w <= C * (1.0 + r);
            if (!below || !above) {
                c.passed = false;
                c.witness = std::string(below ? "upper" : "lower") + " growth bound violated at x=" + describe(x) +
                            " p=" + describe(p);
            }
        }
        report.checks.push_back(c);
    }

    {
        HypothesisCheck c;
        c.name = "lipschitz";
        const double radius = opts.lipschitz_radius > 0.0 ? opts.lipschitz_radius : 2.0 * (1.0 + rho);
        const double L = spec.lipschitz(radius);
        for (int s = 0; s < opts.random_pairs && c.passed; ++s) {
            const Vec &x = xs[s % xs.size()];
            const Vec p = random_ball(radius), q = random_ball(radius);
            const double gap = distance(p, q);
            if (gap == 0.0) continue;
            if (std::abs(spec.value(x, p) - spec.value(x, q)) > L * gap * (1.0 + 1e-12)) {
                c.passed = false;
                c.witness = "Lipschitz ratio exceeds L(K) at x=" + describe(x) + " p=" + describe(p) + " q=" + describe(q);
            }
        }
        report.checks.push_back(c);
    }

    return report;
}

} // namespace hetphase
