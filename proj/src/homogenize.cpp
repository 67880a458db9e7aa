#include "hetphase/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace hetphase {

ScaledPotential::ScaledPotential(const EffectivePotential &inner, double factor) : inner_(inner), factor_(factor) {
    if (!(factor > 0.0)) throw std::invalid_argument("ScaledPotential: factor must be positive");
}

int default_quadrature_resolution(int space_dim) { return space_dim <= 2 ? 64 : 16; }

namespace {

std::vector<std::pair<double, double>> cell_samples(const Modulation &m, int space_dim, int resolution) {
    std::map<double, long> counts;
    std::array<int, kMaxDim> idx{};
    Vec y(space_dim);
    while (true) {
        for (int i = 0; i < space_dim; ++i) y[i] = (idx[i] + 0.5) / resolution;
        ++counts[m(y)];
        int k = 0;
        while (k < space_dim && ++idx[k] == resolution) idx[k++] = 0;
        if (k == space_dim) break;
    }
    const double total = std::pow(static_cast<double>(resolution), space_dim);
    std::vector<std::pair<double, double>> out;
    out.reserve(counts.size());
    for (const auto &[value, count] : counts) out.emplace_back(value, count / total);
    return out;
}

} // namespace

HomogenizedPotential::HomogenizedPotential(const PotentialSpec &spec, Mode mode, int resolution)
    : spec_(std::make_shared<PotentialSpec>(spec)), mode_(mode),
      resolution_(resolution > 0 ? resolution : default_quadrature_resolution(spec.space_dim())) {
    if (mode_ == Mode::ExactMean) {
        mean_ = spec.modulation().mean();
    } else {
        samples_ = cell_samples(spec.modulation(), spec.space_dim(), resolution_);
        for (const auto &[m, w] : samples_) mean_ += w * m;
    }
}

HomogenizedPotential::HomogenizedPotential(const TruncatedPotential &tspec, int resolution)
    : spec_(std::make_shared<PotentialSpec>(tspec.inner())), cap_(tspec.cap()), mode_(Mode::Quadrature),
      resolution_(resolution > 0 ? resolution : default_quadrature_resolution(tspec.inner().space_dim())) {
    samples_ = cell_samples(spec_->modulation(), spec_->space_dim(), resolution_);
    for (const auto &[m, w] : samples_) mean_ += w * m;
}

double HomogenizedPotential::direct_value(const Vec &p) const {
    const double w0 = base().value(p);
    if (!cap_) return mean_ * w0;
    double s = 0.0;
    for (const auto &[m, w] : samples_) s += w * std::min(m * w0, *cap_);
    return s;
}

double HomogenizedPotential::value(const Vec &p) const {
    if (table_) {
        bool inside = true;
        for (int i = 0; i < p.dim(); ++i) inside = inside && p[i] >= table_->lo[i] && p[i] <= table_->hi[i];
        if (inside) return interpolate(p);
    }
    return direct_value(p);
}

Vec HomogenizedPotential::gradient(const Vec &p) const {
    const Vec g0 = base().gradient(p);
    if (!cap_) return mean_ * g0;
    const double w0 = base().value(p);
    double s = 0.0;
    for (const auto &[m, w] : samples_)
        if (m * w0 < *cap_) s += w * m;
    return s * g0;
}

double HomogenizedPotential::interpolate(const Vec &p) const {
    const Table &t = *table_;
    const int d = p.dim();
    std::array<int, kMaxDim> base_idx{};
    std::array<double, kMaxDim> frac{};
    for (int i = 0; i < d; ++i) {
        const double step = (t.hi[i] - t.lo[i]) / (t.per_axis - 1);
        double s = (p[i] - t.lo[i]) / step;
        if (std::abs(s - std::round(s)) <= 1e-9) s = std::round(s); // nodes reproduce stored values
        int k = std::clamp(static_cast<int>(std::floor(s)), 0, t.per_axis - 2);
        base_idx[i] = k;
        frac[i] = s - k;
    }
    double result = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double weight = 1.0;
        long flat = 0;
        for (int i = 0; i < d; ++i) {
            const int bit = (corner >> i) & 1;
            weight *= bit ? frac[i] : 1.0 - frac[i];
            flat = flat * t.per_axis + base_idx[i] + bit;
        }
        if (weight != 0.0) result += weight * t.values[flat];
    }
    return result;
}

double homogenized_eval(const HomogenizedPotential &hp, const Vec &p) { return hp.value(p); }

double homogenized_truncated_eval(const HomogenizedPotential &hp, const Vec &p) {
    if (!hp.truncated()) throw std::invalid_argument("homogenized_truncated_eval: source is not truncated");
    return hp.value(p);
}

HomogenizedPotential tabulate(const HomogenizedPotential &hp, const Vec &lo, const Vec &hi, int per_axis) {
    const int d = hp.dim();
    if (lo.dim() != d || hi.dim() != d) throw std::invalid_argument("tabulate: box dimension mismatch");
    if (per_axis < 2) throw std::invalid_argument("tabulate: need at least 2 nodes per axis");
    for (int i = 0; i < d; ++i)
        if (!(hi[i] > lo[i])) throw std::invalid_argument("tabulate: empty box");
    const double diameter = distance(lo, hi);
    for (const Vec *w : {&hp.a(), &hp.b()}) {
        for (int i = 0; i < d; ++i) {
            if ((*w)[i] < lo[i] || (*w)[i] > hi[i]) throw std::invalid_argument("tabulate: box excludes a well");
            if (std::min((*w)[i] - lo[i], hi[i] - (*w)[i]) < 0.1 * diameter)
                throw std::invalid_argument("tabulate: well closer to the box boundary than 10% of its diameter");
        }
    }

    HomogenizedPotential out = hp;
    HomogenizedPotential::Table t;
    t.lo = lo;
    t.hi = hi;
    t.per_axis = per_axis;
    long total = 1;
    for (int i = 0; i < d; ++i) total *= per_axis;
    t.values.resize(total);
    std::array<int, kMaxDim> idx{};
    Vec p(d);
    for (long flat = 0; flat < total; ++flat) {
        long rem = flat;
        for (int i = d - 1; i >= 0; --i) {
            idx[i] = static_cast<int>(rem % per_axis);
            rem /= per_axis;
        }
        for (int i = 0; i < d; ++i) p[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (per_axis - 1);
        t.values[flat] = hp.direct_value(p);
    }
    out.table_ = std::move(t);

    // Refinement check on the cell midpoints.
    double err = 0.0;
    long cells = 1;
    for (int i = 0; i < d; ++i) cells *= per_axis - 1;
    for (long flat = 0; flat < cells; ++flat) {
        long rem = flat;
        for (int i = d - 1; i >= 0; --i) {
            idx[i] = static_cast<int>(rem % (per_axis - 1));
            rem /= per_axis - 1;
        }
        for (int i = 0; i < d; ++i) p[i] = lo[i] + (hi[i] - lo[i]) * (idx[i] + 0.5) / (per_axis - 1);
        err = std::max(err, std::abs(out.value(p) - hp.direct_value(p)));
    }
    out.table_->max_interp_error = err;
    return out;
}

} // namespace hetphase
