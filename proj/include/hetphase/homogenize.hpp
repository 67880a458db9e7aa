#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "hetphase/potential.hpp"

namespace hetphase {

/// A position-independent potential p -> V(p) >= 0 on R^d.
class EffectivePotential {
public:
    virtual ~EffectivePotential() = default;
    virtual int dim() const = 0;
    virtual double value(const Vec &p) const = 0;
    virtual Vec gradient(const Vec &p) const = 0;
};

/// c * V for a fixed c > 0.
class ScaledPotential final : public EffectivePotential {
public:
    ScaledPotential(const EffectivePotential &inner, double factor);
    int dim() const override { return inner_.dim(); }
    double value(const Vec &p) const override { return factor_ * inner_.value(p); }
    Vec gradient(const Vec &p) const override { return factor_ * inner_.gradient(p); }

private:
    const EffectivePotential &inner_;
    double factor_;
};

/// Cell average W_H(p) = int_Q W(y, p) dy, or its truncated counterpart int_Q min{W(y, p), M} dy.
///
/// In exact-mean mode the average of an untruncated multiplicative potential is mean(m) W0(p)
/// in closed form. Quadrature mode uses the composite midpoint rule with `resolution` points per
/// cell axis; midpoints never fall on checkerboard discontinuities when the resolution is even.
class HomogenizedPotential final : public EffectivePotential {
public:
    enum class Mode { ExactMean, Quadrature };

    struct Table {
        Vec lo, hi;
        int per_axis = 0;
        std::vector<double> values;  // row-major, axis 0 slowest
        double max_interp_error = 0; // on cell midpoints of the table lattice
    };

    HomogenizedPotential(const PotentialSpec &spec, Mode mode, int resolution = 0);
    explicit HomogenizedPotential(const TruncatedPotential &tspec, int resolution = 0);

    int dim() const override { return base().dim(); }
    double value(const Vec &p) const override;
    Vec gradient(const Vec &p) const override;
    /// Bypasses the table.
    double direct_value(const Vec &p) const;

    Mode mode() const { return mode_; }
    int resolution() const { return resolution_; }
    bool truncated() const { return cap_.has_value(); }
    double cap() const { return cap_.value(); }
    /// Cell average of the modulation as used by this evaluator.
    double modulation_mean() const { return mean_; }
    const PotentialSpec &spec() const { return *spec_; }
    const BaseWell &base() const { return spec_->base(); }
    const Vec &a() const { return spec_->a(); }
    const Vec &b() const { return spec_->b(); }
    const std::optional<Table> &table() const { return table_; }

    friend HomogenizedPotential tabulate(const HomogenizedPotential &hp, const Vec &lo, const Vec &hi, int per_axis);

private:
    double interpolate(const Vec &p) const;

    std::shared_ptr<const PotentialSpec> spec_;
    std::optional<double> cap_;
    Mode mode_;
    int resolution_;
    double mean_ = 0.0;
    std::vector<std::pair<double, double>> samples_; // (m value, weight), equal values merged
    std::optional<Table> table_;
};

/// Default quadrature resolution: 64 per axis for N <= 2, 16 for N = 3.
int default_quadrature_resolution(int space_dim);

double homogenized_eval(const HomogenizedPotential &hp, const Vec &p);
/// Throws std::invalid_argument unless hp was built from a truncated potential.
double homogenized_truncated_eval(const HomogenizedPotential &hp, const Vec &p);

/// Multilinear lookup table over the box [lo, hi] with `per_axis` nodes per axis.
/// Throws std::invalid_argument when a well lies outside the box or closer to its boundary
/// than 10% of the box diameter.
HomogenizedPotential tabulate(const HomogenizedPotential &hp, const Vec &lo, const Vec &hi, int per_axis);

} // namespace hetphase
