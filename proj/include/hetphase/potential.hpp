#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hetphase/vec.hpp"

namespace hetphase {

/// Homogeneous double well W0 : R^d -> [0, inf) vanishing exactly at the wells a and b.
///
/// Registry names:
///   quartic_scalar     d = 1,  W0(p) = (p - a)^2 (p - b)^2
///   quartic_vector     any d,  W0(p) = |p - a|^2 |p - b|^2
///   quadratic_product  any d,  W0(p) = q_a(p) q_b(p), q_c(p) = (p - c)^T A (p - c),
///                      A = diag(1, k, ..., k) with k the anisotropy weight
class BaseWell {
public:
    enum class Kind { QuarticScalar, QuarticVector, QuadraticProduct };

    BaseWell(Kind kind, Vec a, Vec b, double anisotropy = 2.0);
    static BaseWell from_name(std::string_view name, Vec a, Vec b, double anisotropy = 2.0);

    double value(const Vec &p) const;
    Vec gradient(const Vec &p) const;

    /// sup over |p| <= radius of |grad W0(p)|.
    double gradient_bound(double radius) const;
    /// Lower bound of W0 on the sphere |p| = r, valid for r >= max(|a|, |b|).
    double radial_lower_bound(double r) const;
    /// Sum of the largest Hessian entries over |p| <= radius; used for explicit step limits.
    double curvature_bound(double radius) const;

    Kind kind() const { return kind_; }
    std::string name() const;
    int dim() const { return a_.dim(); }
    const Vec &a() const { return a_; }
    const Vec &b() const { return b_; }
    double anisotropy() const { return anisotropy_; }

private:
    double quad(const Vec &p, const Vec &c) const;
    double weight(int i) const { return (kind_ == Kind::QuadraticProduct && i > 0) ? anisotropy_ : 1.0; }
    double weight_max() const;
    double weight_min() const;

    Kind kind_;
    Vec a_, b_;
    double anisotropy_;
};

/// Q-periodic modulation m(y) with values in [m_min, m_max].
///   constant      m = c
///   sine          m = 1 + alpha sin(2 pi y_1)
///   checkerboard  m = v1 where sum_i floor(2 frac(y_i)) is even, v2 elsewhere
class Modulation {
public:
    enum class Kind { Constant, Sine, Checkerboard };

    static Modulation constant(double value);
    static Modulation sine(double amplitude);
    static Modulation checkerboard(double v1, double v2);

    double operator()(const Vec &y) const;

    /// Exact average of m over the box [lo, hi] (cell coordinates).
    double cell_average(const Vec &lo, const Vec &hi) const;
    double mean() const;
    double min() const;
    double max() const;
    bool is_constant() const { return kind_ == Kind::Constant || (kind_ == Kind::Checkerboard && v1_ == v2_) || (kind_ == Kind::Sine && v1_ == 0.0); }
    Kind kind() const { return kind_; }
    std::string name() const;
    double parameter(int i) const { return i == 0 ? v1_ : v2_; }

    /// Points of the unit cell where the modulation attains its min and max.
    std::vector<Vec> extremal_points(int space_dim) const;

private:
    Modulation(Kind kind, double v1, double v2) : kind_(kind), v1_(v1), v2_(v2) {}
    Kind kind_;
    double v1_, v2_;
};

/// Reduce y to the unit cell [0,1)^N componentwise.
Vec reduce_to_cell(const Vec &y);

/// Heterogeneous double well W(x, p) = m(x) W0(p).
class PotentialSpec {
public:
    /// growth_constant <= 0 selects a constant derived from the family bounds.
    PotentialSpec(BaseWell base, Modulation modulation, int space_dim, double growth_exponent = 4.0,
                  double growth_constant = 0.0, bool lower_witness = true);

    double value(const Vec &x, const Vec &p) const { return modulation_(x) * base_.value(p); }
    Vec gradient(const Vec &x, const Vec &p) const { return modulation_(x) * base_.gradient(p); }

    /// Lipschitz constant of p -> W(x, p) on |p| <= radius, uniform in x.
    double lipschitz(double radius) const { return modulation_.max() * base_.gradient_bound(radius); }
    /// W_c(p) = m_min W0(p) when the witness is enabled.
    std::optional<double> lower_witness(const Vec &p) const;

    const BaseWell &base() const { return base_; }
    const Modulation &modulation() const { return modulation_; }
    const Vec &a() const { return base_.a(); }
    const Vec &b() const { return base_.b(); }
    int state_dim() const { return base_.dim(); }
    int space_dim() const { return space_dim_; }
    double growth_exponent() const { return growth_exponent_; }
    double growth_constant() const { return growth_constant_; }
    bool has_lower_witness() const { return lower_witness_; }

private:
    BaseWell base_;
    Modulation modulation_;
    int space_dim_;
    double growth_exponent_;
    double growth_constant_;
    bool lower_witness_;
};

double eval_W(const PotentialSpec &spec, const Vec &x, const Vec &p);
Vec eval_gradW_p(const PotentialSpec &spec, const Vec &x, const Vec &p);

/// W~(x, p) = min{W(x, p), M}.
class TruncatedPotential {
public:
    TruncatedPotential(PotentialSpec inner, double radius, double cap);

    double value(const Vec &x, const Vec &p) const { return std::min(inner_.value(x, p), cap_); }
    Vec gradient(const Vec &x, const Vec &p) const;

    /// Smallest radius R' with {W < M} inside {|p| <= R'}; infinite when m_min = 0.
    double sublevel_radius() const;
    /// Global Lipschitz constant of p -> W~(x, p).
    double lipschitz() const;

    const PotentialSpec &inner() const { return inner_; }
    double radius() const { return radius_; }
    double cap() const { return cap_; }

private:
    PotentialSpec inner_;
    double radius_;
    double cap_;
};

/// R = 2 (|a| + |b| + |a - b|), a radius enclosing every reasonable transition path.
double default_truncation_radius(const PotentialSpec &spec);

struct TruncationOptions {
    int cell_samples = 64;       // per unit-cell axis
    int p_samples = 201;         // per state axis over [-R, R]
    double safety_factor = 1.05; // >= 1
};

/// Builds W~ with M = safety * max over a (x, p) lattice with |p| <= R of W(x, p).
/// Throws std::invalid_argument when R < max(|a|, |b|).
TruncatedPotential truncate(const PotentialSpec &spec, double radius, const TruncationOptions &opts = {});

struct HypothesisCheck {
    std::string name;
    bool passed = true;
    bool skipped = false;
    std::string witness; // empty when passed
};

struct ValidationReport {
    std::vector<HypothesisCheck> checks;
    bool all_passed() const;
    const HypothesisCheck &check(std::string_view name) const;
};

struct ValidationOptions {
    int x_samples = 256;         // random cell points (plus modulation extrema)
    int p_grid = 81;             // per state axis for the zero-set scan
    int random_pairs = 1000;     // for periodicity / growth / Lipschitz sampling
    double zero_tolerance = 1e-10;
    double growth_radius = 0.0;  // <= 0 selects 4 (1 + max(|a|, |b|))
    double lipschitz_radius = 0.0; // <= 0 selects 2 (1 + max(|a|, |b|))
    std::uint64_t seed = 7;
};

/// Samples (x, p) and reports pass/fail with a counterexample for periodicity, zero set,
/// lower bound, growth and Lipschitz continuity.
ValidationReport validate_hypotheses(const PotentialSpec &spec, const ValidationOptions &opts = {});

} // namespace hetphase
