#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>

namespace hetphase {

/// Upper bound on both the state dimension d and the space dimension N.
inline constexpr int kMaxDim = 3;

/// Small fixed-capacity vector used for states p in R^d and points x in R^N.
/// Stored inline so that hot loops never allocate.
class Vec {
public:
    Vec() = default;
    explicit Vec(int dim, double fill = 0.0) : dim_(dim) {
        if (dim < 0 || dim > kMaxDim) throw std::invalid_argument("Vec: dimension out of range");
        for (int i = 0; i < dim; ++i) c_[i] = fill;
    }
    Vec(std::initializer_list<double> values) : dim_(static_cast<int>(values.size())) {
        if (dim_ > kMaxDim) throw std::invalid_argument("Vec: dimension out of range");
        int i = 0;
        for (double v : values) c_[i++] = v;
    }
    static Vec from_span(std::span<const double> values) {
        Vec v(static_cast<int>(values.size()));
        for (int i = 0; i < v.dim_; ++i) v.c_[i] = values[i];
        return v;
    }

    int dim() const { return dim_; }
    double &operator[](int i) { assert(i >= 0 && i < dim_); return c_[i]; }
    double operator[](int i) const { assert(i >= 0 && i < dim_); return c_[i]; }
    const double *data() const { return c_.data(); }

    Vec &operator+=(const Vec &o) { for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i]; return *this; }
    Vec &operator-=(const Vec &o) { for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i]; return *this; }
    Vec &operator*=(double s) { for (int i = 0; i < dim_; ++i) c_[i] *= s; return *this; }

    friend Vec operator+(Vec a, const Vec &b) { return a += b; }
    friend Vec operator-(Vec a, const Vec &b) { return a -= b; }
    friend Vec operator*(Vec a, double s) { return a *= s; }
    friend Vec operator*(double s, Vec a) { return a *= s; }
    friend Vec operator-(Vec a) { return a *= -1.0; }

    friend bool operator==(const Vec &a, const Vec &b) {
        if (a.dim_ != b.dim_) return false;
        for (int i = 0; i < a.dim_; ++i)
            if (a.c_[i] != b.c_[i]) return false;
        return true;
    }

    double dot(const Vec &o) const {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += c_[i] * o.c_[i];
        return s;
    }
    double squaredNorm() const { return dot(*this); }
    double norm() const { return std::sqrt(squaredNorm()); }
    double maxAbs() const {
        double m = 0.0;
        for (int i = 0; i < dim_; ++i) m = std::max(m, std::abs(c_[i]));
        return m;
    }

private:
    std::array<double, kMaxDim> c_{};
    int dim_ = 0;
};

inline double distance(const Vec &a, const Vec &b) { return (a - b).norm(); }

} // namespace hetphase
