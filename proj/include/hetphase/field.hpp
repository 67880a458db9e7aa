#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "hetphase/homogenize.hpp"
#include "hetphase/potential.hpp"

namespace hetphase {

/// u : Omega -> R^d sampled on a uniform node lattice over an axis-aligned box.
/// Nodes are stored row-major with axis 0 slowest; each node holds d contiguous values.
class GridField {
public:
    GridField() = default;
    GridField(std::vector<int> counts, Vec lo, Vec hi, int state_dim, double fill = 0.0);
    /// Unit box [0,1]^N with `nodes` per axis.
    static GridField unit(int space_dim, int nodes, int state_dim, double fill = 0.0);

    int space_dim() const { return static_cast<int>(counts_.size()); }
    int state_dim() const { return state_dim_; }
    const std::vector<int> &counts() const { return counts_; }
    long node_count() const { return node_count_; }
    long cell_count() const;
    double spacing() const { return h_; }
    const Vec &lo() const { return lo_; }
    const Vec &hi() const { return hi_; }
    double volume() const;

    Vec value(long node) const { return Vec::from_span({values_.data() + node * state_dim_, static_cast<std::size_t>(state_dim_)}); }
    void set(long node, const Vec &v);
    std::span<double> data() { return values_; }
    std::span<const double> data() const { return values_; }

    std::array<int, kMaxDim> coords(long node) const;
    long index(const std::array<int, kMaxDim> &idx) const;
    Vec position(long node) const;
    bool on_boundary(long node) const;
    bool same_grid(const GridField &other) const;

private:
    std::vector<int> counts_;
    Vec lo_, hi_;
    int state_dim_ = 1;
    long node_count_ = 0;
    double h_ = 0.0;
    std::vector<double> values_;
};

/// W evaluated per grid cell; the value may depend on the cell (heterogeneous) or not.
class CellPotential {
public:
    virtual ~CellPotential() = default;
    virtual double value(long cell, const Vec &p) const = 0;
    virtual Vec gradient(long cell, const Vec &p) const = 0;
};

/// mbar_c W0(p), optionally capped at M, where mbar_c is the exact average of m(x / eps) over the cell.
class HeterogeneousCells final : public CellPotential {
public:
    HeterogeneousCells(const GridField &grid, double eps, const PotentialSpec &spec);
    HeterogeneousCells(const GridField &grid, double eps, const TruncatedPotential &tspec);
    double value(long cell, const Vec &p) const override;
    Vec gradient(long cell, const Vec &p) const override;
    double modulation(long cell) const { return m_[cell]; }

private:
    std::vector<double> m_;
    BaseWell base_;
    std::optional<double> cap_;
};

class HomogenizedCells final : public CellPotential {
public:
    explicit HomogenizedCells(const EffectivePotential &potential) : potential_(potential) {}
    double value(long, const Vec &p) const override { return potential_.value(p); }
    Vec gradient(long, const Vec &p) const override { return potential_.gradient(p); }

private:
    const EffectivePotential &potential_;
};

/// Quadrature sums int W(x, u) dx and int |grad u|^2 dx (cell midpoints, corner-averaged u).
struct EnergyIntegrals {
    double potential = 0.0;
    double dirichlet = 0.0;
};
EnergyIntegrals energy_integrals(const GridField &u, const CellPotential &potential);

/// d/du of (1/delta) int W + delta int |grad u|^2, written into `grad` (same layout as the field).
/// Returns the energy at u.
double energy_and_gradient(const GridField &u, const CellPotential &potential, double delta, std::span<double> grad);

struct EnergyReport {
    double eps = 0.0;
    double delta = 0.0;
    double potential_term = 0.0;  // (1/delta) int W
    double gradient_term = 0.0;   // delta int |grad u|^2, also the Dirichlet budget
    double total = 0.0;
    double homogenized_total = 0.0;
    double discrepancy = 0.0;
    double poincare_bound = 0.0;
};

/// Throws std::invalid_argument when h > eps/4 and the modulation is not constant.
/// The untruncated overload fills only the potential, gradient and total entries.
EnergyReport diffuse_energy(const GridField &u, double eps, double delta, const PotentialSpec &spec);
EnergyReport diffuse_energy(const GridField &u, double eps, double delta, const TruncatedPotential &tspec);

double homogenized_energy(const GridField &u, double delta, const EffectivePotential &hp);

struct DiscrepancyParts {
    double total = 0.0;     // |(1/delta) int [W~(x/eps, u) - W~_H(u)]|
    double interior = 0.0;  // same, restricted to full eps-cubes inside Omega
    double strip = 0.0;     // same, restricted to the boundary strip of cut cubes
    double strip_abs = 0.0; // (1/delta) int_strip |W~ - W~_H|
};
DiscrepancyParts discrepancy_parts(const GridField &u, double eps, double delta, const TruncatedPotential &tspec,
                                   const EffectivePotential &hp);
double discrepancy(const GridField &u, double eps, double delta, const TruncatedPotential &tspec,
                   const EffectivePotential &hp);

/// Optimal L1 Poincare constant of the unit cube, diam/2 = sqrt(N)/2.
double unit_cube_poincare_constant(int space_dim);

/// (2 C L eps / delta^{3/2}) (delta int |grad u|^2)^{1/2} |Omega|^{1/2}.
double poincare_bound(const GridField &u, double eps, double delta, double lipschitz, double poincare_constant);

struct Box {
    Vec lo, hi;
    bool contains(const Vec &x) const;
};

struct PerimeterReport {
    double face_count = 0.0;    // dual faces between differing labels
    double reconstructed = 0.0; // interface reconstruction on the smoothed indicator
};

/// Perimeter of {u = a}. Throws std::invalid_argument when a node is neither a nor b.
PerimeterReport perimeter(const GridField &u, const Vec &a, const Vec &b, const std::optional<Box> &region = {});

/// K_H times the reconstructed perimeter.
double sharp_energy(const GridField &u, const Vec &a, const Vec &b, double kh);

/// Nearest well per node; ties go to a.
GridField project_to_wells(const GridField &u, const Vec &a, const Vec &b);

/// Trapezoidal int |u - v| dx with the Euclidean norm per node. Throws on grid mismatch.
double l1_distance(const GridField &u, const GridField &v);

/// Binary checkpoint: "HPFIELD1", u32 N, u32 d, i64 counts[N], f64 lo[N], f64 hi[N], f64 values[].
void write_field(const GridField &u, const std::filesystem::path &path);
GridField read_field(const std::filesystem::path &path);

} // namespace hetphase
