#include "hetphase/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace hetphase {

// --- GridField -------------------------------------------------------------

GridField::GridField(std::vector<int> counts, Vec lo, Vec hi, int state_dim, double fill)
    : counts_(std::move(counts)), lo_(lo), hi_(hi), state_dim_(state_dim) {
    const int n = static_cast<int>(counts_.size());
    if (n < 1 || n > kMaxDim) throw std::invalid_argument("GridField: space dimension must be 1..3");
    if (state_dim < 1 || state_dim > kMaxDim) throw std::invalid_argument("GridField: state dimension must be 1..3");
    if (lo.dim() != n || hi.dim() != n) throw std::invalid_argument("GridField: box dimension mismatch");
    node_count_ = 1;
    for (int i = 0; i < n; ++i) {
        if (counts_[i] < 2) throw std::invalid_argument("GridField: need at least 2 nodes per axis");
        if (!(hi[i] > lo[i])) throw std::invalid_argument("GridField: empty box");
        node_count_ *= counts_[i];
        const double h = (hi[i] - lo[i]) / (counts_[i] - 1);
        if (i == 0) h_ = h;
        else if (std::abs(h - h_) > 1e-12 * h_) throw std::invalid_argument("GridField: spacing must agree across axes");
    }
    values_.assign(node_count_ * state_dim_, fill);
}

GridField GridField::unit(int space_dim, int nodes, int state_dim, double fill) {
    return GridField(std::vector<int>(space_dim, nodes), Vec(space_dim, 0.0), Vec(space_dim, 1.0), state_dim, fill);
}

long GridField::cell_count() const {
    long c = 1;
    for (int n : counts_) c *= n - 1;
    return c;
}

double GridField::volume() const {
    double v = 1.0;
    for (int i = 0; i < space_dim(); ++i) v *= hi_[i] - lo_[i];
    return v;
}

void GridField::set(long node, const Vec &v) {
    if (v.dim() != state_dim_) throw std::invalid_argument("GridField::set: state dimension mismatch");
    for (int k = 0; k < state_dim_; ++k) values_[node * state_dim_ + k] = v[k];
}

std::array<int, kMaxDim> GridField::coords(long node) const {
    std::array<int, kMaxDim> idx{};
    for (int i = space_dim() - 1; i >= 0; --i) {
        idx[i] = static_cast<int>(node % counts_[i]);
        node /= counts_[i];
    }
    return idx;
}

long GridField::index(const std::array<int, kMaxDim> &idx) const {
    long flat = 0;
    for (int i = 0; i < space_dim(); ++i) flat = flat * counts_[i] + idx[i];
    return flat;
}

Vec GridField::position(long node) const {
    const auto idx = coords(node);
    Vec x(space_dim());
    for (int i = 0; i < space_dim(); ++i) x[i] = lo_[i] + h_ * idx[i];
    return x;
}

bool GridField::on_boundary(long node) const {
    const auto idx = coords(node);
    for (int i = 0; i < space_dim(); ++i)
        if (idx[i] == 0 || idx[i] == counts_[i] - 1) return true;
    return false;
}

bool GridField::same_grid(const GridField &o) const {
    return counts_ == o.counts_ && state_dim_ == o.state_dim_ && lo_ == o.lo_ && hi_ == o.hi_;
}

// --- Cell stencil ------------------------------------------------------------

namespace {

/// Corner offsets and per-axis edge lists of a grid cell.
struct CellStencil {
    int n = 0;
    int corners = 0;
    std::array<long, 8> offset{};
    std::array<std::vector<std::pair<int, int>>, kMaxDim> edges;
    std::array<long, kMaxDim> stride{};

    explicit CellStencil(const GridField &g) : n(g.space_dim()), corners(1 << g.space_dim()) {
        long s = 1;
        for (int i = n - 1; i >= 0; --i) {
            stride[i] = s;
            s *= g.counts()[i];
        }
        for (int c = 0; c < corners; ++c) {
            offset[c] = 0;
            for (int i = 0; i < n; ++i)
                if ((c >> i) & 1) offset[c] += stride[i];
        }
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < corners; ++c)
                if (!((c >> i) & 1)) edges[i].emplace_back(c, c | (1 << i));
    }

    /// fn(cell, base_node, cell_coords)
    template <class Fn>
    void for_each_cell(const GridField &g, Fn &&fn) const {
        std::array<int, kMaxDim> idx{};
        long cell = 0;
        while (true) {
            long base = 0;
            for (int i = 0; i < n; ++i) base += idx[i] * stride[i];
            fn(cell++, base, idx);
            int k = n - 1;
            while (k >= 0 && ++idx[k] == g.counts()[k] - 1) idx[k--] = 0;
            if (k < 0) break;
        }
    }
};

Vec midpoint_of(const GridField &g, const std::array<int, kMaxDim> &idx) {
    Vec x(g.space_dim());
    for (int i = 0; i < g.space_dim(); ++i) x[i] = g.lo()[i] + g.spacing() * (idx[i] + 0.5);
    return x;
}

Vec corner_average(const GridField &u, const CellStencil &st, long base) {
    const int d = u.state_dim();
    const auto data = u.data();
    Vec avg(d);
    for (int c = 0; c < st.corners; ++c)
        for (int k = 0; k < d; ++k) avg[k] += data[(base + st.offset[c]) * d + k];
    return avg * (1.0 / st.corners);
}

double cell_grad_squared(const GridField &u, const CellStencil &st, long base) {
    const int d = u.state_dim();
    const auto data = u.data();
    const double inv_h2 = 1.0 / (u.spacing() * u.spacing());
    const double edge_weight = 1.0 / (st.corners / 2);
    double s = 0.0;
    for (int i = 0; i < st.n; ++i)
        for (const auto &[lo, hi] : st.edges[i])
            for (int k = 0; k < d; ++k) {
                const double diff = data[(base + st.offset[hi]) * d + k] - data[(base + st.offset[lo]) * d + k];
                s += diff * diff;
            }
    return s * edge_weight * inv_h2;
}

void require_resolved(const GridField &u, double eps, const Modulation &m) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!m.is_constant() && u.spacing() > 0.25 * eps * (1.0 + 1e-12))
        throw std::invalid_argument("grid spacing " + std::to_string(u.spacing()) + " exceeds eps/4 = " +
                                    std::to_string(0.25 * eps) + "; the modulation would alias");
}

} // namespace

// --- Cell potentials -----------------------------------------------------------

namespace {
std::vector<double> sample_modulation(const GridField &grid, double eps, const Modulation &m) {
    const CellStencil st(grid);
    std::vector<double> out(grid.cell_count());
    st.for_each_cell(grid, [&](long cell, long, const std::array<int, kMaxDim> &idx) {
        const Vec mid = midpoint_of(grid, idx);
        const Vec half(mid.dim(), 0.5 * grid.spacing());
        out[cell] = m.cell_average((mid - half) * (1.0 / eps), (mid + half) * (1.0 / eps));
    });
    return out;
}
} // namespace

HeterogeneousCells::HeterogeneousCells(const GridField &grid, double eps, const PotentialSpec &spec)
    : m_(sample_modulation(grid, eps, spec.modulation())), base_(spec.base()) {}

HeterogeneousCells::HeterogeneousCells(const GridField &grid, double eps, const TruncatedPotential &tspec)
    : m_(sample_modulation(grid, eps, tspec.inner().modulation())), base_(tspec.inner().base()), cap_(tspec.cap()) {}

double HeterogeneousCells::value(long cell, const Vec &p) const {
    const double w = m_[cell] * base_.value(p);
    return cap_ ? std::min(w, *cap_) : w;
}

Vec HeterogeneousCells::gradient(long cell, const Vec &p) const {
    if (cap_ && m_[cell] * base_.value(p) >= *cap_) return Vec(p.dim());
    return m_[cell] * base_.gradient(p);
}

// --- Energies ----------------------------------------------------------------

EnergyIntegrals energy_integrals(const GridField &u, const CellPotential &potential) {
    const CellStencil st(u);
    const double vol = std::pow(u.spacing(), u.space_dim());
    EnergyIntegrals out;
    st.for_each_cell(u, [&](long cell, long base, const auto &) {
        out.potential += potential.value(cell, corner_average(u, st, base));
        out.dirichlet += cell_grad_squared(u, st, base);
    });
    out.potential *= vol;
    out.dirichlet *= vol;
    return out;
}

double energy_and_gradient(const GridField &u, const CellPotential &potential, double delta, std::span<double> grad) {
    if (grad.size() != u.data().size()) throw std::invalid_argument("energy_and_gradient: gradient buffer size mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
    const CellStencil st(u);
    const int d = u.state_dim();
    const auto data = u.data();
    const double vol = std::pow(u.spacing(), u.space_dim());
    const double inv_h2 = 1.0 / (u.spacing() * u.spacing());
    const double edge_weight = 1.0 / (st.corners / 2);
    const double pot_scale = vol / (delta * st.corners);
    const double grad_scale = 2.0 * vol * delta * edge_weight * inv_h2;
    double wsum = 0.0, gsum = 0.0;
    st.for_each_cell(u, [&](long cell, long base, const auto &) {
        const Vec ubar = corner_average(u, st, base);
        wsum += potential.value(cell, ubar);
        const Vec dw = potential.gradient(cell, ubar);
        for (int c = 0; c < st.corners; ++c)
            for (int k = 0; k < d; ++k) grad[(base + st.offset[c]) * d + k] += pot_scale * dw[k];
        for (int i = 0; i < st.n; ++i)
            for (const auto &[lo, hi] : st.edges[i])
                for (int k = 0; k < d; ++k) {
                    const long ih = (base + st.offset[hi]) * d + k, il = (base + st.offset[lo]) * d + k;
                    const double diff = data[ih] - data[il];
                    gsum += diff * diff;
                    grad[ih] += grad_scale * diff;
                    grad[il] -= grad_scale * diff;
                }
    });
    return vol * (wsum / delta + delta * gsum * edge_weight * inv_h2);
}

namespace {
EnergyReport make_report(const GridField &u, double eps, double delta, const CellPotential &cells) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    const EnergyIntegrals ints = energy_integrals(u, cells);
    EnergyReport r;
    r.eps = eps;
    r.delta = delta;
    r.potential_term = ints.potential / delta;
    r.gradient_term = delta * ints.dirichlet;
    r.total = r.potential_term + r.gradient_term;
    return r;
}
} // namespace

EnergyReport diffuse_energy(const GridField &u, double eps, double delta, const PotentialSpec &spec) {
    require_resolved(u, eps, spec.modulation());
    return make_report(u, eps, delta, HeterogeneousCells(u, eps, spec));
}

EnergyReport diffuse_energy(const GridField &u, double eps, double delta, const TruncatedPotential &tspec) {
    require_resolved(u, eps, tspec.inner().modulation());
    EnergyReport r = make_report(u, eps, delta, HeterogeneousCells(u, eps, tspec));
    const HomogenizedPotential hp(tspec, default_quadrature_resolution(u.space_dim()));
    r.homogenized_total = homogenized_energy(u, delta, hp);
    r.discrepancy = discrepancy(u, eps, delta, tspec, hp);
    r.poincare_bound = poincare_bound(u, eps, delta, tspec.lipschitz(), unit_cube_poincare_constant(u.space_dim()));
    return r;
}

double homogenized_energy(const GridField &u, double delta, const EffectivePotential &hp) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    const EnergyIntegrals ints = energy_integrals(u, HomogenizedCells(hp));
    return ints.potential / delta + delta * ints.dirichlet;
}

DiscrepancyParts discrepancy_parts(const GridField &u, double eps, double delta, const TruncatedPotential &tspec,
                                   const EffectivePotential &hp) {
    require_resolved(u, eps, tspec.inner().modulation());
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    const HeterogeneousCells cells(u, eps, tspec);
    const CellStencil st(u);
    const double vol = std::pow(u.spacing(), u.space_dim());
    const double slack = 1e-12 * eps;
    double interior = 0.0, strip = 0.0, strip_abs = 0.0;
    st.for_each_cell(u, [&](long cell, long base, const std::array<int, kMaxDim> &idx) {
        const Vec ubar = corner_average(u, st, base);
        const double diff = cells.value(cell, ubar) - hp.value(ubar);
        const Vec x = midpoint_of(u, idx);
        bool full = true;
        for (int i = 0; i < u.space_dim() && full; ++i) {
            const double center = std::round(x[i] / eps) * eps;
            full = center - 0.5 * eps >= u.lo()[i] - slack && center + 0.5 * eps <= u.hi()[i] + slack;
        }
        if (full) {
            interior += diff;
        } else {
            strip += diff;
            strip_abs += std::abs(diff);
        }
    });
    DiscrepancyParts p;
    p.total = std::abs((interior + strip) * vol / delta);
    p.interior = std::abs(interior * vol / delta);
    p.strip = std::abs(strip * vol / delta);
    p.strip_abs = strip_abs * vol / delta;
    return p;
}

double discrepancy(const GridField &u, double eps, double delta, const TruncatedPotential &tspec,
                   const EffectivePotential &hp) {
    return discrepancy_parts(u, eps, delta, tspec, hp).total;
}

double unit_cube_poincare_constant(int space_dim) { return 0.5 * std::sqrt(static_cast<double>(space_dim)); }

double poincare_bound(const GridField &u, double eps, double delta, double lipschitz, double poincare_constant) {
    const CellStencil st(u);
    const double vol = std::pow(u.spacing(), u.space_dim());
    double g = 0.0;
    st.for_each_cell(u, [&](long, long base, const auto &) { g += cell_grad_squared(u, st, base); });
    const double budget = delta * g * vol;
    return 2.0 * poincare_constant * lipschitz * eps / std::pow(delta, 1.5) * std::sqrt(budget) * std::sqrt(u.volume());
}

// --- Perimeter -----------------------------------------------------------------

bool Box::contains(const Vec &x) const {
    for (int i = 0; i < x.dim(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

namespace {

std::vector<double> well_indicator(const GridField &u, const Vec &a, const Vec &b) {
    if (a.dim() != u.state_dim() || b.dim() != u.state_dim()) throw std::invalid_argument("wells do not match the state dimension");
    std::vector<double> chi(u.node_count());
    for (long i = 0; i < u.node_count(); ++i) {
        const Vec v = u.value(i);
        if (v == a) chi[i] = 1.0;
        else if (v == b) chi[i] = 0.0;
        else throw std::invalid_argument("perimeter: node value is neither well");
    }
    return chi;
}

/// Separable binomial [1 4 6 4 1]/16 smoothing with replicated boundaries.
void smooth(const GridField &g, std::vector<double> &f, int passes) {
    static constexpr double w[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    std::vector<double> tmp(f.size());
    for (int pass = 0; pass < passes; ++pass) {
        for (int axis = 0; axis < g.space_dim(); ++axis) {
            const int n = g.counts()[axis];
            for (long node = 0; node < g.node_count(); ++node) {
                auto idx = g.coords(node);
                const int i0 = idx[axis];
                double s = 0.0;
                for (int k = -2; k <= 2; ++k) {
                    idx[axis] = std::clamp(i0 + k, 0, n - 1);
                    s += w[k + 2] * f[g.index(idx)];
                }
                tmp[node] = s;
            }
            f.swap(tmp);
        }
    }
}

double marching_squares_length(const GridField &g, const std::vector<double> &phi, const std::optional<Box> &region) {
    const int nx = g.counts()[0], ny = g.counts()[1];
    const double h = g.spacing();
    constexpr double level = 0.5;
    double total = 0.0;
    for (int i = 0; i + 1 < nx; ++i) {
        for (int j = 0; j + 1 < ny; ++j) {
            // counter-clockwise corners (i,j) (i+1,j) (i+1,j+1) (i,j+1)
            const std::array<std::array<int, 2>, 4> cidx{{{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}}};
            std::array<double, 4> v{};
            int mask = 0;
            for (int c = 0; c < 4; ++c) {
                v[c] = phi[static_cast<long>(cidx[c][0]) * ny + cidx[c][1]];
                if (v[c] > level) mask |= 1 << c;
            }
            if (mask == 0 || mask == 15) continue;
            std::array<std::array<double, 2>, 4> cross{};
            std::array<bool, 4> has{};
            for (int e = 0; e < 4; ++e) {
                const int c0 = e, c1 = (e + 1) % 4;
                if (((mask >> c0) & 1) == ((mask >> c1) & 1)) continue;
                const double t = (level - v[c0]) / (v[c1] - v[c0]);
                has[e] = true;
                for (int k = 0; k < 2; ++k) cross[e][k] = (cidx[c0][k] + t * (cidx[c1][k] - cidx[c0][k])) * h;
            }
            std::vector<std::pair<int, int>> segs;
            if (mask == 5 || mask == 10) {
                const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                const bool center_in = center > level;
                const bool even_in = (mask == 5); // corners 0 and 2 inside
                if (center_in == even_in) segs = {{0, 1}, {2, 3}}; // isolate corners 1 and 3
                else segs = {{3, 0}, {1, 2}};                     // isolate corners 0 and 2
            } else {
                std::array<int, 2> ends{};
                int k = 0;
                for (int e = 0; e < 4; ++e)
                    if (has[e]) ends[k++] = e;
                segs = {{ends[0], ends[1]}};
            }
            for (const auto &[e0, e1] : segs) {
                const double dx = cross[e1][0] - cross[e0][0], dy = cross[e1][1] - cross[e0][1];
                if (region) {
                    const Vec mid{g.lo()[0] + 0.5 * (cross[e0][0] + cross[e1][0]),
                                  g.lo()[1] + 0.5 * (cross[e0][1] + cross[e1][1])};
                    if (!region->contains(mid)) continue;
                }
                total += std::sqrt(dx * dx + dy * dy);
            }
        }
    }
    return total;
}

} // namespace

PerimeterReport perimeter(const GridField &u, const Vec &a, const Vec &b, const std::optional<Box> &region) {
    const std::vector<double> chi = well_indicator(u, a, b);
    const int n = u.space_dim();
    const double h = u.spacing();
    PerimeterReport rep;

    // Dual faces: a face orthogonal to axis k has extent h in each other axis, halved on the boundary.
    for (long node = 0; node < u.node_count(); ++node) {
        const auto idx = u.coords(node);
        for (int k = 0; k < n; ++k) {
            if (idx[k] + 1 >= u.counts()[k]) continue;
            auto nb = idx;
            ++nb[k];
            const long other = u.index(nb);
            if (chi[node] == chi[other]) continue;
            const Vec x = u.position(node);
            if (region && (x[k] + 0.5 * h < region->lo[k] || x[k] + 0.5 * h > region->hi[k])) continue;
            // Clip the face extent to the domain and the region along every other axis.
            double area = 1.0;
            for (int j = 0; j < n && area > 0.0; ++j) {
                if (j == k) continue;
                double lo = std::max(x[j] - 0.5 * h, u.lo()[j]), hi = std::min(x[j] + 0.5 * h, u.hi()[j]);
                if (region) {
                    lo = std::max(lo, region->lo[j]);
                    hi = std::min(hi, region->hi[j]);
                }
                area *= std::max(0.0, hi - lo);
            }
            rep.face_count += area;
        }
    }

    if (n == 1) {
        rep.reconstructed = rep.face_count;
        return rep;
    }
    std::vector<double> phi = chi;
    smooth(u, phi, 2);
    if (n == 2) {
        rep.reconstructed = marching_squares_length(u, phi, region);
    } else {
        // Total variation of the smoothed indicator (co-area estimate).
        GridField tmp(u.counts(), u.lo(), u.hi(), 1);
        std::copy(phi.begin(), phi.end(), tmp.data().begin());
        const CellStencil st(tmp);
        const double vol = std::pow(h, n);
        st.for_each_cell(tmp, [&](long, long base, const std::array<int, kMaxDim> &idx) {
            if (region && !region->contains(midpoint_of(tmp, idx))) return;
            rep.reconstructed += std::sqrt(cell_grad_squared(tmp, st, base)) * vol;
        });
    }
    return rep;
}

double sharp_energy(const GridField &u, const Vec &a, const Vec &b, double kh) {
    return kh * perimeter(u, a, b).reconstructed;
}

GridField project_to_wells(const GridField &u, const Vec &a, const Vec &b) {
    if (a.dim() != u.state_dim() || b.dim() != u.state_dim()) throw std::invalid_argument("project_to_wells: well dimension mismatch");
    GridField out = u;
    for (long i = 0; i < u.node_count(); ++i) {
        const Vec v = u.value(i);
        out.set(i, (v - a).squaredNorm() <= (v - b).squaredNorm() ? a : b);
    }
    return out;
}

double l1_distance(const GridField &u, const GridField &v) {
    if (!u.same_grid(v)) throw std::invalid_argument("l1_distance: grids differ");
    const double vol = std::pow(u.spacing(), u.space_dim());
    double s = 0.0;
    for (long i = 0; i < u.node_count(); ++i) {
        const auto idx = u.coords(i);
        double w = 1.0;
        for (int k = 0; k < u.space_dim(); ++k)
            if (idx[k] == 0 || idx[k] == u.counts()[k] - 1) w *= 0.5;
        s += w * (u.value(i) - v.value(i)).norm();
    }
    return s * vol;
}

// --- Serialization -------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'H', 'P', 'F', 'I', 'E', 'L', 'D', '1'};

template <class T>
void put(std::ofstream &os, const T &v) { os.write(reinterpret_cast<const char *>(&v), sizeof(T)); }
template <class T>
T get(std::ifstream &is) {
    T v{};
    is.read(reinterpret_cast<char *>(&v), sizeof(T));
    return v;
}
} // namespace

void write_field(const GridField &u, const std::filesystem::path &path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(u.space_dim()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(u.state_dim()));
    for (int c : u.counts()) put<std::int64_t>(os, c);
    for (int i = 0; i < u.space_dim(); ++i) put<double>(os, u.lo()[i]);
    for (int i = 0; i < u.space_dim(); ++i) put<double>(os, u.hi()[i]);
    os.write(reinterpret_cast<const char *>(u.data().data()), static_cast<std::streamsize>(u.data().size_bytes()));
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

GridField read_field(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error(path.string() + ": not a field file");
    const auto n = get<std::uint32_t>(is), d = get<std::uint32_t>(is);
    if (n < 1 || n > kMaxDim || d < 1 || d > kMaxDim) throw std::runtime_error(path.string() + ": bad header");
    std::vector<int> counts(n);
    for (auto &c : counts) c = static_cast<int>(get<std::int64_t>(is));
    Vec lo(static_cast<int>(n)), hi(static_cast<int>(n));
    for (unsigned i = 0; i < n; ++i) lo[i] = get<double>(is);
    for (unsigned i = 0; i < n; ++i) hi[i] = get<double>(is);
    if (!is) throw std::runtime_error(path.string() + ": truncated header");
    GridField u(counts, lo, hi, static_cast<int>(d));
    is.read(reinterpret_cast<char *>(u.data().data()), static_cast<std::streamsize>(u.data().size_bytes()));
    if (!is) throw std::runtime_error(path.string() + ": truncated values");
    return u;
}

} // namespace hetphase
