#include "hetphase/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace hetphase {

// --- Problem setup -------------------------------------------------------------

TransitionProblem TransitionProblem::on_unit_box(int space_dim, double eps, double delta,
                                                 std::shared_ptr<const TruncatedPotential> potential, int max_cells) {
    if (!(eps > 0.0) || !(delta > 0.0)) throw std::invalid_argument("on_unit_box: eps and delta must be positive");
    double h = delta / 8.0;
    if (!potential->inner().modulation().is_constant()) h = std::min(h, eps / 4.0);
    int cells = static_cast<int>(std::ceil(1.0 / h - 1e-9));
    if (cells % 2 == 0) ++cells; // keeps the centred interface between nodes
    if (cells > max_cells)
        throw std::invalid_argument("on_unit_box: " + std::to_string(cells) + " cells per axis exceed the budget of " +
                                    std::to_string(max_cells));
    TransitionProblem p;
    p.counts.assign(space_dim, cells + 1);
    p.lo = Vec(space_dim, 0.0);
    p.hi = Vec(space_dim, 1.0);
    p.eps = eps;
    p.delta = delta;
    p.potential = std::move(potential);
    return p;
}

GridField TransitionProblem::make_grid() const {
    if (!potential) throw std::invalid_argument("TransitionProblem: no potential");
    return GridField(counts, lo, hi, potential->inner().state_dim());
}

double TransitionProblem::signed_distance(const Vec &x) const {
    const int n = x.dim();
    if (geometry == Geometry::Dirichlet) return x[0] - (0.5 * (lo[0] + hi[0]) + offset);
    if (n != 2) throw std::invalid_argument("planar geometry requires N = 2");
    const Vec normal{std::cos(theta), std::sin(theta)};
    const Vec center{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
    return (x - center).dot(normal) - offset;
}

Vec straight_profile(const Vec &a, const Vec &b, double mean_modulation, const BaseWell &base, double s, double delta) {
    const double len = distance(a, b);
    if (len == 0.0) return a;
    const Vec mid = 0.5 * (a + b);
    const double kappa = 2.0 * std::sqrt(mean_modulation * base.value(mid)) / len;
    return mid + (0.5 * std::tanh(kappa * s / delta)) * (b - a);
}

namespace {

/// Largest absolute row sum of the Hessian of V along the extended segment a-b (finite differences).
template <class GradFn>
double curvature_along(const Vec &a, const Vec &b, GradFn &&grad) {
    const int d = a.dim();
    const double scale = std::max(1.0, distance(a, b));
    const double fd = 1e-5 * scale;
    double best = 1e-12;
    for (int k = 0; k <= 100; ++k) {
        const double t = -0.1 + 1.2 * k / 100.0;
        const Vec p = a + t * (b - a);
        std::array<double, kMaxDim> row{};
        for (int i = 0; i < d; ++i) {
            Vec pp = p, pm = p;
            pp[i] += fd;
            pm[i] -= fd;
            const Vec diff = (grad(pp) - grad(pm)) * (0.5 / fd);
            for (int j = 0; j < d; ++j) row[j] += std::abs(diff[j]);
        }
        for (int j = 0; j < d; ++j) best = std::max(best, row[j]);
    }
    return best;
}

/// Solves (I + tau A_k) x = r along every grid line of each axis in turn, A_k the 1D Neumann
/// operator (2 delta / h^2) tridiag(-1, 2, -1).
void apply_diffusion_preconditioner(const GridField &g, std::span<double> r, double tau, double delta) {
    const int n = g.space_dim(), d = g.state_dim();
    const double c = tau * 2.0 * delta / (g.spacing() * g.spacing());
    std::vector<double> cp, dp;
    for (int axis = 0; axis < n; ++axis) {
        const int len = g.counts()[axis];
        long stride = 1, outer = 1;
        for (int j = axis + 1; j < n; ++j) stride *= g.counts()[j];
        for (int j = 0; j < axis; ++j) outer *= g.counts()[j];
        cp.resize(len);
        dp.resize(len);
        for (long o = 0; o < outer; ++o) {
            for (long in = 0; in < stride; ++in) {
                const long start = o * len * stride + in;
                for (int k = 0; k < d; ++k) {
                    auto at = [&](int i) -> double & { return r[(start + i * stride) * d + k]; };
                    // Thomas algorithm; off-diagonals are -c.
                    double diag = 1.0 + c;
                    cp[0] = -c / diag;
                    dp[0] = at(0) / diag;
                    for (int i = 1; i < len; ++i) {
                        diag = 1.0 + (i == len - 1 ? c : 2.0 * c);
                        const double m = diag + c * cp[i - 1];
                        cp[i] = -c / m;
                        dp[i] = (at(i) + c * dp[i - 1]) / m;
                    }
                    at(len - 1) = dp[len - 1];
                    for (int i = len - 2; i >= 0; --i) at(i) = dp[i] - cp[i] * at(i + 1);
                }
            }
        }
    }
}

} // namespace

MinimizeResult run_gradient_flow(FlowSetup setup, const CellPotential &potential, const SolverOptions &opts) {
    GridField u = std::move(setup.field);
    const int n = u.space_dim(), d = u.state_dim();
    const double delta = setup.delta, h = u.spacing();
    const double vol = std::pow(h, n);
    const auto &pinned = setup.pinned;
    if (static_cast<long>(pinned.size()) != u.node_count()) throw std::invalid_argument("run_gradient_flow: pin mask size mismatch");

    const bool explicit_scheme = opts.scheme == SolverOptions::Scheme::Explicit;
    const double dt0 = opts.dt > 0.0 ? opts.dt
                       : explicit_scheme ? 1.9 / (8.0 * n * delta / (h * h) + setup.curvature / delta)
                                         : 1.9 * delta / setup.curvature;
    const double dt_cap = explicit_scheme ? dt0 : 8.0 * dt0;

    std::vector<double> g(u.data().size()), g_trial(g.size()), dir(g.size());
    GridField trial = u;
    auto mask = [&](std::vector<double> &v) {
        for (long i = 0; i < u.node_count(); ++i)
            if (pinned[i])
                for (int k = 0; k < d; ++k) v[i * d + k] = 0.0;
    };

    MinimizeResult res;
    double energy = energy_and_gradient(u, potential, delta, g);
    if (opts.record_history) res.energy_history.push_back(energy);
    double dt = dt0;
    int streak = 0;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        mask(g);
        double gnorm = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            dir[i] = g[i] / vol;
            gnorm += dir[i] * dir[i];
        }
        if (gnorm == 0.0) {
            res.converged = true;
            break;
        }
        if (!explicit_scheme) apply_diffusion_preconditioner(u, dir, dt, delta);
        mask(dir);

        const auto src = u.data();
        auto dst = trial.data();
        for (std::size_t i = 0; i < dir.size(); ++i) dst[i] = src[i] - dt * dir[i];
        const double e_new = energy_and_gradient(trial, potential, delta, g_trial);
        if (e_new <= energy + 1e-12 * std::abs(energy)) {
            const double decrease = energy - e_new;
            std::swap(u, trial);
            g.swap(g_trial);
            res.flow_time += dt;
            if (opts.record_history) res.energy_history.push_back(e_new);
            const double old = energy;
            energy = e_new;
            if (decrease <= opts.tol * dt * std::abs(old)) {
                res.converged = true;
                ++iter;
                break;
            }
            if (++streak >= 3) dt = std::min(1.5 * dt, dt_cap);
        } else {
            ++res.rejected_steps;
            streak = 0;
            dt *= 0.5;
            if (dt < 1e-14 * dt0) throw std::runtime_error("gradient flow: step-size underflow (diverging energy)");
        }
    }
    res.iterations = iter;
    res.field = std::move(u);
    return res;
}

MinimizeResult minimize_diffuse(const TransitionProblem &problem, const SolverOptions &opts) {
    if (!problem.potential) throw std::invalid_argument("minimize_diffuse: no potential");
    const TruncatedPotential &tp = *problem.potential;
    const PotentialSpec &spec = tp.inner();
    if (!(problem.eps > 0.0) || !(problem.delta > 0.0)) throw std::invalid_argument("minimize_diffuse: eps, delta must be positive");

    FlowSetup setup;
    setup.field = problem.initial ? *problem.initial : problem.make_grid();
    GridField &u = setup.field;
    if (u.state_dim() != spec.state_dim()) throw std::invalid_argument("minimize_diffuse: state dimension mismatch");
    const double h = u.spacing();
    if (h > problem.delta / 8.0 * (1.0 + 1e-12))
        throw std::invalid_argument("minimize_diffuse: grid spacing exceeds delta/8");
    if (!spec.modulation().is_constant() && h > problem.eps / 4.0 * (1.0 + 1e-12))
        throw std::invalid_argument("minimize_diffuse: grid spacing exceeds eps/4");

    const Vec &a = spec.a(), &b = spec.b();
    const double mean = spec.modulation().mean();
    setup.pinned.assign(u.node_count(), 0);
    for (long i = 0; i < u.node_count(); ++i) {
        const Vec x = u.position(i);
        const double s = problem.signed_distance(x);
        if (!problem.initial) u.set(i, straight_profile(a, b, mean, spec.base(), s, problem.delta));
        if (problem.geometry == TransitionProblem::Geometry::Dirichlet) {
            const auto idx = u.coords(i);
            if (idx[0] == 0) {
                u.set(i, a);
                setup.pinned[i] = 1;
            } else if (idx[0] == u.counts()[0] - 1) {
                u.set(i, b);
                setup.pinned[i] = 1;
            }
        } else {
            if (std::abs(s) > problem.collar * problem.delta) {
                u.set(i, s < 0.0 ? a : b);
                setup.pinned[i] = 1;
            } else if (u.on_boundary(i)) {
                u.set(i, straight_profile(a, b, mean, spec.base(), s, problem.delta));
                setup.pinned[i] = 1;
            }
        }
    }
    setup.delta = problem.delta;
    setup.curvature = std::max(spec.modulation().max(), 0.0) *
                      curvature_along(a, b, [&](const Vec &p) { return spec.base().gradient(p); });

    const HeterogeneousCells cells(u, problem.eps, tp);
    MinimizeResult res = run_gradient_flow(std::move(setup), cells, opts);
    res.report = diffuse_energy(res.field, problem.eps, problem.delta, tp);
    res.untruncated_total = diffuse_energy(res.field, problem.eps, problem.delta, spec).total;
    double umax = 0.0;
    for (long i = 0; i < res.field.node_count(); ++i) umax = std::max(umax, res.field.value(i).norm());
    res.truncation_active = umax > tp.radius();
    return res;
}

ProfileResult optimal_profile_1d(const HomogenizedPotential &hp, double delta, double length, const SolverOptions &opts,
                                 int nodes_per_delta) {
    if (!(delta > 0.0) || !(length > 0.0) || nodes_per_delta < 1)
        throw std::invalid_argument("optimal_profile_1d: delta, length and resolution must be positive");
    const int cells = static_cast<int>(std::ceil(length * nodes_per_delta / delta - 1e-9));
    FlowSetup setup;
    setup.field = GridField({cells + 1}, Vec{-0.5 * length}, Vec{0.5 * length}, hp.dim());
    GridField &u = setup.field;
    const Vec &a = hp.a(), &b = hp.b();
    setup.pinned.assign(u.node_count(), 0);
    for (long i = 0; i < u.node_count(); ++i)
        u.set(i, straight_profile(a, b, hp.modulation_mean(), hp.base(), u.position(i)[0], delta));
    u.set(0, a);
    u.set(u.node_count() - 1, b);
    setup.pinned.front() = setup.pinned.back() = 1;
    setup.delta = delta;
    setup.curvature = curvature_along(a, b, [&](const Vec &p) { return hp.gradient(p); });

    const HomogenizedCells cells_potential(hp);
    MinimizeResult res = run_gradient_flow(std::move(setup), cells_potential, opts);
    ProfileResult out;
    out.energy = homogenized_energy(res.field, delta, hp);
    out.converged = res.converged;
    out.profile = std::move(res.field);
    return out;
}

// --- Recovery sequence ---------------------------------------------------------

GridField recovery_sequence(const GridField &u_sharp, double delta, const Path &geodesic, const EffectivePotential &hp,
                            const RecoveryOptions &opts) {
    if (!(delta > 0.0) || !(opts.rescale > 0.0) || !(opts.collar > 0.0))
        throw std::invalid_argument("recovery_sequence: delta, rescale and collar must be positive");
    if (geodesic.size() < 2) throw std::invalid_argument("recovery_sequence: geodesic needs at least 2 nodes");
    const Vec a = geodesic.nodes.front(), b = geodesic.nodes.back();
    const int n = u_sharp.space_dim();
    const double h = u_sharp.spacing();

    // Labels: true on the a side.
    std::vector<char> on_a(u_sharp.node_count());
    for (long i = 0; i < u_sharp.node_count(); ++i) {
        const Vec v = u_sharp.value(i);
        if (v == a) on_a[i] = 1;
        else if (v == b) on_a[i] = 0;
        else throw std::invalid_argument("recovery_sequence: u_sharp must take only the geodesic endpoint values");
    }

    // Interface points: centers of faces between differing labels.
    std::vector<Vec> iface;
    for (long i = 0; i < u_sharp.node_count(); ++i) {
        const auto idx = u_sharp.coords(i);
        for (int k = 0; k < n; ++k) {
            if (idx[k] + 1 >= u_sharp.counts()[k]) continue;
            auto nb = idx;
            ++nb[k];
            if (on_a[i] == on_a[u_sharp.index(nb)]) continue;
            Vec x = u_sharp.position(i);
            x[k] += 0.5 * h;
            if (x[0] - u_sharp.lo()[0] < h || u_sharp.hi()[0] - x[0] < h)
                throw std::invalid_argument("recovery_sequence: interface touches a Dirichlet face");
            iface.push_back(x);
        }
    }

    // Optimal-profile clock along the geodesic: dt = ds / sqrt(W_H(g(s))), t = 0 where the nearest well switches.
    const std::size_t m = geodesic.size();
    std::vector<double> t(m, 0.0);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const Vec &p = geodesic.nodes[j], &q = geodesic.nodes[j + 1];
        const double len = distance(p, q);
        const double s = std::sqrt(std::max(hp.value(0.5 * (p + q)), 0.0));
        t[j + 1] = t[j] + (len == 0.0 ? 0.0 : (s > 0.0 ? len / s : 1e6 * len / h));
    }
    double t_center = t.back();
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double f0 = distance(geodesic.nodes[j], a) - distance(geodesic.nodes[j], b);
        const double f1 = distance(geodesic.nodes[j + 1], a) - distance(geodesic.nodes[j + 1], b);
        if (f0 <= 0.0 && f1 > 0.0) {
            t_center = t[j] + (t[j + 1] - t[j]) * (-f0 / (f1 - f0));
            break;
        }
    }
    for (double &v : t) v -= t_center;
    auto along = [&](double tau) -> Vec {
        if (tau <= t.front()) return a;
        if (tau >= t.back()) return b;
        const auto it = std::upper_bound(t.begin(), t.end(), tau);
        const std::size_t j = static_cast<std::size_t>(it - t.begin()) - 1;
        const double span = t[j + 1] - t[j];
        const double w = span > 0.0 ? (tau - t[j]) / span : 0.0;
        return geodesic.nodes[j] + w * (geodesic.nodes[j + 1] - geodesic.nodes[j]);
    };

    // Bucket the interface points for the distance queries.
    const double width = opts.rescale * delta;
    const double reach = opts.collar * width;
    const double bucket = std::max(reach, h);
    std::map<std::array<long, kMaxDim>, std::vector<std::size_t>> buckets;
    auto key_of = [&](const Vec &x) {
        std::array<long, kMaxDim> key{};
        for (int k = 0; k < n; ++k) key[k] = static_cast<long>(std::floor((x[k] - u_sharp.lo()[k]) / bucket));
        return key;
    };
    for (std::size_t i = 0; i < iface.size(); ++i) buckets[key_of(iface[i])].push_back(i);

    GridField out = u_sharp;
    for (long i = 0; i < u_sharp.node_count(); ++i) {
        const Vec x = u_sharp.position(i);
        const auto key = key_of(x);
        double best = std::numeric_limits<double>::infinity();
        std::array<int, kMaxDim> off{};
        for (int k = 0; k < n; ++k) off[k] = -1;
        while (true) {
            auto nk = key;
            for (int k = 0; k < n; ++k) nk[k] += off[k];
            if (auto it = buckets.find(nk); it != buckets.end())
                for (std::size_t j : it->second) best = std::min(best, distance(x, iface[j]));
            int k = 0;
            while (k < n && ++off[k] > 1) off[k++] = -1;
            if (k == n) break;
        }
        if (best > reach) continue; // clamped: keeps the sharp value
        const double tau = (on_a[i] ? -best : best) / width;
        out.set(i, along(tau));
    }
    return out;
}

} // namespace hetphase
