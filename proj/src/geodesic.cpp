#include "hetphase/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace hetphase {

// --- Path ------------------------------------------------------------------

double Path::length() const {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) s += distance(nodes[i], nodes[i + 1]);
    return s;
}

double Path::max_norm() const {
    double m = 0.0;
    for (const Vec &g : nodes) m = std::max(m, g.norm());
    return m;
}

Path Path::reversed() const {
    Path r{nodes};
    std::reverse(r.nodes.begin(), r.nodes.end());
    return r;
}

Path Path::resampled(std::size_t node_count) const {
    if (nodes.size() < 2 || node_count < 2) throw std::invalid_argument("Path::resampled: need at least 2 nodes");
    std::vector<double> arc(nodes.size(), 0.0);
    for (std::size_t i = 1; i < nodes.size(); ++i) arc[i] = arc[i - 1] + distance(nodes[i - 1], nodes[i]);
    const double total = arc.back();
    Path out;
    out.nodes.reserve(node_count);
    out.nodes.push_back(nodes.front());
    if (total == 0.0) {
        for (std::size_t k = 1; k < node_count; ++k) out.nodes.push_back(nodes.front());
        out.nodes.back() = nodes.back();
        return out;
    }
    std::size_t seg = 0;
    for (std::size_t k = 1; k + 1 < node_count; ++k) {
        const double target = total * static_cast<double>(k) / static_cast<double>(node_count - 1);
        while (seg + 2 < nodes.size() && arc[seg + 1] < target) ++seg;
        const double span = arc[seg + 1] - arc[seg];
        const double t = span > 0.0 ? std::clamp((target - arc[seg]) / span, 0.0, 1.0) : 0.0;
        out.nodes.push_back(nodes[seg] + t * (nodes[seg + 1] - nodes[seg]));
    }
    out.nodes.push_back(nodes.back());
    return out;
}

double path_cost(const Path &path, const EffectivePotential &potential) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
        const Vec &p = path.nodes[i], &q = path.nodes[i + 1];
        const double len = distance(p, q);
        if (len == 0.0) continue;
        s += std::sqrt(potential.value(0.5 * (p + q))) * len;
    }
    return 2.0 * s;
}

// --- String method -----------------------------------------------------------

namespace {

bool lexicographic_less(const Vec &x, const Vec &y) {
    for (int i = 0; i < x.dim(); ++i) {
        if (x[i] < y[i]) return true;
        if (x[i] > y[i]) return false;
    }
    return false;
}

std::vector<Vec> cost_gradient(const Path &path, const EffectivePotential &potential) {
    const std::size_t n = path.nodes.size();
    const int d = potential.dim();
    std::vector<Vec> grad(n, Vec(d));
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const Vec &p = path.nodes[j], &q = path.nodes[j + 1];
        const Vec delta = q - p;
        const double len = delta.norm();
        if (len == 0.0) continue;
        const Vec mid = 0.5 * (p + q);
        const double w = potential.value(mid);
        const double s = std::sqrt(std::max(w, 0.0));
        const Vec ds = s > 0.0 ? (0.5 / s) * potential.gradient(mid) : Vec(d);
        const Vec along = (2.0 * s / len) * delta;
        const Vec common = len * ds; // 2 * (0.5 * ds * len)
        grad[j] += common - along;
        grad[j + 1] += common + along;
    }
    return grad;
}

Path straight_path(const Vec &a, const Vec &b, int node_count) {
    Path path;
    path.nodes.reserve(node_count);
    for (int i = 0; i < node_count; ++i) {
        const double t = static_cast<double>(i) / (node_count - 1);
        path.nodes.push_back(i == node_count - 1 ? b : a + t * (b - a));
    }
    return path;
}

} // namespace

GeodesicResult minimize_KH(const EffectivePotential &potential, const Vec &a_in, const Vec &b_in,
                           const GeodesicOptions &opts) {
    if (opts.nodes < 8) throw std::invalid_argument("minimize_KH: need at least 8 nodes");
    if (a_in.dim() != potential.dim() || b_in.dim() != potential.dim())
        throw std::invalid_argument("minimize_KH: well dimension mismatch");

    const bool swapped = lexicographic_less(b_in, a_in);
    const Vec &a = swapped ? b_in : a_in;
    const Vec &b = swapped ? a_in : b_in;
    const int d = potential.dim();

    GeodesicResult result;
    if (a == b) {
        result.path.nodes.assign(opts.nodes, a);
        result.converged = true;
        result.max_norm = a.norm();
        result.valid = opts.radius <= 0.0 || result.max_norm <= opts.radius;
        return result;
    }

    const Path straight = straight_path(a, b, opts.nodes);
    const double straight_cost = path_cost(straight, potential);

    Path path = straight;
    if (d > 1 && opts.jitter > 0.0) {
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> normal;
        const Vec tangent = (b - a) * (1.0 / distance(a, b));
        Vec dir(d);
        do {
            for (int i = 0; i < d; ++i) dir[i] = normal(rng);
            dir -= dir.dot(tangent) * tangent;
        } while (dir.norm() < 1e-8);
        dir *= 1.0 / dir.norm();
        const double amplitude = opts.jitter * distance(a, b);
        for (int i = 1; i + 1 < opts.nodes; ++i) {
            const double t = static_cast<double>(i) / (opts.nodes - 1);
            path.nodes[i] += (amplitude * std::sin(std::numbers::pi * t)) * dir;
        }
        path = path.resampled(opts.nodes);
    }

    double cost = path_cost(path, potential);
    result.cost_history.push_back(cost);
    int iter = 0;
    bool converged = false;
    for (; iter < opts.max_iter; ++iter) {
        const std::vector<Vec> grad = cost_gradient(path, potential);
        double gmax = 0.0;
        for (std::size_t i = 1; i + 1 < grad.size(); ++i) gmax = std::max(gmax, grad[i].norm());
        if (gmax == 0.0) {
            converged = true;
            break;
        }
        const double chord = path.length() / (opts.nodes - 1);
        double step = 0.1 * chord;
        bool accepted = false;
        Path trial;
        double trial_cost = cost;
        while (step >= 1e-14 * chord) {
            trial = path;
            for (std::size_t i = 1; i + 1 < grad.size(); ++i) trial.nodes[i] -= (step / gmax) * grad[i];
            trial = trial.resampled(opts.nodes);
            trial_cost = path_cost(trial, potential);
            if (trial_cost < cost) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            converged = true; // no descent direction left at machine resolution
            break;
        }
        path = std::move(trial);
        cost = trial_cost;
        result.cost_history.push_back(cost);
        const std::size_t h = result.cost_history.size();
        if (h > static_cast<std::size_t>(opts.window)) {
            const double old = result.cost_history[h - 1 - opts.window];
            if ((old - cost) <= opts.tol * cost) {
                converged = true;
                ++iter;
                break;
            }
        }
    }

    if (straight_cost <= cost) {
        path = straight;
        cost = straight_cost;
    }
    result.kh = cost;
    result.path = swapped ? path.reversed() : path;
    result.iterations = iter;
    result.converged = converged;
    result.max_norm = result.path.max_norm();
    result.valid = opts.radius <= 0.0 || result.max_norm <= opts.radius;
    return result;
}

// --- Lattice oracle ------------------------------------------------------------

OracleResult dijkstra_oracle(const EffectivePotential &potential, const Vec &a, const Vec &b, const Vec &lo,
                             const Vec &hi, int per_axis, int order) {
    const int d = potential.dim();
    if (d > 3) throw std::invalid_argument("dijkstra_oracle: state dimension above 3");
    if (lo.dim() != d || hi.dim() != d || a.dim() != d || b.dim() != d)
        throw std::invalid_argument("dijkstra_oracle: dimension mismatch");
    if (per_axis < 2 || order < 1) throw std::invalid_argument("dijkstra_oracle: per_axis >= 2 and order >= 1 required");

    Vec spacing(d);
    long total = 1;
    for (int i = 0; i < d; ++i) {
        if (!(hi[i] > lo[i])) throw std::invalid_argument("dijkstra_oracle: empty box");
        spacing[i] = (hi[i] - lo[i]) / (per_axis - 1);
        total *= per_axis;
    }
    auto snap = [&](const Vec &w) {
        long flat = 0;
        for (int i = 0; i < d; ++i) {
            if (w[i] < lo[i] || w[i] > hi[i]) throw std::invalid_argument("dijkstra_oracle: box excludes a well");
            const long k = std::lround((w[i] - lo[i]) / spacing[i]);
            flat = flat * per_axis + std::clamp<long>(k, 0, per_axis - 1);
        }
        return flat;
    };
    auto coords = [&](long flat, std::array<long, kMaxDim> &idx) {
        for (int i = d - 1; i >= 0; --i) {
            idx[i] = flat % per_axis;
            flat /= per_axis;
        }
    };
    auto position = [&](long flat) {
        std::array<long, kMaxDim> idx{};
        coords(flat, idx);
        Vec p(d);
        for (int i = 0; i < d; ++i) p[i] = lo[i] + spacing[i] * idx[i];
        return p;
    };

    const long source = snap(a), target = snap(b);
    OracleResult out;
    if (source == target) {
        out.path.nodes = {position(source), position(target)};
        return out;
    }

    struct Offset {
        std::array<long, kMaxDim> step{};
        Vec half;
        double length;
    };
    std::vector<Offset> offsets;
    {
        std::array<long, kMaxDim> s{};
        for (int i = 0; i < d; ++i) s[i] = -order;
        while (true) {
            bool zero = true;
            Offset o{s, Vec(d), 0.0};
            double len2 = 0.0;
            for (int i = 0; i < d; ++i) {
                zero = zero && s[i] == 0;
                o.half[i] = 0.5 * s[i] * spacing[i];
                len2 += (s[i] * spacing[i]) * (s[i] * spacing[i]);
            }
            o.length = std::sqrt(len2);
            if (!zero) offsets.push_back(o);
            int k = 0;
            while (k < d && ++s[k] > order) s[k++] = -order;
            if (k == d) break;
        }
    }

    std::vector<double> dist(total, std::numeric_limits<double>::infinity());
    std::vector<long> prev(total, -1);
    std::vector<char> settled(total, 0);
    using Entry = std::pair<double, long>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[source] = 0.0;
    heap.emplace(0.0, source);
    std::array<long, kMaxDim> idx{};
    while (!heap.empty()) {
        const auto [du, u] = heap.top();
        heap.pop();
        if (du > dist[u] || settled[u]) continue;
        settled[u] = 1;
        ++out.nodes_visited;
        if (u == target) break;
        coords(u, idx);
        const Vec pu = position(u);
        for (const Offset &o : offsets) {
            long v = 0;
            bool inside = true;
            for (int i = 0; i < d && inside; ++i) {
                const long k = idx[i] + o.step[i];
                inside = k >= 0 && k < per_axis;
                v = v * per_axis + k;
            }
            if (!inside || settled[v]) continue;
            const double w = 2.0 * std::sqrt(std::max(potential.value(pu + o.half), 0.0)) * o.length;
            const double alt = du + w;
            if (alt < dist[v] || (alt == dist[v] && u < prev[v])) {
                dist[v] = alt;
                prev[v] = u;
                heap.emplace(alt, v);
            }
        }
    }
    out.cost = dist[target];
    for (long v = target; v != -1; v = prev[v]) out.path.nodes.push_back(position(v));
    std::reverse(out.path.nodes.begin(), out.path.nodes.end());
    return out;
}

double kh_1d(const EffectivePotential &potential, double a, double b) {
    if (potential.dim() != 1) throw std::invalid_argument("kh_1d: state dimension must be 1");
    if (a == b) return 0.0;
    const double lo = std::min(a, b), hi = std::max(a, b);
    auto f = [&](double s) { return std::sqrt(std::max(potential.value(Vec{s}), 0.0)); };
    double error = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, 1e-13, &error);
    if (!(error <= 1e-8)) throw std::runtime_error("kh_1d: quadrature did not reach absolute tolerance 1e-8");
    return 2.0 * integral;
}

TruncationInvarianceReport verify_truncation_invariance(const PotentialSpec &spec, const TruncatedPotential &tspec,
                                                        const GeodesicOptions &opts, double threshold) {
    const int resolution = default_quadrature_resolution(spec.space_dim());
    const HomogenizedPotential plain(spec, HomogenizedPotential::Mode::Quadrature, resolution);
    const HomogenizedPotential capped(tspec, resolution);
    GeodesicOptions o = opts;
    if (o.radius <= 0.0) o.radius = tspec.radius();
    const GeodesicResult r1 = minimize_KH(plain, spec.a(), spec.b(), o);
    const GeodesicResult r2 = minimize_KH(capped, spec.a(), spec.b(), o);
    if (!r1.converged || !r2.converged) throw std::runtime_error("verify_truncation_invariance: geodesic solve did not converge");
    TruncationInvarianceReport rep;
    rep.kh = r1.kh;
    rep.kh_truncated = r2.kh;
    rep.difference = std::abs(r1.kh - r2.kh);
    rep.threshold = std::max(threshold, 2.0 * opts.tol * std::max(r1.kh, r2.kh));
    rep.within = rep.difference < rep.threshold;
    rep.valid = r1.valid && r2.valid;
    return rep;
}

} // namespace hetphase
