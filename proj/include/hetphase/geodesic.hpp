#pragma once

#include <cstdint>
#include <vector>

#include "hetphase/homogenize.hpp"

namespace hetphase {

/// Discrete curve g_0 ... g_K with g_0 = a and g_K = b.
struct Path {
    std::vector<Vec> nodes;

    std::size_t size() const { return nodes.size(); }
    double length() const;
    double max_norm() const;
    Path reversed() const;
    /// Equal-arclength resampling by piecewise-linear interpolation; endpoints are kept.
    Path resampled(std::size_t node_count) const;
};

/// 2 sum_i sqrt(V((g_i + g_{i+1}) / 2)) |g_{i+1} - g_i|.
double path_cost(const Path &path, const EffectivePotential &potential);

struct GeodesicOptions {
    int nodes = 128;         // K + 1 nodes, K >= 8
    double tol = 1e-8;       // relative cost decrease over `window` iterations
    int window = 10;
    int max_iter = 20000;
    double jitter = 0.05;    // transverse initial perturbation, fraction of |b - a|
    std::uint64_t seed = 1;
    double radius = 0.0;     // > 0 enables the |g_i| <= R validity check
};

struct GeodesicResult {
    double kh = 0.0;
    Path path;
    int iterations = 0;
    bool converged = false;
    bool valid = true;       // false when the path leaves |p| <= R
    double max_norm = 0.0;
    std::vector<double> cost_history; // one entry per accepted outer iteration
};

/// String-method estimate of 2 inf int sqrt(V(g)) |g'|: gradient descent on interior nodes
/// alternating with equal-arclength reparametrization. Endpoints are solved in a canonical
/// (lexicographic) order so that swapping a and b returns the same value.
GeodesicResult minimize_KH(const EffectivePotential &potential, const Vec &a, const Vec &b,
                           const GeodesicOptions &opts = {});

struct OracleResult {
    double cost = 0.0;
    Path path;
    std::size_t nodes_visited = 0;
};

/// Shortest path on the lattice graph over the box [lo, hi] with `per_axis` nodes per axis and
/// edges to every node within Chebyshev distance `order`. Edge weight 2 sqrt(V(mid)) |edge|.
/// Wells are snapped to the nearest lattice nodes. Throws for d > 3.
OracleResult dijkstra_oracle(const EffectivePotential &potential, const Vec &a, const Vec &b, const Vec &lo,
                             const Vec &hi, int per_axis, int order = 2);

/// 2 int_a^b sqrt(V(s)) ds by adaptive Gauss-Kronrod quadrature; d must be 1.
double kh_1d(const EffectivePotential &potential, double a, double b);

struct TruncationInvarianceReport {
    double kh = 0.0;
    double kh_truncated = 0.0;
    double difference = 0.0;
    double threshold = 0.0;
    bool within = false;
    bool valid = true;
};

/// Solves for K_H under W_H and under the truncated average, and compares the two.
/// Throws std::runtime_error when either solve fails to converge.
TruncationInvarianceReport verify_truncation_invariance(const PotentialSpec &spec, const TruncatedPotential &tspec,
                                                        const GeodesicOptions &opts = {}, double threshold = 1e-6);

} // namespace hetphase
