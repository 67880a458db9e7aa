#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hetphase/field.hpp"
#include "hetphase/geodesic.hpp"

namespace hetphase {

/// A diffuse-interface problem whose boundary data forces one a|b transition.
///
/// Dirichlet: u = a on the face x_0 = lo_0 and u = b on x_0 = hi_0, free elsewhere.
/// Planar (N = 2): an interface line with unit normal (cos theta, sin theta) through
/// center + offset * normal. Nodes farther than collar * delta from the line are pinned to the
/// wells, and box-boundary nodes are pinned to the homogenized 1D profile.
struct TransitionProblem {
    enum class Geometry { Dirichlet, Planar };

    std::vector<int> counts;
    Vec lo, hi;
    Geometry geometry = Geometry::Dirichlet;
    double theta = 0.0;
    double offset = 0.0;
    double collar = 8.0;
    double eps = 0.0;
    double delta = 0.0;
    std::shared_ptr<const TruncatedPotential> potential;
    /// Overrides the profile initialization when set (must match the grid).
    std::optional<GridField> initial;

    /// Unit box [0,1]^N resolved with h <= eps/4 (non-constant modulation) and h <= delta/8,
    /// using an odd cell count so that x_0 = 1/2 is not a node.
    static TransitionProblem on_unit_box(int space_dim, double eps, double delta,
                                         std::shared_ptr<const TruncatedPotential> potential, int max_cells = 4096);
    GridField make_grid() const;
    /// Signed distance to the prescribed interface (negative on the a side).
    double signed_distance(const Vec &x) const;
};

struct SolverOptions {
    enum class Scheme { Explicit, Preconditioned };
    Scheme scheme = Scheme::Preconditioned;
    double tol = 1e-9;  // relative energy decrease per unit flow time
    int max_iter = 20000;
    double dt = 0.0;    // <= 0 selects the stability-based default
    bool record_history = true;
};

struct MinimizeResult {
    GridField field;
    EnergyReport report;            // energy with the truncated potential
    double untruncated_total = 0.0; // same field with W in place of W~
    bool truncation_active = false; // max |u| > R
    int iterations = 0;
    int rejected_steps = 0;
    bool converged = false;
    double flow_time = 0.0;
    std::vector<double> energy_history; // initial energy followed by one entry per accepted step
};

/// Pins, initial data and scales for an arbitrary cell potential; shared by the public solvers.
struct FlowSetup {
    GridField field;
    std::vector<char> pinned;
    double delta = 0.0;
    double curvature = 1.0; // bound on |d^2 W / dp^2| near the transition path
};

/// Energy-monotone gradient flow of (1/delta) int W + delta int |grad u|^2 with the given pins.
/// Throws std::runtime_error on step-size underflow.
MinimizeResult run_gradient_flow(FlowSetup setup, const CellPotential &potential, const SolverOptions &opts);

/// Near-minimizer of F_{eps,delta} with the truncated potential. Requires h <= eps/4 (unless the
/// modulation is constant) and h <= delta/8.
MinimizeResult minimize_diffuse(const TransitionProblem &problem, const SolverOptions &opts = {});

/// (a+b)/2 + (b-a)/2 tanh(kappa s / delta), the homogenized quartic profile along the segment a-b.
Vec straight_profile(const Vec &a, const Vec &b, double mean_modulation, const BaseWell &base, double s, double delta);

struct ProfileResult {
    GridField profile; // N = 1 on [-length/2, length/2]
    double energy = 0.0;
    bool converged = false;
};

/// Minimizes the 1D homogenized energy with u(-L/2) = a and u(L/2) = b, h = delta / nodes_per_delta.
ProfileResult optimal_profile_1d(const HomogenizedPotential &hp, double delta, double length,
                                 const SolverOptions &opts = {}, int nodes_per_delta = 20);

struct RecoveryOptions {
    double collar = 6.0;  // in units of delta; u equals the wells beyond it
    double rescale = 1.0; // stretches the profile: t = dist / (rescale * delta)
};

/// u(x) = g(sigma(dist(x) / delta)) with g the geodesic and sigma the optimal-profile
/// parametrization solving delta |u'| = sqrt(W_H(u)). Throws when the interface of u_sharp
/// touches the faces x_0 = lo_0 or x_0 = hi_0.
GridField recovery_sequence(const GridField &u_sharp, double delta, const Path &geodesic,
                            const EffectivePotential &hp, const RecoveryOptions &opts = {});

} // namespace hetphase
