#include "doctest.h"

#include <random>

#include "hetphase/geodesic.hpp"
#include "oracles.hpp"

using namespace hetphase;

namespace {

PotentialSpec quartic(Modulation m, int n = 1) {
    return PotentialSpec(BaseWell::from_name("quartic_scalar", Vec{-1.0}, Vec{1.0}), m, n);
}

PotentialSpec vector_wells() {
    return PotentialSpec(BaseWell::from_name("quartic_vector", Vec{-1.0, 0.0}, Vec{1.0, 0.0}), Modulation::constant(1.0), 2);
}

/// |p - a|^2 |p - b|^2 + beta exp(-|p|^2 / sigma^2).
class Bumped final : public EffectivePotential {
public:
    Bumped(const EffectivePotential &inner, double beta, double sigma) : inner_(inner), beta_(beta), sigma_(sigma) {}
    int dim() const override { return 2; }
    double value(const Vec &p) const override { return inner_.value(p) + beta_ * std::exp(-p.squaredNorm() / (sigma_ * sigma_)); }
    Vec gradient(const Vec &p) const override {
        return inner_.gradient(p) + (-2.0 * beta_ / (sigma_ * sigma_) * std::exp(-p.squaredNorm() / (sigma_ * sigma_))) * p;
    }

private:
    const EffectivePotential &inner_;
    double beta_, sigma_;
};

class FourDim final : public EffectivePotential {
public:
    int dim() const override { return 4; }
    double value(const Vec &) const override { return 1.0; }
    Vec gradient(const Vec &) const override { return Vec(3); }
};

Path straight(const Vec &a, const Vec &b, int n) {
    Path p;
    for (int i = 0; i < n; ++i) p.nodes.push_back(a + (static_cast<double>(i) / (n - 1)) * (b - a));
    return p;
}

} // namespace

TEST_CASE("path cost of collapsed and straight paths") {
    const HomogenizedPotential hp(quartic(Modulation::constant(1.0)), HomogenizedPotential::Mode::ExactMean);
    CHECK(path_cost(straight(Vec{0.3}, Vec{0.3}, 10), hp) == 0.0);
    CHECK(path_cost(straight(Vec{-1.0}, Vec{1.0}, 2001), hp) == doctest::Approx(oracle::kQuarticKH).epsilon(1e-4));
    const Path p = straight(Vec{-1.0}, Vec{1.0}, 300);
    for (double c : {0.25, 1.5, 4.0}) {
        const ScaledPotential sp(hp, c);
        CHECK(path_cost(p, sp) == doctest::Approx(std::sqrt(c) * path_cost(p, hp)).epsilon(1e-14));
    }
}

TEST_CASE("path resampling keeps endpoints and equalises chords") {
    Path p;
    p.nodes = {Vec{0.0, 0.0}, Vec{0.1, 0.0}, Vec{1.0, 0.0}, Vec{1.0, 2.0}};
    const Path r = p.resampled(31);
    CHECK(r.nodes.front() == p.nodes.front());
    CHECK(r.nodes.back() == p.nodes.back());
    CHECK(r.length() == doctest::Approx(3.0).epsilon(1e-14));
    for (std::size_t i = 0; i + 1 < r.size(); ++i) CHECK(distance(r.nodes[i], r.nodes[i + 1]) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("string method in one dimension") {
    const auto spec = quartic(Modulation::sine(0.5));
    const HomogenizedPotential hp(spec, HomogenizedPotential::Mode::ExactMean);
    const auto r = minimize_KH(hp, Vec{-1.0}, Vec{1.0});
    CHECK(r.converged);
    CHECK(r.valid);
    CHECK(r.kh == doctest::Approx(oracle::kQuarticKH).epsilon(1e-3));
}

TEST_CASE("string method never exceeds the straight segment") {
    const auto spec = vector_wells();
    const HomogenizedPotential hp(spec, HomogenizedPotential::Mode::ExactMean);
    const auto r = minimize_KH(hp, spec.a(), spec.b());
    CHECK(r.kh <= path_cost(straight(spec.a(), spec.b(), 128), hp));
    CHECK(r.kh >= 0.0);
    // |p-a||p-b| on the segment equals 1 - t^2 with t = p_1: the straight line is optimal, cost 8/3
    CHECK(r.kh == doctest::Approx(oracle::kQuarticKH).epsilon(1e-3));
}

TEST_CASE("cost history is monotone and chords are equal") {
    const auto spec = PotentialSpec(BaseWell::from_name("quadratic_product", Vec{-1.0, 0.0}, Vec{1.0, 0.5}, 3.0),
                                    Modulation::checkerboard(1.0, 2.0), 2);
    const HomogenizedPotential hp(spec, HomogenizedPotential::Mode::Quadrature, 32);
    const auto r = minimize_KH(hp, spec.a(), spec.b());
    REQUIRE(r.cost_history.size() >= 2);
    for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1] + 1e-12);
    const double chord = r.path.length() / static_cast<double>(r.path.size() - 1);
    for (std::size_t i = 0; i + 1 < r.path.size(); ++i)
        CHECK(std::abs(distance(r.path.nodes[i], r.path.nodes[i + 1]) - chord) <= 1e-8 * chord);
    const double refined = path_cost(r.path.resampled(2 * r.path.size()), hp);
    CHECK(std::abs(refined - r.kh) < 0.005 * r.kh);
}

TEST_CASE("detour around a central bump agrees with the lattice oracle") {
    const auto spec = vector_wells();
    const HomogenizedPotential hp(spec, HomogenizedPotential::Mode::ExactMean);
    const Bumped bumped(hp, 50.0, 0.4);
    const auto r = minimize_KH(bumped, spec.a(), spec.b());
    double transverse = 0.0;
    for (const Vec &g : r.path.nodes) transverse = std::max(transverse, std::abs(g[1]));
    CHECK(transverse > 0.3);
    const auto o = dijkstra_oracle(bumped, spec.a(), spec.b(), Vec{-2.0, -2.0}, Vec{2.0, 2.0}, 201);
    CHECK(std::abs(r.kh - o.cost) <= 0.02 * o.cost);
    CHECK(r.kh <= o.cost * 1.02);
}

TEST_CASE("lattice oracle") {
    const HomogenizedPotential hp(quartic(Modulation::constant(1.0)), HomogenizedPotential::Mode::ExactMean);
    const auto o = dijkstra_oracle(hp, Vec{-1.0}, Vec{1.0}, Vec{-1.5}, Vec{1.5}, 4001);
    CHECK(o.cost == doctest::Approx(oracle::kQuarticKH).epsilon(1e-2));
    CHECK(std::abs(o.path.nodes.front()[0] + 1.0) <= 0.5 * 3.0 / 4000);
    CHECK(std::abs(o.path.nodes.back()[0] - 1.0) <= 0.5 * 3.0 / 4000);
    CHECK(dijkstra_oracle(hp, Vec{0.5}, Vec{0.5}, Vec{-1.5}, Vec{1.5}, 101).cost == 0.0);
    double previous = std::numeric_limits<double>::infinity();
    for (int n : {101, 201, 401}) {
        const double c = dijkstra_oracle(hp, Vec{-1.0}, Vec{1.0}, Vec{-2.0}, Vec{2.0}, n).cost;
        CHECK(c <= previous + 1e-9);
        previous = c;
    }
    const FourDim four;
    CHECK_THROWS_AS(dijkstra_oracle(four, Vec{0.0}, Vec{1.0}, Vec{-1.0}, Vec{2.0}, 11), std::invalid_argument);
    CHECK_THROWS_AS(dijkstra_oracle(hp, Vec{-1.0}, Vec{1.0}, Vec{0.0}, Vec{2.0}, 11), std::invalid_argument);
}

TEST_CASE("oracle is bit-reproducible") {
    const auto spec = vector_wells();
    const HomogenizedPotential hp(spec, HomogenizedPotential::Mode::ExactMean);
    const auto o1 = dijkstra_oracle(hp, spec.a(), spec.b(), Vec{-2.0, -2.0}, Vec{2.0, 2.0}, 61);
    const auto o2 = dijkstra_oracle(hp, spec.a(), spec.b(), Vec{-2.0, -2.0}, Vec{2.0, 2.0}, 61);
    CHECK(o1.cost == o2.cost);
    REQUIRE(o1.path.size() == o2.path.size());
    for (std::size_t i = 0; i < o1.path.size(); ++i) CHECK(o1.path.nodes[i] == o2.path.nodes[i]);
}

TEST_CASE("one-dimensional quadrature") {
    const HomogenizedPotential hp(quartic(Modulation::constant(1.0)), HomogenizedPotential::Mode::ExactMean);
    CHECK(std::abs(kh_1d(hp, -1.0, 1.0) - oracle::kQuarticKH) < 1e-8);
    for (double c : {0.25, 1.5, 4.0})
        CHECK(std::abs(kh_1d(ScaledPotential(hp, c), -1.0, 1.0) - std::sqrt(c) * oracle::kQuarticKH) < 1e-8);
    const HomogenizedPotential sine(quartic(Modulation::sine(0.5)), HomogenizedPotential::Mode::ExactMean);
    CHECK(std::abs(kh_1d(sine, -1.0, 1.0) - oracle::kQuarticKH) < 1e-8);
    const auto cb = quartic(Modulation::checkerboard(1.0, 2.0));
    const HomogenizedPotential hcb(cb, HomogenizedPotential::Mode::Quadrature, 64);
    CHECK(kh_1d(hcb, -1.0, 1.0) ==
          doctest::Approx(oracle::simpson_cost([&](double p) { return 1.5 * oracle::quartic(p); }, -1.0, 1.0)).epsilon(1e-10));
}

TEST_CASE("symmetry and scale equivariance") {
    const auto spec = PotentialSpec(BaseWell::from_name("quadratic_product", Vec{-1.0, 0.2}, Vec{0.8, -0.4}, 2.0),
                                    Modulation::sine(0.4), 2);
    const HomogenizedPotential hp(spec, HomogenizedPotential::Mode::Quadrature, 32);
    const auto ab = minimize_KH(hp, spec.a(), spec.b());
    const auto ba = minimize_KH(hp, spec.b(), spec.a());
    CHECK(ab.kh == ba.kh);
    CHECK(ba.path.nodes.front() == spec.b());
    CHECK(ba.path.nodes.back() == spec.a());
    for (double c : {0.25, 1.5, 4.0}) {
        const ScaledPotential sp(hp, c);
        const auto rc = minimize_KH(sp, spec.a(), spec.b());
        CHECK(std::abs(rc.kh - std::sqrt(c) * ab.kh) <= 1e-10 * ab.kh);
    }
}

TEST_CASE("degenerate wells and validity flag") {
    const HomogenizedPotential hp(quartic(Modulation::constant(1.0)), HomogenizedPotential::Mode::ExactMean);
    const auto r = minimize_KH(hp, Vec{0.2}, Vec{0.2});
    CHECK(r.kh == 0.0);
    GeodesicOptions tight;
    tight.radius = 0.5;
    CHECK_FALSE(minimize_KH(hp, Vec{-1.0}, Vec{1.0}, tight).valid);
    GeodesicOptions few;
    few.nodes = 4;
    CHECK_THROWS_AS(minimize_KH(hp, Vec{-1.0}, Vec{1.0}, few), std::invalid_argument);
}

TEST_CASE("truncation does not change the transition constant") {
    const auto spec = quartic(Modulation::constant(1.0));
    const auto rep = verify_truncation_invariance(spec, truncate(spec, 1.0));
    CHECK(rep.difference < 1e-6);
    CHECK(rep.within);
    const auto deg = PotentialSpec(BaseWell::from_name("quartic_scalar", Vec{0.5}, Vec{0.5}), Modulation::constant(1.0), 1);
    const auto drep = verify_truncation_invariance(deg, truncate(deg, 1.0, TruncationOptions{}));
    CHECK(drep.kh == 0.0);
    CHECK(drep.kh_truncated == 0.0);
    const auto qp = PotentialSpec(BaseWell::from_name("quadratic_product", Vec{-1.0, 0.0}, Vec{1.0, 0.0}, 2.0),
                                  Modulation::checkerboard(1.0, 2.0), 2);
    GeodesicOptions opts;
    const auto qrep = verify_truncation_invariance(qp, truncate(qp, default_truncation_radius(qp)), opts);
    CHECK(qrep.difference <= 2.0 * opts.tol * qrep.kh);
    CHECK(qrep.valid);
}
