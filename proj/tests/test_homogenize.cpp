#include "doctest.h"

#include <random>

#include "hetphase/homogenize.hpp"
#include "oracles.hpp"

using namespace hetphase;

namespace {

PotentialSpec quartic(Modulation m, int n = 2) {
    return PotentialSpec(BaseWell::from_name("quartic_scalar", Vec{-1.0}, Vec{1.0}), m, n);
}

std::vector<Vec> random_points(int count, int dim, double r, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-r, r);
    std::vector<Vec> out;
    for (int k = 0; k < count; ++k) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v[i] = u(rng);
        out.push_back(v);
    }
    return out;
}

} // namespace

TEST_CASE("mean-one sine modulation averages to the base well") {
    const auto spec = quartic(Modulation::sine(0.5));
    const HomogenizedPotential exact(spec, HomogenizedPotential::Mode::ExactMean);
    const HomogenizedPotential quad(spec, HomogenizedPotential::Mode::Quadrature, 64);
    for (const Vec &p : random_points(20, 1, 2.5, 1)) {
        CHECK(exact.value(p) == doctest::Approx(oracle::quartic(p[0])).epsilon(1e-14));
        CHECK(quad.value(p) == doctest::Approx(oracle::quartic(p[0])).epsilon(1e-12));
    }
}

TEST_CASE("checkerboard averages to 1.5 times the base well") {
    const auto spec = quartic(Modulation::checkerboard(1.0, 2.0));
    const HomogenizedPotential quad(spec, HomogenizedPotential::Mode::Quadrature, 64);
    for (const Vec &p : random_points(20, 1, 2.5, 2))
        CHECK(quad.value(p) == doctest::Approx(1.5 * oracle::quartic(p[0])).epsilon(1e-14));
    CHECK(quad.value(Vec{-1.0}) == 0.0);
    CHECK(quad.value(Vec{1.0}) == 0.0);
}

TEST_CASE("cell average agrees with brute-force sampling in three dimensions") {
    const auto spec = PotentialSpec(BaseWell::from_name("quartic_vector", Vec{-1.0, 0.0}, Vec{1.0, 0.0}),
                                    Modulation::checkerboard(1.0, 4.0), 3);
    const HomogenizedPotential quad(spec, HomogenizedPotential::Mode::Quadrature, 16);
    const double mean = oracle::cell_mean([&](const Vec &y) { return spec.modulation()(y); }, 3, 40);
    for (const Vec &p : random_points(10, 2, 2.0, 3))
        CHECK(quad.value(p) == doctest::Approx(mean * spec.base().value(p)).epsilon(1e-13));
}

TEST_CASE("quadrature refinement either gains second order or sits at roundoff") {
    // The midpoint rule integrates the trigonometric modulation exactly, so the error is
    // already at roundoff; the check keeps the contract without a fake rate.
    const auto spec = quartic(Modulation::sine(0.9));
    const HomogenizedPotential exact(spec, HomogenizedPotential::Mode::ExactMean);
    for (const Vec &p : random_points(20, 1, 2.0, 4)) {
        const double ref = exact.value(p);
        for (int r : {4, 8, 16, 32}) {
            const double e1 = std::abs(HomogenizedPotential(spec, HomogenizedPotential::Mode::Quadrature, r).value(p) - ref);
            const double e2 =
                std::abs(HomogenizedPotential(spec, HomogenizedPotential::Mode::Quadrature, 2 * r).value(p) - ref);
            const double floor = 1e-13 * std::max(1.0, ref);
            CHECK((e2 <= floor || e1 >= 3.5 * e2));
        }
    }
}

TEST_CASE("truncated cell average") {
    const auto spec = quartic(Modulation::checkerboard(1.0, 2.0));
    const double R = default_truncation_radius(spec);
    const auto t = truncate(spec, R);
    const HomogenizedPotential plain(spec, HomogenizedPotential::Mode::Quadrature, 64);
    const HomogenizedPotential capped(t, 64);
    CHECK(capped.truncated());
    CHECK_FALSE(plain.truncated());
    for (const Vec &p : random_points(200, 1, 3.0 * R, 5)) {
        const double wt = homogenized_truncated_eval(capped, p);
        CHECK(wt <= homogenized_eval(plain, p));
        CHECK(wt <= t.cap());
        if (std::abs(p[0]) <= R) CHECK(wt == doctest::Approx(plain.value(p)).epsilon(1e-14));
    }
    CHECK(homogenized_truncated_eval(capped, Vec{30.0 * R}) <= t.cap());
    CHECK_THROWS_AS(homogenized_truncated_eval(plain, Vec{0.0}), std::invalid_argument);

    TruncationOptions opts;
    opts.safety_factor = 1.0;
    const auto unit = truncate(quartic(Modulation::constant(1.0), 1), 1.0, opts);
    CHECK(HomogenizedPotential(unit).value(Vec{0.0}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("homogenization is linear in the potential") {
    const double c = 2.5;
    const auto spec = quartic(Modulation::checkerboard(1.0, 3.0));
    const auto scaled = quartic(Modulation::checkerboard(c * 1.0, c * 3.0));
    const HomogenizedPotential h1(spec, HomogenizedPotential::Mode::Quadrature, 32);
    const HomogenizedPotential hc(scaled, HomogenizedPotential::Mode::Quadrature, 32);
    for (const Vec &p : random_points(20, 1, 2.0, 6)) CHECK(hc.value(p) == doctest::Approx(c * h1.value(p)).epsilon(1e-13));
    const ScaledPotential sp(h1, c);
    for (const Vec &p : random_points(20, 1, 2.0, 7)) CHECK(sp.value(p) == c * h1.value(p));
}

TEST_CASE("tabulated evaluation") {
    const auto spec = quartic(Modulation::sine(0.5), 1);
    const HomogenizedPotential hp(spec, HomogenizedPotential::Mode::ExactMean);
    const auto tab = tabulate(hp, Vec{-2.0}, Vec{2.0}, 401);
    REQUIRE(tab.table().has_value());
    double worst = 0.0;
    for (int i = 0; i < 400; ++i) {
        const double p = -2.0 + (i + 0.5) * 0.01;
        worst = std::max(worst, std::abs(tab.value(Vec{p}) - oracle::quartic(p)));
    }
    CHECK(worst < 1e-3);
    CHECK(tab.table()->max_interp_error == doctest::Approx(worst).epsilon(1e-9));
    for (int i = 0; i <= 400; i += 37) {
        const double p = -2.0 + 4.0 * i / 400;
        CHECK(tab.value(Vec{p}) == hp.direct_value(Vec{p}));
        CHECK(tab.value(Vec{-2.0 + i * 0.01}) == doctest::Approx(hp.direct_value(Vec{p})).epsilon(1e-14));
    }
    CHECK(std::abs(tab.value(Vec{-1.0})) <= worst);
    CHECK(std::abs(tab.value(Vec{1.0})) <= worst);
    // outside the box the evaluator falls back to direct evaluation
    CHECK(tab.value(Vec{3.0}) == hp.direct_value(Vec{3.0}));
    CHECK_THROWS_AS(tabulate(hp, Vec{0.0}, Vec{2.0}, 11), std::invalid_argument);
    CHECK_THROWS_AS(tabulate(hp, Vec{-1.05}, Vec{1.05}, 11), std::invalid_argument);
}

TEST_CASE("tabulated gradient is consistent with the interpolant") {
    const auto spec = PotentialSpec(BaseWell::from_name("quartic_vector", Vec{-1.0, 0.0}, Vec{1.0, 0.0}),
                                    Modulation::checkerboard(1.0, 2.0), 2);
    const HomogenizedPotential hp(spec, HomogenizedPotential::Mode::Quadrature, 16);
    const auto tab = tabulate(hp, Vec{-2.0, -2.0}, Vec{2.0, 2.0}, 161);
    for (const Vec &p : random_points(20, 2, 1.8, 8)) {
        CHECK(tab.value(p) >= 0.0);
        CHECK(std::abs(tab.value(p) - hp.direct_value(p)) <= tab.table()->max_interp_error * 1.5 + 1e-12);
    }
}
