#include "doctest.h"

#include <random>

#include "hetphase/potential.hpp"
#include "oracles.hpp"

using namespace hetphase;

namespace {

PotentialSpec quartic(Modulation m, int n = 2) {
    return PotentialSpec(BaseWell::from_name("quartic_scalar", Vec{-1.0}, Vec{1.0}), m, n);
}

std::vector<PotentialSpec> family() {
    std::vector<PotentialSpec> out;
    out.push_back(quartic(Modulation::constant(1.0)));
    out.push_back(quartic(Modulation::sine(0.5)));
    out.push_back(quartic(Modulation::checkerboard(1.0, 2.0)));
    out.emplace_back(BaseWell::from_name("quartic_vector", Vec{-1.0, 0.0}, Vec{1.0, 0.0}), Modulation::sine(0.3), 2);
    out.emplace_back(BaseWell::from_name("quadratic_product", Vec{-1.0, 0.5}, Vec{1.0, -0.5}, 2.0),
                     Modulation::checkerboard(1.0, 3.0), 3);
    return out;
}

Vec random_vec(std::mt19937_64 &rng, int dim, double r) {
    std::uniform_real_distribution<double> u(-r, r);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = u(rng);
    return v;
}

} // namespace

TEST_CASE("quartic vanishes at the wells and is a product with the modulation") {
    const auto spec = quartic(Modulation::sine(0.5));
    for (double x : {0.0, 0.13, 0.25, 0.77}) {
        CHECK(eval_W(spec, Vec{x, 0.3}, Vec{1.0}) == 0.0);
        CHECK(eval_W(spec, Vec{x, 0.3}, Vec{-1.0}) == 0.0);
    }
    CHECK(eval_W(spec, Vec{0.25, 0.0}, Vec{0.0}) == doctest::Approx(1.5).epsilon(1e-15));
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
        const Vec x = random_vec(rng, 2, 3.0);
        const double p = random_vec(rng, 1, 2.0)[0];
        const double m = 1.0 + 0.5 * std::sin(2.0 * std::acos(-1.0) * x[0]);
        CHECK(eval_W(spec, x, Vec{p}) == doctest::Approx(m * oracle::quartic(p)).epsilon(1e-12));
    }
}

TEST_CASE("gradient at critical points") {
    const auto spec = quartic(Modulation::checkerboard(1.0, 2.0));
    CHECK(eval_gradW_p(spec, Vec{0.1, 0.2}, Vec{1.0})[0] == 0.0);
    CHECK(eval_gradW_p(spec, Vec{0.1, 0.2}, Vec{0.0})[0] == 0.0);
}

TEST_CASE("gradient matches central differences") {
    std::mt19937_64 rng(11);
    for (const auto &spec : family()) {
        const int d = spec.state_dim();
        const double R = default_truncation_radius(spec);
        for (int k = 0; k < 100; ++k) {
            const Vec x = random_vec(rng, spec.space_dim(), 1.0);
            Vec p = random_vec(rng, d, 2.0 * R);
            while (p.norm() > 2.0 * R) p = random_vec(rng, d, 2.0 * R);
            const Vec g = eval_gradW_p(spec, x, p);
            const double h = 1e-5;
            Vec fd(d);
            for (int i = 0; i < d; ++i) {
                Vec pp = p, pm = p;
                pp[i] += h;
                pm[i] -= h;
                fd[i] = (eval_W(spec, x, pp) - eval_W(spec, x, pm)) / (2.0 * h);
            }
            CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
        }
    }
}

TEST_CASE("periodicity holds exactly on dyadic points") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> axis(0, 2);
    for (const auto &spec : family()) {
        for (int k = 0; k < 1000; ++k) {
            Vec x(spec.space_dim());
            for (int i = 0; i < x.dim(); ++i) x[i] = oracle::dyadic(rng, -2.0, 2.0);
            const Vec p = random_vec(rng, spec.state_dim(), 3.0);
            const int i = axis(rng) % spec.space_dim();
            Vec shifted = x;
            shifted[i] += 1.0;
            REQUIRE(eval_W(spec, shifted, p) == eval_W(spec, x, p));
        }
    }
}

TEST_CASE("well annihilation and nonnegativity") {
    std::mt19937_64 rng(9);
    for (const auto &spec : family()) {
        for (int k = 0; k < 200; ++k) {
            const Vec x = random_vec(rng, spec.space_dim(), 2.0);
            CHECK(eval_W(spec, x, spec.a()) == 0.0);
            CHECK(eval_W(spec, x, spec.b()) == 0.0);
            CHECK(eval_W(spec, x, random_vec(rng, spec.state_dim(), 4.0)) >= 0.0);
        }
    }
}

TEST_CASE("modulation statistics and extrema") {
    const auto cb = Modulation::checkerboard(1.0, 2.0);
    CHECK(cb.mean() == 1.5);
    CHECK(cb.min() == 1.0);
    CHECK(cb.max() == 2.0);
    CHECK(cb(Vec{0.25, 0.25}) == 1.0);
    CHECK(cb(Vec{0.75, 0.25}) == 2.0);
    CHECK(oracle::cell_mean([&](const Vec &y) { return cb(y); }, 2, 64) == doctest::Approx(1.5).epsilon(1e-14));
    const auto s = Modulation::sine(0.5);
    CHECK(s.min() == 0.5);
    CHECK(s.max() == 1.5);
    CHECK(Modulation::checkerboard(2.0, 2.0).is_constant());
}

TEST_CASE("cell averages of the modulation are exact") {
    const auto cb = Modulation::checkerboard(1.0, 3.0);
    const auto s = Modulation::sine(0.7);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.01, 0.6);
    for (int k = 0; k < 30; ++k) {
        const Vec lo{u(rng), u(rng)};
        const Vec hi = lo + Vec{w(rng), w(rng)};
        // brute force with 800^2 samples on the box
        const int n = 800;
        double acb = 0.0, as = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Vec y{lo[0] + (i + 0.5) / n * (hi[0] - lo[0]), lo[1] + (j + 0.5) / n * (hi[1] - lo[1])};
                acb += cb(y);
                as += s(y);
            }
        CHECK(cb.cell_average(lo, hi) == doctest::Approx(acb / (n * n)).epsilon(5e-3));
        CHECK(s.cell_average(lo, hi) == doctest::Approx(as / (n * n)).epsilon(1e-5));
    }
    CHECK(cb.cell_average(Vec{0.0, 0.0}, Vec{1.0, 1.0}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(cb.cell_average(Vec{0.1, 0.6}, Vec{0.3, 0.9}) == 3.0);
}

TEST_CASE("base well registry") {
    CHECK(BaseWell::from_name("quartic_vector", Vec{0.0, 0.0}, Vec{1.0, 1.0}).kind() == BaseWell::Kind::QuarticVector);
    CHECK_THROWS_AS(BaseWell::from_name("sextic", Vec{0.0}, Vec{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(BaseWell::from_name("quartic_scalar", Vec{0.0, 0.0}, Vec{1.0, 1.0}), std::invalid_argument);
    const auto qp = BaseWell::from_name("quadratic_product", Vec{0.0, 0.0}, Vec{1.0, 0.0}, 3.0);
    // q_a(p) q_b(p) with A = diag(1, 3)
    const Vec p{0.3, 0.4};
    const double qa = 0.3 * 0.3 + 3.0 * 0.16, qb = 0.7 * 0.7 + 3.0 * 0.16;
    CHECK(qp.value(p) == doctest::Approx(qa * qb).epsilon(1e-14));
}

TEST_CASE("hypothesis validation") {
    for (const auto &spec : family()) {
        const auto rep = validate_hypotheses(spec);
        INFO(spec.base().name() << " / " << spec.modulation().name());
        CHECK(rep.all_passed());
    }
    const auto degenerate = quartic(Modulation::checkerboard(0.0, 1.0));
    const auto rep = validate_hypotheses(degenerate);
    CHECK_FALSE(rep.all_passed());
    const bool witnessed = (!rep.check("wells").passed && !rep.check("wells").witness.empty()) ||
                           (!rep.check("lower_bound").passed && !rep.check("lower_bound").witness.empty());
    CHECK(witnessed);
    CHECK(validate_hypotheses(quartic(Modulation::constant(1.0))).check("periodicity").passed);
}

TEST_CASE("truncation cap for the unit quartic") {
    const auto spec = quartic(Modulation::constant(1.0), 1);
    TruncationOptions opts;
    opts.safety_factor = 1.0;
    const auto t = truncate(spec, 1.0, opts);
    CHECK(t.cap() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(truncate(spec, 1.0).cap() == doctest::Approx(1.05).epsilon(1e-15));
    CHECK_THROWS_AS(truncate(spec, 0.5), std::invalid_argument);
}

TEST_CASE("truncation ordering and cap") {
    std::mt19937_64 rng(13);
    for (const auto &spec : family()) {
        const double R = default_truncation_radius(spec);
        const auto t = truncate(spec, R);
        for (int k = 0; k < 300; ++k) {
            const Vec x = random_vec(rng, spec.space_dim(), 1.0);
            const Vec p = random_vec(rng, spec.state_dim(), 3.0 * R);
            const double w = eval_W(spec, x, p), wt = t.value(x, p);
            CHECK(wt >= 0.0);
            CHECK(wt <= std::min(w, t.cap()));
            if (p.norm() <= R) CHECK(wt == w);
        }
        Vec far(spec.state_dim(), 0.0);
        far[0] = 10.0 * R;
        CHECK(t.value(Vec(spec.space_dim(), 0.3), far) <= t.cap());
        CHECK(eval_W(spec, Vec(spec.space_dim(), 0.3), far) > t.cap());
    }
}

TEST_CASE("truncated potential is Lipschitz with the reported constant") {
    std::mt19937_64 rng(17);
    for (const auto &spec : family()) {
        const auto t = truncate(spec, default_truncation_radius(spec));
        const double L = t.lipschitz();
        const double span = 2.0 * t.sublevel_radius();
        for (int k = 0; k < 500; ++k) {
            const Vec x = random_vec(rng, spec.space_dim(), 1.0);
            const Vec p = random_vec(rng, spec.state_dim(), span), q = p + random_vec(rng, spec.state_dim(), 0.5);
            CHECK(std::abs(t.value(x, p) - t.value(x, q)) <= L * distance(p, q) * (1.0 + 1e-12));
        }
    }
}
