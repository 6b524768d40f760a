#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

#include "lmfg/errors.hpp"
#include "lmfg/measure.hpp"
#include "lmfg/spectral.hpp"
#include "support/dense_lp.hpp"

using namespace lmfg;

namespace {

Field random_density(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Field f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
    f *= 1.0 / f.integral();
    return f;
}

std::vector<std::array<double, 2>> nodes(const Grid& g) {
    std::vector<std::array<double, 2>> x(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) x[k] = g.point(k);
    return x;
}

std::vector<double> weights(const Field& f) {
    std::vector<double> w(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) w[k] = f[k] * f.grid().cell_volume();
    return w;
}

}  // namespace

TEST_CASE("measure construction") {
    const Grid g(64, 2.0);
    CHECK_THROWS_AS(Measure(Field(g, 1.0)), Error);
    Field f(g, 1.0 / 4.0);
    f[4] += f[3];
    f[3] = -1e-15;  // clamped
    CHECK_NOTHROW(Measure{f});
    f[3] = -1e-6;
    f[4] += 1e-6;
    CHECK_THROWS_AS(Measure{f}, Error);
    const Measure d = grid_delta(g, {0.3, 0.0});
    CHECK(d.mass() == doctest::Approx(1.0));
    CHECK(d.density()[g.index(37)] > 0.0);  // 0.3 / 0.0625 = 4.8 -> node 32 + 5
}

TEST_CASE("d0 trivial values") {
    const Grid g(128, 4.0);
    const Measure m = gaussian_measure(g, {0.2, 0.0}, 0.5);
    CHECK(d0_distance(m.density(), m.density()) == 0.0);
    for (double b : {0.5, 1.25, 1.875, 3.0}) {
        const Measure da = grid_delta(g, {-0.5, 0.0});
        const Measure db = grid_delta(g, {b, 0.0});
        CHECK(d0_distance(da.density(), db.density()) == doctest::Approx(std::min(b + 0.5, 2.0)).epsilon(1e-12));
    }
    const Grid g2({16, 16}, {2.0, 2.0});
    const Measure a = grid_delta(g2, {0.0, 0.0});
    const Measure b = grid_delta(g2, {0.75, 1.0});
    CHECK(d0_distance(a.density(), b.density()) == doctest::Approx(1.25).epsilon(1e-12));
    const Measure c = grid_delta(g2, {-1.75, -1.75});
    CHECK(d0_distance(b.density(), c.density()) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(d0_distance(a.density(), 2.0 * b.density()), Error);
}

TEST_CASE("1D chain value equals the dense LP") {
    std::mt19937_64 rng(7);
    const Grid g(32, 1.0);
    for (int r = 0; r < 5; ++r) {
        const Field m = random_density(g, rng);
        const Field mp = random_density(g, rng);
        const Field diff = mp - m;
        const double chain = d0_distance(m, mp);
        const double lp = oracle::bl_norm_lp(nodes(g), weights(diff));
        CHECK(std::abs(chain - lp) <= 1e-9);
    }
    // Wide box where the |phi| <= 1 bound is active.
    const Grid wide(32, 8.0);
    const Field m = random_density(wide, rng);
    const Field mp = random_density(wide, rng);
    CHECK(std::abs(d0_distance(m, mp) - oracle::bl_norm_lp(nodes(wide), weights(mp - m))) <= 1e-9);
    // Signed with nonzero mass.
    Field s = mp - 0.5 * m;
    CHECK(std::abs(d0_norm(s) - oracle::bl_norm_lp(nodes(wide), weights(s))) <= 1e-9);
}

TEST_CASE("2D transport value equals the dense LP") {
    std::mt19937_64 rng(11);
    for (const Grid& g : {Grid({8, 8}, {1.0, 1.0}), Grid({8, 8}, {3.0, 3.0})}) {
        const Field m = random_density(g, rng);
        const Field mp = random_density(g, rng);
        const double lp = oracle::bl_norm_lp(nodes(g), weights(mp - m));
        CHECK(std::abs(d0_distance(m, mp) - lp) <= 1e-9);
        const Field s = mp - 0.3 * m;
        CHECK(std::abs(d0_norm(s) - oracle::bl_norm_lp(nodes(g), weights(s))) <= 1e-9);
    }
}

TEST_CASE("2D coarse bracketing contains the exact value") {
    std::mt19937_64 rng(3);
    const Grid g({32, 32}, {2.0, 2.0});
    const Measure m = mollify(Measure::normalized(random_density(g, rng)), 0.4);
    const Measure mp = gaussian_measure(g, {0.5, -0.2}, 0.4);
    const Field diff = mp.density() - m.density();
    const D0Result exact = d0_norm_bounds(diff);
    CHECK(exact.exact);
    const D0Result coarse = d0_norm_bounds(diff, D0Options{64});
    CHECK_FALSE(coarse.exact);
    CHECK(coarse.coarsening == 4);
    CHECK(coarse.lower <= exact.value + 1e-12);
    CHECK(coarse.upper >= exact.value - 1e-12);
}

TEST_CASE("d0 metric properties") {
    std::mt19937_64 rng(5);
    for (const Grid& g : {Grid(128, 3.0), Grid({16, 16}, {2.0, 2.0})}) {
        for (int r = 0; r < 4; ++r) {
            const Field a = random_density(g, rng);
            const Field b = random_density(g, rng);
            const Field c = random_density(g, rng);
            const double ab = d0_distance(a, b), bc = d0_distance(b, c), ac = d0_distance(a, c);
            CHECK(ac <= ab + bc + 1e-9);
            CHECK(ab <= total_variation(a - b) + 1e-12);
            CHECK(std::abs(ab - d0_distance(b, a)) <= 1e-12);
        }
    }
}

TEST_CASE("mollification") {
    const Grid g(256, 4.0);
    const double eps = 0.25;
    const Measure d = mollified_delta(g, {0.0, 0.0}, eps);
    CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 0; k < g.size(); ++k)
        if (d.density()[k] > 1e-12) CHECK(std::abs(g.point(k)[0]) <= eps + g.dx(0));

    std::mt19937_64 rng(1);
    const double dx = g.dx(0);
    const Measure m = Measure::normalized(random_density(g, rng));
    const Measure mm = mollify(m, 0.1);
    CHECK(d0_distance(mm.density(), m.density()) <= 0.1 + dx);

    const Field k = bump_kernel(g, eps);
    const Field kk = periodic_convolve(k, k);
    const Field twice = mollify_field(mollify_field(m.density(), eps), eps);
    CHECK(max_abs_diff(twice, periodic_convolve(m.density(), kk)) <= 1e-12);

    try {
        (void)mollify(m, dx);
        FAIL("expected a resolution error");
    } catch (const ResolutionError& e) {
        CHECK(e.required_n() >= 512);
    }
}

TEST_CASE("tightness function") {
    const Grid g({64, 64}, {8.0, 8.0});
    const TightnessFn t = make_tightness(g);
    CHECK(t.psi.min() >= 0.0);
    CHECK(t.psi[g.index(32, 32)] == 0.0);
    CHECK(t.grad_bound <= 0.5);
    CHECK(t.hess_bound == doctest::Approx(0.5));
    // radial monotonicity along an axis
    for (int j = 33; j < 64; ++j) CHECK(t.psi[g.index(j, 32)] >= t.psi[g.index(j - 1, 32)]);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    double worst = -1e9;
    for (int r = 0; r < 20000; ++r) {
        const double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
        const double gap = tightness_profile(std::hypot(x0 + y0, x1 + y1)) -
                           tightness_profile(std::hypot(x0, x1)) - tightness_profile(std::hypot(y0, y1));
        worst = std::max(worst, gap);
    }
    CHECK(worst <= kSubadditivitySlack);
}

TEST_CASE("generalized moment") {
    const Grid g(128, 4.0);
    const TightnessFn t = make_tightness(g);
    CHECK(generalized_moment(grid_delta(g, {0.0, 0.0}), t) == 0.0);

    // Uniform density on [-1, 1] with trapezoid end weights; the rule error is
    // dx^2/12 * psi'(1) ~ 2e-11 at this resolution.
    const Grid fine(1 << 17, 2.0);
    Field u = Field::sample(fine, [](const Vec2& x) { return std::abs(x[0]) <= 1.0 ? 0.5 : 0.0; });
    u[fine.index((1 << 16) - (1 << 15))] = 0.25;
    u[fine.index((1 << 16) + (1 << 15))] = 0.25;
    const double quad = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double x) { return 0.5 * tightness_profile(std::abs(x)); }, -1.0, 1.0, 15, 1e-15);
    CHECK(std::abs(generalized_moment(Measure(u), make_tightness(fine)) - quad) <= 1e-10);

    const Measure m = gaussian_measure(g, {0.5, 0.0}, 0.3);
    for (double a : {-2.0, 0.75, 3.0}) {
        const double lhs = generalized_moment(shift(m, {a, 0.0}), t);
        CHECK(lhs <= generalized_moment(m, t) + tightness_profile(std::abs(a)) + kSubadditivitySlack);
    }
}
