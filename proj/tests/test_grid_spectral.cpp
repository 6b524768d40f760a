#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "lmfg/errors.hpp"
#include "lmfg/field_io.hpp"
#include "lmfg/spectral.hpp"

using namespace lmfg;
using std::numbers::pi;

namespace {

Field gaussian(const Grid& g, double sigma, double center = 0.0) {
    return Field::sample(g, [&](const Vec2& x) {
        const double r = x[0] - center;
        return std::exp(-r * r / (2 * sigma * sigma)) / std::sqrt(2 * pi * sigma * sigma);
    });
}

Field random_field(const Grid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
    return f;
}

}  // namespace

TEST_CASE("grid construction") {
    CHECK_THROWS_AS(Grid(12, 1.0), Error);
    CHECK_THROWS_AS(Grid(4, 1.0), Error);
    CHECK_THROWS_AS(Grid(16, -1.0), Error);
    const Grid g(64, 3.7);
    CHECK(g.dx(0) * g.n(0) == 2 * 3.7);
    CHECK(g.coord(0, 0) == -3.7);
    CHECK(g.coord(0, 32) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(g.reflected(g.index(32)) == g.index(32));
    CHECK(g.reflected(g.index(10)) == g.index(54));
    CHECK(g.reflected(g.index(0)) == g.index(0));
    const Grid g2({16, 8}, {2.0, 1.0});
    CHECK(g2.size() == 128);
    CHECK(g2.point(g2.index(3, 5))[1] == doctest::Approx(-1.0 + 5 * 0.25));
}

TEST_CASE("field rejects non-finite values") {
    const Grid g(8, 1.0);
    std::vector<double> v(8, 0.0);
    v[3] = std::nan("");
    CHECK_THROWS_AS(Field(g, v), Error);
}

TEST_CASE("dft roundtrip") {
    const Grid g(64, 2.0);
    const Field one(g, 1.0);
    CHECK(max_abs_diff(dft_roundtrip(one), one) <= 1e-12);
    const Field c = Field::sample(g, [](const Vec2& x) { return std::cos(pi * x[0] / 2.0); });
    CHECK(max_abs_diff(dft_roundtrip(c), c) <= 1e-12);
    const Field r = random_field(g, 42);
    CHECK(max_abs_diff(dft_roundtrip(r), r) <= 1e-12 * std::max(1.0, r.max_abs()));

    const Grid g2({32, 16}, {1.0, 2.0});
    const Field r2 = random_field(g2, 5);
    CHECK(max_abs_diff(dft_roundtrip(r2), r2) <= 1e-12);
}

TEST_CASE("spectral derivative") {
    const double L = 3.0;
    const Grid g(128, L);
    const Field s = Field::sample(g, [&](const Vec2& x) { return std::sin(pi * x[0] / L); });
    const Field ds = spectral_derivative(s, {1, 0});
    const Field expect =
        Field::sample(g, [&](const Vec2& x) { return (pi / L) * std::cos(pi * x[0] / L); });
    CHECK(max_abs_diff(ds, expect) <= 1e-10);

    const Field one(g, 2.5);
    for (int b = 1; b <= 4; ++b) CHECK(spectral_derivative(one, {b, 0}).max_abs() <= 1e-12);
    CHECK_THROWS_AS(spectral_derivative(one, {5, 0}), Error);

    // Second derivative against centered differences: error O(dx^2), ratio ~4 on refinement.
    double err[2];
    for (int r = 0; r < 2; ++r) {
        const Grid h(r == 0 ? 128 : 256, 8.0);
        const Field f = Field::sample(h, [](const Vec2& x) { return std::exp(-x[0] * x[0]); });
        const Field d2 = spectral_derivative(f, {2, 0});
        const int n = h.n(0);
        const double dx = h.dx(0);
        double e = 0.0;
        for (int j = 0; j < n; ++j) {
            const double fd = (f[(j + 1) % n] - 2 * f[j] + f[(j + n - 1) % n]) / (dx * dx);
            e = std::max(e, std::abs(fd - d2[j]));
        }
        // Leading truncation term dx^2/12 * max|f''''| = dx^2.
        CHECK(e <= 1.1 * dx * dx);
        err[r] = e;
    }
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("gradient and divergence in 2D") {
    const Grid g({32, 64}, {pi, 2 * pi});
    const Field f = Field::sample(g, [](const Vec2& x) { return std::sin(x[0]) * std::cos(0.5 * x[1]); });
    const auto grad = gradient(f);
    const Field gx = Field::sample(g, [](const Vec2& x) { return std::cos(x[0]) * std::cos(0.5 * x[1]); });
    const Field gy =
        Field::sample(g, [](const Vec2& x) { return -0.5 * std::sin(x[0]) * std::sin(0.5 * x[1]); });
    CHECK(max_abs_diff(grad[0], gx) <= 1e-10);
    CHECK(max_abs_diff(grad[1], gy) <= 1e-10);
    const Field lap = divergence(grad);
    CHECK(max_abs_diff(lap, -1.25 * f) <= 1e-10);
}

TEST_CASE("gradient and divergence are exact negative adjoints") {
    const Grid g(64, 2.0);
    const Field a = random_field(g, 1);
    const Field b = random_field(g, 2);
    const double lhs = inner(gradient(a)[0], b);
    const double rhs = -inner(a, divergence({b}));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs) + 1e-12);
}

TEST_CASE("periodic convolution") {
    const Grid g(256, 10.0);
    const Field f = gaussian(g, 0.5, 1.0);
    Field delta(g);
    delta[g.index(128)] = 1.0 / g.dx(0);
    CHECK(max_abs_diff(periodic_convolve(f, delta), f) <= 1e-12);

    const Field a = gaussian(g, 0.5);
    const Field b = gaussian(g, 0.7);
    const Field c = gaussian(g, std::sqrt(0.25 + 0.49));
    CHECK(max_abs_diff(periodic_convolve(a, b), c) <= 1e-8);

    const Field r1 = random_field(g, 3);
    const Field r2 = random_field(g, 4);
    const Field ab = periodic_convolve(r1, r2);
    const Field ba = periodic_convolve(r2, r1);
    for (std::size_t i = 0; i < ab.size(); ++i) CHECK(ab[i] == ba[i]);
}

TEST_CASE("Parseval") {
    for (const Grid& g : {Grid(64, 1.5), Grid({16, 32}, {1.0, 2.0})}) {
        const Field r = random_field(g, 11);
        const double e1 = inner(r, r);
        const double e2 = spectral_energy(r);
        CHECK(std::abs(e1 - e2) <= 1e-12 * e1);
    }
}

TEST_CASE("derivative commutes with convolution") {
    const Grid g(128, 6.0);
    const Field f = gaussian(g, 0.6, 0.5);
    const Field h = Field::sample(g, [](const Vec2& x) { return std::exp(-x[0] * x[0]) * std::cos(x[0]); });
    const Field lhs = spectral_derivative(periodic_convolve(f, h), {1, 0});
    const Field rhs = periodic_convolve(spectral_derivative(f, {1, 0}), h);
    CHECK(max_abs_diff(lhs, rhs) <= 1e-10);
}

TEST_CASE("binary field format") {
    const Grid g({8, 16}, {1.0, 2.5});
    const Field r = random_field(g, 9);
    std::stringstream ss;
    write_field(ss, r);
    const std::string bytes = ss.str();
    CHECK(bytes.substr(0, 4) == "LMFG");
    CHECK(bytes.size() == 4 + 4 + 1 + 2 * 4 + 2 * 8 + g.size() * 8);
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(static_cast<unsigned char>(bytes[8]) == 2);
    const Field back = read_field(ss);
    CHECK(back.grid() == g);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(back[i] == r[i]);

    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(read_field(bad), Error);
}

TEST_CASE("boundary mass monitor") {
    const Grid g(128, 10.0);
    CHECK(boundary_mass(gaussian(g, 0.5)) < 1e-6);
    CHECK(boundary_mass(gaussian(g, 0.5, 9.5)) > 0.1);
}

TEST_CASE("band-limited translation") {
    const Grid g(128, 8.0);
    const Field f = gaussian(g, 0.6, 0.3);
    CHECK(max_abs_diff(translate(f, {0.037, 0.0}), gaussian(g, 0.6, 0.337)) <= 1e-12);
    CHECK(max_abs_diff(translate(f, {2 * g.dx(0), 0.0}), gaussian(g, 0.6, 0.3 + 2 * g.dx(0))) <= 1e-12);
    CHECK(std::abs(translate(f, {-0.41, 0.0}).integral() - f.integral()) <= 1e-14);
}
