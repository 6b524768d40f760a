#include <doctest.h>

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

#include "lmfg/coupling.hpp"
#include "lmfg/errors.hpp"
#include "lmfg/spectral.hpp"

using namespace lmfg;

namespace {

double gauss(double x, double s) { return std::exp(-x * x / (2 * s * s)); }

}  // namespace

TEST_CASE("zero coupling") {
    const Grid g(64, 4.0);
    const Coupling z = zero_coupling();
    const Measure m = gaussian_measure(g, {0.3, 0.0}, 0.5);
    CHECK(eval_F(z, m).max_abs() == 0.0);
    CHECK(eval_dmF(z, m.density()).cwiseAbs().maxCoeff() == 0.0);
    const auto m1 = check_M1(z, g, 3, 1);
    CHECK(m1.pass);
    CHECK(m1.max_abs == 0.0);
    const auto m2 = check_M2(z, m.density());
    CHECK(m2.pass);
    CHECK(m2.min_eig == 0.0);
}

TEST_CASE("conv coupling against a near-delta") {
    const Grid g(512, 6.0);
    const double s = 0.5;
    const Coupling c = conv_coupling(parse_kernel("gauss(0.5)", g));
    const double eps = 2 * g.dx(0);
    const Measure d = mollified_delta(g, {1.0, 0.0}, eps);
    const Field F = eval_F(c, d);
    // |phi * eta - phi| <= Lip(phi) (eps + dx) with Lip = e^{-1/2} / s.
    const double slack = std::exp(-0.5) / s * (eps + g.dx(0));
    const Field expect = Field::sample(g, [&](const Vec2& x) { return gauss(x[0] - 1.0, s); });
    CHECK(max_abs_diff(F, expect) <= slack);
    // sup |F| <= sup |phi| for probability m
    CHECK(F.max_abs() <= 1.0 + 1e-12);
}

TEST_CASE("local composite with identity map is a double convolution") {
    const Grid g(128, 4.0);
    const Field phi2 = parse_kernel("gauss(0.4)", g);
    const Coupling c = local_coupling(power_map(1.0), phi2);
    const Measure m = random_bump_mixture(g, 3, 9);
    // direct double sum oracle
    const int n = 128;
    const double dx = g.dx(0);
    auto ker = [&](int a) { return gauss(a * dx, 0.4); };
    auto wrap = [&](int a) { return ((a + n / 2) % n + n) % n - n / 2; };
    std::vector<double> s1(n, 0.0), s2(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s1[i] += dx * ker(wrap(i - j)) * m.density()[j];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s2[i] += dx * ker(wrap(i - j)) * s1[j];
    const Field F = eval_F(c, m);
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(F[i] - s2[i]));
    CHECK(err <= 1e-10);
}

TEST_CASE("derivative kernels") {
    const Grid g(64, 4.0);
    const double dx = g.dx(0);
    const Measure m = random_bump_mixture(g, 2, 4);

    const Coupling conv = conv_coupling(parse_kernel("gauss(0.5)", g));
    const Eigen::MatrixXd M = eval_dmF(conv, m.density());
    for (int i = 16; i < 48; ++i)
        for (int j = 16; j < 48; ++j) CHECK(std::abs(M(i, j) - gauss((i - j) * dx, 0.5)) <= 1e-15);
    // Toeplitz
    for (int i = 1; i < 64; ++i) CHECK(M(i, i) == M(0, 0));

    // Phi = s^2/2: M[x][y] = int s(z) phi2(x - z) phi2(z - y) dz.
    const Coupling loc = local_coupling(power_map(2.0), parse_kernel("gauss(0.4)", g));
    const Eigen::MatrixXd ML = eval_dmF(loc, m.density());
    const int n = 64;
    auto wrap = [&](int a) { return ((a + n / 2) % n + n) % n - n / 2; };
    std::vector<double> s(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s[i] += dx * gauss(wrap(i - j) * dx, 0.4) * m.density()[j];
    double err = 0.0;
    for (int x = 0; x < n; x += 7)
        for (int y = 0; y < n; ++y) {
            double q = 0.0;
            for (int z = 0; z < n; ++z) q += dx * s[z] * gauss(wrap(x - z) * dx, 0.4) * gauss(wrap(z - y) * dx, 0.4);
            err = std::max(err, std::abs(ML(x, y) - q));
        }
    CHECK(err <= 1e-9);

    // pairing agrees with the matrix
    const Measure mp = random_bump_mixture(g, 2, 5);
    const Field rho = mp.density() - m.density();
    const Field p = pair_dmF(loc, m.density(), rho);
    Eigen::VectorXd r(n);
    for (int j = 0; j < n; ++j) r(j) = rho[j] * dx;
    const Eigen::VectorXd pm = ML * r;
    for (int i = 0; i < n; ++i) CHECK(std::abs(pm(i) - p[i]) <= 1e-12);

    CHECK_THROWS_AS(eval_dmF(conv, Field(Grid(512, 4.0), 0.0)), Error);
    CHECK_NOTHROW(dmF_row(conv, Field(Grid(512, 4.0), 0.0), 3));
}

TEST_CASE("directional derivative and fundamental theorem") {
    const Grid g(128, 4.0);
    const Coupling c = local_coupling(power_map(2.5), parse_kernel("gauss(0.4)", g));
    const Measure m = random_bump_mixture(g, 3, 1);
    const Measure mp = random_bump_mixture(g, 3, 2);
    const Field d = mp.density() - m.density();
    const Field lin = pair_dmF(c, m.density(), d);
    double defect[2];
    int k = 0;
    for (double h : {1e-2, 1e-3}) {
        const Field Fh = eval_F(c, m.density() + h * d);
        defect[k++] = (Fh - eval_F(c, m) - h * lin).max_abs();
    }
    CHECK(defect[0] / defect[1] == doctest::Approx(100.0).epsilon(0.05));

    const Field lhs = eval_F(c, mp) - eval_F(c, m);
    Field rhs(g);
    boost::math::quadrature::gauss<double, 16> gl;
    // nodes on [-1, 1]; map to lambda in [0, 1]
    const auto& x = gl.abscissa();
    const auto& w = gl.weights();
    auto add = [&](double t, double wt) {
        const double lam = 0.5 * (t + 1.0);
        rhs += 0.5 * wt * pair_dmF(c, lam * mp.density() + (1 - lam) * m.density(), d);
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) add(0.0, w[i]);
        else {
            add(x[i], w[i]);
            add(-x[i], w[i]);
        }
    }
    CHECK(max_abs_diff(lhs, rhs) <= 1e-8);
}

TEST_CASE("monotonicity validators") {
    const Grid g(128, 4.0);
    const Coupling pd = conv_coupling(parse_kernel("gauss(0.5)", g));
    CHECK(grid_positive_definite(std::get<ConvCoupling>(pd.kind).phi));
    CHECK(check_M1(pd, g, 10, 3).pass);
    const Measure m = random_bump_mixture(g, 2, 8);
    CHECK(check_M2(pd, m.density()).pass);

    const Field pdb = parse_kernel("pdbump(1.0)", g);
    CHECK(grid_positive_definite(pdb));
    CHECK(check_M2(conv_coupling(pdb), m.density()).pass);

    const Field odd = parse_kernel("odd(1.0)", g);
    CHECK_FALSE(grid_positive_definite(odd));
    const Coupling oc = conv_coupling(odd);
    const auto m1 = check_M1(oc, g, 10, 3);
    CHECK(m1.pass);
    CHECK(m1.max_abs <= 1e-10);
    // Raw derivative of an odd convolution is antisymmetric: the form vanishes.
    CHECK(std::abs(check_M2(oc, m.density()).min_eig) <= 1e-12);
    // Zero-mean derivative at a near-delta at 0: form at delta_{x0} is -phi(x0).
    const Measure d0 = mollified_delta(g, {0.0, 0.0}, 2 * g.dx(0));
    const auto m2 = check_M2(oc, d0.density(), DerivativeNormalization::zero_mean);
    CHECK_FALSE(m2.pass);
    CHECK(m2.min_eig < -0.1 * odd.max_abs());
}

TEST_CASE("kernel specs and smoothness") {
    const Grid g(128, 4.0);
    CHECK(smoothness_budget(parse_kernel("gauss(0.5)", g)) == 4);
    CHECK(conv_coupling(parse_kernel("gauss(0.5, 2)", g)).smoothness == 4);
    CHECK(parse_kernel("gauss(0.5, 2)", g).max() == doctest::Approx(2.0));
    CHECK_THROWS_AS(parse_kernel("gauss(-1)", g), Error);
    CHECK_THROWS_AS(parse_kernel("wavelet(1)", g), Error);
    CHECK_THROWS_AS(parse_kernel("gauss", g), Error);
    CHECK_THROWS_AS(local_coupling(power_map(2.0), parse_kernel("odd(1)", g)), Error);
    const Coupling c = parse_coupling("local", "gauss(0.3)", "power(2)", g);
    CHECK(std::holds_alternative<LocalCompositeCoupling>(c.kind));
    CHECK_THROWS_AS(parse_coupling("local", "gauss(0.3)", "exp", g), Error);
}

TEST_CASE("2D conv coupling") {
    const Grid g({32, 32}, {3.0, 3.0});
    // Narrow enough that the truncation at the box edge stays below 1e-12.
    const Coupling c = conv_coupling(parse_kernel("gauss(0.4)", g));
    CHECK(grid_positive_definite(std::get<ConvCoupling>(c.kind).phi));
    const Measure m = random_bump_mixture(g, 2, 1);
    const Eigen::MatrixXd M = eval_dmF(c, m.density());
    CHECK(M.rows() == 1024);
    CHECK(check_M2(c, m.density()).pass);
    CHECK(check_M1(c, g, 3, 2).pass);
}

TEST_CASE("fixed coupling ignores the measure") {
    const Grid g(64, 4.0);
    const Field f = parse_kernel("gauss(0.5)", g);
    const Coupling c = parse_coupling("fixed", "gauss(0.5)", "", g);
    CHECK(c.ignores_m());
    CHECK_FALSE(c.is_zero());
    const Measure m = gaussian_measure(g, {0.2, 0.0}, 0.4);
    CHECK(max_abs_diff(eval_F(c, m), f) == 0.0);
    CHECK(pair_dmF(c, m.density(), m.density()).max_abs() == 0.0);
    CHECK(eval_dmF(c, m.density()).norm() == 0.0);
}
