#include <doctest.h>

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

#include "lmfg/errors.hpp"
#include "lmfg/hjb.hpp"
#include "lmfg/linearized.hpp"
#include "lmfg/spectral.hpp"

using namespace lmfg;

namespace {

struct Base {
    MfgProblem p;
    MfgSolution s;
    LinSystem sys;
};

Base coupled_base(double center = 0.5) {
    const Grid g(128, 8.0);
    Base b;
    b.p.kernel = std::make_shared<KernelCache>(fractional_laplacian(1, 1.5), g, 0.01);
    b.p.steps = 100;
    b.p.F = conv_coupling(parse_kernel("pdbump(1.5)", g));
    b.p.G = conv_coupling(parse_kernel("pdbump(1.5)", g));
    b.p.m0 = gaussian_measure(g, {center, 0.0}, 0.5);
    b.p.iteration.tol_d0 = 1e-10;
    b.s = solve_mfg(b.p);
    REQUIRE(b.s.converged);
    b.sys = linearize(b.p, b.s);
    return b;
}

void add_data(LinSystem& sys, double scale) {
    const Grid& g = sys.grid();
    Trajectory b(g, sys.t0, sys.T, sys.steps);
    VectorTrajectory c;
    for (int k = 0; k <= sys.steps; ++k) {
        const double t = b.time(k);
        b[k] = Field::sample(g, [&](const Vec2& x) { return scale * 0.3 * std::cos(x[0] + t) * std::exp(-x[0] * x[0] / 4); });
        c.push_back({Field::sample(g, [&](const Vec2& x) { return scale * 0.2 * std::sin(0.8 * x[0] - t) * std::exp(-x[0] * x[0] / 3); })});
    }
    sys.b = b;
    sys.c = c;
    sys.z_T = Field::sample(g, [&](const Vec2& x) { return scale * std::exp(-(x[0] - 1) * (x[0] - 1)); });
    sys.rho0 = scale * (gaussian_measure(g, {0.3, 0.0}, 0.4).density() - gaussian_measure(g, {-0.6, 0.0}, 0.5).density());
}

}  // namespace

TEST_CASE("zero data gives the zero solution") {
    const Base b = coupled_base();
    const LinSolution s = solve_linear_system(b.sys);
    CHECK(s.converged);
    CHECK(s.iterations == 1);
    for (int k = 0; k <= b.sys.steps; ++k) {
        CHECK(s.z[k].max_abs() == 0.0);
        CHECK(s.rho[k].max_abs() == 0.0);
    }
    CHECK(s.apriori_ratio == 0.0);
}

TEST_CASE("one-way coupling reduces to standalone solves") {
    Base b = coupled_base();
    LinSystem sys = b.sys;
    add_data(sys, 1.0);
    sys.rho0 = Field(sys.grid());
    sys.dF = zero_coupling();
    sys.dG = zero_coupling();
    const LinSolution s = solve_linear_system(sys);
    CHECK(s.converged);

    BackwardProblem bp;
    bp.kernel = sys.kernel.get();
    bp.drift = &sys.V;
    bp.source = &*sys.b;
    bp.terminal = sys.z_T;
    bp.steps = sys.steps;
    HjbOptions ho;
    ho.picard_sweeps = 0;
    const Trajectory z = solve_backward(bp, ho);
    VectorTrajectory flux;
    for (int k = 0; k <= sys.steps; ++k)
        flux.push_back({pointwise(sys.Gamma[k].apply(gradient(z[k]))[0], sys.m_flux[k]) + (*sys.c)[k][0]});
    const Trajectory rho = solve_fp(*sys.kernel, sys.V, sys.rho0, &flux, 0.0, 1.0, sys.steps);
    for (int k = 0; k <= sys.steps; ++k) {
        CHECK(max_abs_diff(z[k], s.z[k]) == 0.0);
        CHECK(max_abs_diff(rho[k], s.rho[k]) <= 1e-14);
    }
}

TEST_CASE("duality identity and coupling signs") {
    Base b = coupled_base();
    add_data(b.sys, 1.0);
    const LinSolution s = solve_linear_system(b.sys);
    REQUIRE(s.converged);
    const DualityReport r = duality_identity(b.sys, s);
    CHECK(r.relative_gap <= 1e-4);
    CHECK(r.coupling_F >= -1e-8);
    CHECK(r.coupling_G >= -1e-8);
    CHECK(r.lhs > 0.0);
    CHECK(r.pass);
    CHECK(s.apriori_ratio > 0.0);
    CHECK(std::isfinite(s.apriori_ratio));
    // Point-mass initial data (the J setting).
    LinSystem j = b.sys;
    j.b.reset();
    j.c.reset();
    j.z_T = Field(j.grid());
    j.rho0 = mollified_point_mass(j.grid(), 70);
    const LinSolution sj = solve_linear_system(j);
    const DualityReport rj = duality_identity(j, sj);
    CHECK(rj.relative_gap <= 1e-4);
    CHECK(rj.pass);
}

TEST_CASE("outputs scale linearly with the data") {
    Base b = coupled_base();
    LinSystem one = b.sys;
    add_data(one, 1.0);
    const LinSolution s1 = solve_linear_system(one);
    for (double scale : {2.0, 4.0}) {
        LinSystem sys = b.sys;
        add_data(sys, scale);
        const LinSolution s = solve_linear_system(sys);
        for (int k = 0; k <= sys.steps; k += 10) {
            CHECK(max_abs_diff(s.z[k], scale * s1.z[k]) <= 1e-9);
            CHECK(max_abs_diff(s.rho[k], scale * s1.rho[k]) <= 1e-9);
        }
    }
}

TEST_CASE("Gamma must be elliptic") {
    Base b = coupled_base();
    LinSystem sys = b.sys;
    sys.Gamma[5].a00[10] = 1e-3;
    CHECK_THROWS_AS(solve_linear_system(sys), Error);
    sys = b.sys;
    sys.Gamma.pop_back();
    CHECK_THROWS_AS(solve_linear_system(sys), Error);
}

TEST_CASE("J field: decoupled, linear, symmetric") {
    Base b = coupled_base(0.0);
    LinSystem dec = b.sys;
    dec.dF = zero_coupling();
    dec.dG = zero_coupling();
    CHECK(j_field(dec, 40).max_abs() == 0.0);

    const Grid& g = b.sys.grid();
    const Field j1 = j_field(b.sys, 50);
    const Field j2 = j_field(b.sys, 71);
    LinSystem mix = b.sys;
    mix.rho0 = 0.5 * (mollified_point_mass(g, 50) + mollified_point_mass(g, 71));
    const Field jm = solve_linear_system(mix).z[0];
    CHECK(max_abs_diff(jm, 0.5 * (j1 + j2)) <= 1e-10);

    // Even data and an even kernel: J(x, y) = J(-x, -y).
    const std::size_t y = 50;
    const Field jr = j_field(b.sys, g.reflected(y));
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(j1[i] - jr[g.reflected(i)]));
    CHECK(worst <= 1e-8);
    CHECK(j1.max_abs() > 1e-3);

    const Eigen::MatrixXd J = j_field_batch(b.sys, {50, 71});
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(J(static_cast<Eigen::Index>(i), 0) == j1[i]);
        CHECK(J(static_cast<Eigen::Index>(i), 1) == j2[i]);
    }
}

TEST_CASE("frozen first iterate against a two-step oracle") {
    const Grid g(128, 8.0);
    const int N = 8;
    const double T = 0.16;
    LinSystem sys;
    sys.kernel = std::make_shared<KernelCache>(fractional_laplacian(1, 1.5), g, T / N);
    sys.T = T;
    sys.steps = N;
    const Field flat(g, 1.0 / 16.0);
    const SymMatField id{Field(g, 1.0), Field(g), Field(g, 1.0)};
    sys.Gamma.assign(N + 1, id);
    sys.m.assign(N + 1, flat);
    sys.m_flux.assign(N + 1, flat);
    const Field phi = parse_kernel("pdbump(1.5)", g);
    sys.dF = conv_coupling(phi);
    sys.z_T = Field(g);
    sys.rho0 = mollified_point_mass(g, 60);
    LinOptions o;
    o.max_iters = 1;
    const Field z0 = solve_linear_system(sys, o).z[0];

    // Discrete oracle: rho_k = P*^k rho0, z_0 = dt sum_{k<N} P^k (phi * rho_k).
    const KernelCache& K = *sys.kernel;
    const double dt = K.dt();
    Field disc(g);
    for (int k = 0; k < N; ++k) {
        const Field rho_k = K.apply(k * dt, sys.rho0, true);
        disc = axpy(disc, dt, K.apply(k * dt, periodic_convolve(phi, rho_k)));
    }
    CHECK(max_abs_diff(z0, disc) <= 1e-12);

    // Continuum oracle: int_0^T K_s * phi * K*_s rho0 ds by Gauss-Legendre.
    Field cont(g);
    const auto& nodes = boost::math::quadrature::gauss<double, 20>::abscissa();
    const auto& weights = boost::math::quadrature::gauss<double, 20>::weights();
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (double sign : {-1.0, 1.0}) {
            if (nodes[i] == 0.0 && sign < 0) continue;  // a zero node appears once
            const double s = 0.5 * T * (1 + sign * nodes[i]);
            const Field inner_term = K.apply(s, periodic_convolve(phi, K.apply(s, sys.rho0, true)));
            cont = axpy(cont, 0.5 * T * weights[i], inner_term);
        }
    CHECK(max_abs_diff(z0, cont) <= 5e-3);
}

TEST_CASE("solver errors are tagged with the J node") {
    Base b = coupled_base();
    try {
        LinOptions o;
        o.damping = 0.0;
        (void)j_field(b.sys, 33, o);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("J node y = 33") != std::string::npos);
    }
}
