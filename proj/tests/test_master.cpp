#include <doctest.h>

#include <cmath>
#include <algorithm>

#include "lmfg/errors.hpp"
#include "lmfg/master.hpp"
#include "lmfg/spectral.hpp"

using namespace lmfg;

namespace {

MasterScenario conv_scenario(int n, double dt, double T = 1.0, bool coupled = true) {
    const Grid g(n, 8.0);
    MasterScenario s;
    s.kernel = std::make_shared<KernelCache>(fractional_laplacian(1, 1.5), g, dt);
    s.T = T;
    s.G = coupled ? conv_coupling(parse_kernel("pdbump(1.5)", g)) : fixed_coupling(parse_kernel("gauss(0.5)", g));
    if (coupled) s.F = conv_coupling(parse_kernel("pdbump(1.5)", g));
    return s;
}

Measure base_measure(const Grid& g) { return gaussian_measure(g, {0.3, 0.0}, 0.5); }
Measure other_measure(const Grid& g) { return gaussian_measure(g, {-0.5, 0.0}, 0.7); }

std::size_t node_at(const Grid& g, double x) { return static_cast<std::size_t>(std::lround((x + g.half_width(0)) / g.dx(0))); }

}  // namespace

TEST_CASE("terminal slice is G without a solve") {
    MasterField U(conv_scenario(128, 0.01));
    const Grid& g = U.scenario().grid();
    const Measure m0 = base_measure(g);
    CHECK(max_abs_diff(U.U(1.0, m0), eval_F(U.scenario().G, m0)) <= 1e-12);
    CHECK(U.cache_size() == 0);
    const ResidualReport r = master_residual(U, 1.0, m0, {10, 64});
    CHECK(r.terminal);
    CHECK(r.max_abs <= 1e-8);
    CHECK_THROWS_AS(U.U(0.555, m0), Error);  // off the time lattice
}

TEST_CASE("U approaches G as t0 -> T") {
    MasterField U(conv_scenario(128, 0.01));
    const Measure m0 = base_measure(U.scenario().grid());
    const Field G = eval_F(U.scenario().G, m0);
    double prev = 1e300;
    for (double t0 : {0.8, 0.9, 0.98}) {
        const double d = max_abs_diff(U.U(t0, m0), G);
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev <= 0.05);
}

TEST_CASE("decoupled scenario: U ignores m0 and the residual is the HJB residual") {
    MasterField U(conv_scenario(128, 0.01, 0.5, false));
    const MasterScenario& sc = U.scenario();
    const Grid& g = sc.grid();
    const Measure a = base_measure(g);
    const Measure b = other_measure(g);
    CHECK(max_abs_diff(U.U(0.2, a), U.U(0.2, b)) <= 1e-10);

    const DerivativeTable d = derivative_check(U, 0.2, a, b, {0.2, 0.1, 0.05, 0.025});
    CHECK(d.flat);
    CHECK(d.pass);
    for (double v : d.defect) CHECK(v <= 1e-10);

    // Standalone backward solve on [0, T]; t0 = 0.2 is slice 20.
    HjbOptions ho;
    ho.picard_sweeps = 0;
    const Trajectory u = solve_hjb(*sc.kernel, sc.H, nullptr, eval_F(sc.G, a), 0.0, 0.5, 50, ho);
    const int k = 20;
    const double dt = sc.dt();
    const Field hjb = (1.0 / (2 * dt)) * (u[k + 1] - u[k - 1]) + sc.kernel->generator(u[k]) -
                      eval_H(sc.H, u[k], gradient(u[k]));
    const std::vector<std::size_t> samples{node_at(g, -1.0), node_at(g, 0.0), node_at(g, 0.5), node_at(g, 1.5)};
    const ResidualReport r = master_residual(U, 0.2, a, samples);
    double hjb_max = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(std::abs(r.residual[i] - hjb[samples[i]]) <= 1e-10);
        CHECK(std::abs(r.L_y_term[i]) <= 1e-12);
        CHECK(std::abs(r.transport_term[i]) <= 1e-12);
        hjb_max = std::max(hjb_max, std::abs(hjb[samples[i]]));
    }
    CHECK(r.max_abs <= hjb_max + 1e-10);

    const FlowReport f = flow_consistency(U, 0.0, a, 0.25);
    CHECK(f.gap <= 1e-8);
    CHECK(f.pass);
}

TEST_CASE("measure derivative: superlinear defect and additive-constant freedom") {
    MasterField U(conv_scenario(128, 0.01, 0.5));
    const Grid& g = U.scenario().grid();
    const Measure a = base_measure(g);
    const Measure b = other_measure(g);
    const std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
    const DerivativeTable d = derivative_check(U, 0.0, a, b, hs);
    CHECK_FALSE(d.flat);
    CHECK(d.slope >= 1.2);
    CHECK(d.pass);
    MESSAGE("direct slope " << d.slope);

    DerivativeOptions ex;
    ex.explicit_J = true;
    const DerivativeTable dj = derivative_check(U, 0.0, a, b, hs, ex);
    ex.J_shift = 1.0;
    const DerivativeTable dj1 = derivative_check(U, 0.0, a, b, hs, ex);
    // J carries the 2dx delta mollifier, which adds an O(h dx^2) floor to the
    // explicit defects; the slope criterion is carried by the direct pairing above.
    for (std::size_t i = 0; i < hs.size(); ++i) CHECK(std::abs(dj1.defect[i] - dj.defect[i]) <= 1e-10);
    MESSAGE("explicit slope " << dj.slope);

    CHECK_THROWS_AS(derivative_check(U, 0.0, a, a, hs), Error);
    CHECK_THROWS_AS(derivative_check(U, 0.0, a, b, {0.1, 0.2}), Error);
}

TEST_CASE("coupled residual decreases under joint refinement") {
    const std::vector<double> xs{-1.0, 0.0, 0.5, 1.5};
    double res[2];
    int level = 0;
    for (auto [n, dt] : {std::pair{64, 0.01}, std::pair{128, 0.005}}) {
        MasterField U(conv_scenario(n, dt, 0.5));
        const Grid& g = U.scenario().grid();
        std::vector<std::size_t> samples;
        for (double x : xs) samples.push_back(node_at(g, x));
        const ResidualReport r = master_residual(U, 0.2, base_measure(g), samples);
        CHECK(r.y_stride == 1);
        res[level++] = r.max_abs;
    }
    MESSAGE("residuals " << res[0] << " -> " << res[1]);
    CHECK(res[0] / res[1] >= 1.5);
}

TEST_CASE("coarse y-batch fallback warns and stays close") {
    MasterScenario sc = conv_scenario(128, 0.01, 0.5);
    MasterField full(sc);
    sc.max_y_per_axis = 32;
    MasterField coarse(sc);
    const Grid& g = sc.grid();
    const std::vector<std::size_t> samples{node_at(g, 0.0), node_at(g, 1.0)};
    const ResidualReport rf = master_residual(full, 0.2, base_measure(g), samples);
    const ResidualReport rc = master_residual(coarse, 0.2, base_measure(g), samples);
    CHECK(rc.y_stride == 4);
    REQUIRE_FALSE(rc.notes.empty());
    CHECK(rc.notes.back().find("warning") != std::string::npos);
    for (std::size_t i = 0; i < samples.size(); ++i) CHECK(std::abs(rc.residual[i] - rf.residual[i]) <= 0.1);
}

TEST_CASE("flow consistency at restarts") {
    MasterField U(conv_scenario(128, 0.01, 0.5));
    const Measure m0 = base_measure(U.scenario().grid());
    const FlowReport same = flow_consistency(U, 0.0, m0, 0.0);
    CHECK(same.gap <= 1e-12);
    const FlowReport mid = flow_consistency(U, 0.0, m0, 0.25);
    MESSAGE("midpoint gap " << mid.gap);
    CHECK(mid.gap <= 20 * U.scenario().iteration.tol_d0);
    CHECK(mid.pass);
    CHECK_THROWS_AS(flow_consistency(U, 0.0, m0, 0.5), Error);
}

TEST_CASE("t0 stability and Lipschitz dependence on m0") {
    MasterField U(conv_scenario(128, 0.01, 1.0));
    const Grid& g = U.scenario().grid();
    const Measure m0 = base_measure(g);
    const TimeStabilityReport ts = t0_stability(U, 0.5, m0, {0.04, 0.01});
    CHECK(ts.pass);
    MESSAGE("C(h) " << ts.constant[0] << " " << ts.constant[1]);

    std::vector<double> ratios;
    const Field u0 = U.U(0.5, m0);
    for (double a : {0.2, 0.1, 0.05, 0.025}) {
        const Measure shifted{translate(m0.density(), {a, 0.0})};
        ratios.push_back(max_abs_diff(U.U(0.5, shifted), u0) / d0_distance(m0.density(), shifted.density()));
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*hi / *lo <= 2.0);
}
