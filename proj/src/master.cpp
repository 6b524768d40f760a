#include "lmfg/master.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lmfg/errors.hpp"
#include "lmfg/parallel.hpp"
#include "lmfg/spectral.hpp"

namespace lmfg {

int MasterScenario::steps_from(double t0) const {
    require(kernel != nullptr, "master: no kernel cache");
    const double k = (T - t0) / dt();
    const long n = std::lround(k);
    require(n >= 0 && std::abs(k - static_cast<double>(n)) <= 1e-9 * std::max(1.0, k),
            "master: t0 = " + std::to_string(t0) + " is not on the time lattice T - k dt");
    return static_cast<int>(n);
}

MfgProblem MasterScenario::problem(double t0, const Measure& m0) const {
    MfgProblem p;
    p.kernel = kernel;
    p.H = H;
    p.F = F;
    p.G = G;
    p.m0 = m0;
    p.t0 = t0;
    p.T = T;
    p.steps = steps_from(t0);
    p.iteration = iteration;
    p.enforce_budget = enforce_budget;
    p.gap_metric = gap_metric;
    return p;
}

Field MasterField::U(double t0, const Measure& m0) {
    require_same_grid(scenario_.grid(), m0.grid(), "master U");
    if (scenario_.steps_from(t0) == 0) return scenario_.G.is_zero() ? Field(m0.grid()) : eval_F(scenario_.G, m0);
    return solution(t0, m0)->u[0];
}

std::shared_ptr<const MfgSolution> MasterField::solution(double t0, const Measure& m0) {
    require(scenario_.steps_from(t0) > 0, "master: no solve at t0 = T");
    auto find = [&]() -> std::shared_ptr<const MfgSolution> {
        for (const auto& e : cache_)
            if (std::abs(e.t0 - t0) <= 1e-12 && max_abs_diff(e.m0, m0.density()) == 0.0) return e.sol;
        return nullptr;
    };
    {
        std::lock_guard lock(mu_);
        if (auto hit = find()) return hit;
    }
    auto sol = std::make_shared<const MfgSolution>(solve_mfg(scenario_.problem(t0, m0)));
    if (!sol->converged) {
        std::ostringstream os;
        os << "master: MFG from t0 = " << t0 << " did not converge (best gap "
           << *std::min_element(sol->gap_history.begin(), sol->gap_history.end()) << ")";
        throw Error(ErrorKind::divergence, os.str());
    }
    std::lock_guard lock(mu_);
    if (auto hit = find()) return hit;
    cache_.push_back({t0, m0.density(), sol});
    return sol;
}

std::size_t MasterField::cache_size() const {
    std::lock_guard lock(mu_);
    return cache_.size();
}

namespace {

// U at several (t0, m0) pairs; the solves fan out, results land in fixed slots.
std::vector<Field> U_batch(MasterField& U, const std::vector<std::pair<double, Measure>>& at) {
    std::vector<Field> out(at.size());
    parallel_for(at.size(), [&](std::size_t i) { out[i] = U.U(at[i].first, at[i].second); });
    return out;
}

LinSystem linear_system_at(MasterField& U, double t0, const Measure& m0) {
    const MfgProblem p = U.scenario().problem(t0, m0);
    return linearize(p, *U.solution(t0, m0));
}

Field subsample(const Field& f, const Grid& coarse, int stride) {
    if (stride == 1) return f;
    const Grid& g = f.grid();
    Field out(coarse);
    for (int i0 = 0; i0 < coarse.n(0); ++i0)
        for (int i1 = 0; i1 < coarse.n(1); ++i1)
            out[coarse.index(i0, i1)] = f[g.index(i0 * stride, g.dims() == 2 ? i1 * stride : 0)];
    return out;
}

}  // namespace

DerivativeTable derivative_check(MasterField& U, double t0, const Measure& m0, const Measure& m0_prime,
                                 const std::vector<double>& h_list, const DerivativeOptions& opt) {
    require(!h_list.empty(), "derivative_check: empty h list");
    for (std::size_t i = 0; i < h_list.size(); ++i) {
        require(h_list[i] > 0.0 && h_list[i] <= 1.0, "derivative_check: h must lie in (0, 1]");
        require(i == 0 || h_list[i] < h_list[i - 1], "derivative_check: h list must decrease");
    }
    const MasterScenario& sc = U.scenario();
    require(d0_distance(m0.density(), m0_prime.density(), sc.gap_metric) >= 1e-12,
            "derivative_check: m0' coincides with m0 (degenerate direction)");
    require(sc.steps_from(t0) > 0, "derivative_check: t0 must precede T");

    const Field diff = m0_prime.density() - m0.density();
    Field pairing(m0.grid());
    DerivativeTable t;
    if (opt.explicit_J) {
        const JKernel jk = j_kernel(U, t0, m0);
        require(jk.stride == 1, "derivative_check: explicit J needs the full y-grid", ErrorKind::size_guard);
        const double w = m0.grid().cell_volume();
        for (std::size_t x = 0; x < pairing.size(); ++x) {
            double s = 0.0;
            for (std::size_t y = 0; y < diff.size(); ++y)
                s += (jk.J(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) + opt.J_shift) * diff[y];
            pairing[x] = s * w;
        }
    } else {
        LinSystem sys = linear_system_at(U, t0, m0);
        sys.rho0 = diff;
        const LinSolution ls = solve_linear_system(sys, sc.linear);
        if (!ls.converged) t.notes.push_back("linear system did not reach its tolerance");
        pairing = ls.z[0];
    }

    std::vector<std::pair<double, Measure>> at{{t0, m0}};
    for (double h : h_list) at.emplace_back(t0, Measure((1.0 - h) * m0.density() + h * m0_prime.density()));
    const std::vector<Field> Us = U_batch(U, at);

    t.h = h_list;
    for (std::size_t i = 0; i < h_list.size(); ++i)
        t.defect.push_back(max_abs_diff(Us[i + 1], axpy(Us[0], h_list[i], pairing)));
    t.flat = std::all_of(t.defect.begin(), t.defect.end(), [](double d) { return d <= 1e-10; });
    if (t.flat) {
        t.slope = 0.0;
        t.pass = true;
        t.notes.push_back("U is flat in m along this direction; slope not fitted");
        return t;
    }
    const bool positive = std::all_of(t.defect.begin(), t.defect.end(), [](double d) { return d > 0.0; });
    require(positive, "derivative_check: zero defect at some h; cannot fit a slope", ErrorKind::quadrature);
    t.slope = loglog_slope(t.h, t.defect);
    t.pass = t.slope >= 1.2;
    return t;
}

JKernel j_kernel(MasterField& U, double t0, const Measure& m0) {
    const MasterScenario& sc = U.scenario();
    const Grid& g = sc.grid();
    JKernel jk;
    int stride = 1;
    while (g.n(0) / stride > sc.max_y_per_axis || (g.dims() == 2 && g.n(1) / stride > sc.max_y_per_axis))
        stride *= 2;
    jk.stride = stride;
    jk.y_grid = stride == 1 ? g
                : g.dims() == 1
                    ? Grid(g.n(0) / stride, g.half_width(0))
                    : Grid({g.n(0) / stride, g.n(1) / stride}, {g.half_width(0), g.half_width(1)});
    for (int i0 = 0; i0 < jk.y_grid.n(0); ++i0)
        for (int i1 = 0; i1 < jk.y_grid.n(1); ++i1)
            jk.y_nodes.push_back(g.index(i0 * stride, g.dims() == 2 ? i1 * stride : 0));
    jk.J = j_field_batch(linear_system_at(U, t0, m0), jk.y_nodes, sc.linear);
    return jk;
}

ResidualReport master_residual(MasterField& U, double t0, const Measure& m0,
                               const std::vector<std::size_t>& samples) {
    const MasterScenario& sc = U.scenario();
    const Grid& g = sc.grid();
    require(!samples.empty(), "master_residual: no sample points");
    for (std::size_t x : samples) require(x < g.size(), "master_residual: sample node out of range");
    // The y-integral of L_y J only ignores J's additive constant if L kills constants.
    require(sc.kernel->generator(Field(g, 1.0)).max_abs() <= 1e-12,
            "master_residual: generator does not annihilate constants");

    ResidualReport r;
    r.samples = samples;
    const int steps = sc.steps_from(t0);
    if (steps == 0) {
        r.terminal = true;
        const Field gap = U.U(t0, m0) - (sc.G.is_zero() ? Field(g) : eval_F(sc.G, m0));
        for (std::size_t x : samples) r.residual.push_back(gap[x]);
        r.max_abs = gap.max_abs();
        r.notes.push_back("t0 = T: terminal identity U = G checked instead");
        return r;
    }

    const double dt = sc.dt();
    const std::vector<Field> Us = U_batch(U, {{t0, m0}, {t0 + dt, m0}, {t0 - dt, m0}});
    const Field& Uc = Us[0];
    const Field dtU = (1.0 / (2.0 * dt)) * (Us[1] - Us[2]);
    const Field LU = sc.kernel->generator(Uc);
    const VectorField DU = gradient(Uc);
    const Field Hx = eval_H(sc.H, Uc, DU);
    const Field Fx = sc.F.is_zero() ? Field(g) : eval_F(sc.F, m0);
    const VectorField drift = eval_DpH(sc.H, Uc, DU);

    const JKernel jk = j_kernel(U, t0, m0);
    r.y_stride = jk.stride;
    if (jk.stride > 1) {
        r.notes.push_back("warning: y-batch over " + std::to_string(sc.max_y_per_axis) +
                          " nodes per axis; J sampled with stride " + std::to_string(jk.stride));
    }
    const Grid& yg = jk.y_grid;
    const KernelCache coarse_cache(sc.kernel->triplet(), yg, dt);
    const KernelCache& Ly = jk.stride == 1 ? *sc.kernel : coarse_cache;
    const Field m_y = subsample(m0.density(), yg, jk.stride);
    VectorField b_y;
    for (const auto& c : drift) b_y.push_back(subsample(c, yg, jk.stride));

    for (std::size_t x : samples) {
        Field row(yg);
        for (std::size_t j = 0; j < row.size(); ++j)
            row[j] = jk.J(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(j));
        const double l_term = inner(Ly.generator(row), m_y);
        const double t_term = inner(dot(gradient(row), b_y), m_y);
        r.dt_U.push_back(dtU[x]);
        r.L_U.push_back(LU[x]);
        r.H_term.push_back(Hx[x]);
        r.L_y_term.push_back(l_term);
        r.transport_term.push_back(t_term);
        r.F_term.push_back(Fx[x]);
        const double res = dtU[x] + LU[x] - Hx[x] + l_term - t_term + Fx[x];
        r.residual.push_back(res);
        r.max_abs = std::max(r.max_abs, std::abs(res));
    }
    return r;
}

FlowReport flow_consistency(MasterField& U, double t0, const Measure& m0, double s) {
    const MasterScenario& sc = U.scenario();
    require(s >= t0 - 1e-12 && s < sc.T, "flow_consistency: need t0 <= s < T");
    const auto base = U.solution(t0, m0);
    const int offset = sc.steps_from(t0) - sc.steps_from(s);
    FlowReport r;
    r.s = s;
    r.tolerance = 20.0 * sc.iteration.tol_d0;

    const Field& ms = base->m[offset];
    Measure restart;
    try {
        restart = Measure(ms);
    } catch (const Error&) {
        restart = Measure::normalized(ms);
        r.notes.push_back("m(s) had undershoots; restarted from its clamped, renormalized version");
    }
    // A fresh solve, bypassing the cache, so s = t0 measures solver determinism.
    const MfgSolution fresh = solve_mfg(sc.problem(s, restart));
    if (!fresh.converged) r.notes.push_back("restarted solve did not converge");
    for (int j = 0; j <= fresh.u.steps; ++j) {
        const double du = max_abs_diff(fresh.u[j], base->u[offset + j]);
        const double dm = d0_distance(fresh.m[j], base->m[offset + j], sc.gap_metric);
        r.u_gap = std::max(r.u_gap, du);
        r.m_gap = std::max(r.m_gap, dm);
        r.gap = std::max(r.gap, du + dm);
    }
    r.pass = fresh.converged && r.gap <= r.tolerance;
    return r;
}

TimeStabilityReport t0_stability(MasterField& U, double t0, const Measure& m0, const std::vector<double>& h_list) {
    require(!h_list.empty(), "t0_stability: empty h list");
    std::vector<std::pair<double, Measure>> at{{t0, m0}};
    for (double h : h_list) {
        require(h > 0.0, "t0_stability: h must be positive");
        at.emplace_back(t0 - h, m0);
    }
    const std::vector<Field> Us = U_batch(U, at);
    TimeStabilityReport r;
    r.h = h_list;
    for (std::size_t i = 0; i < h_list.size(); ++i) {
        r.diff.push_back(max_abs_diff(Us[0], Us[i + 1]));
        r.constant.push_back(r.diff.back() / std::sqrt(h_list[i]));
    }
    const std::size_t widest = static_cast<std::size_t>(std::max_element(h_list.begin(), h_list.end()) - h_list.begin());
    const double C = r.constant[widest];
    r.pass = std::all_of(r.constant.begin(), r.constant.end(), [&](double c) { return c <= 1.1 * C; });
    return r;
}

}  // namespace lmfg
