#include "lmfg/mfg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lmfg/errors.hpp"
#include "lmfg/parallel.hpp"
#include "lmfg/spectral.hpp"

namespace lmfg {

void MfgProblem::validate() const {
    require(kernel != nullptr, "mfg: no kernel cache");
    require(T > t0, "mfg: T must exceed t0");
    require(steps >= 1, "mfg: need at least one time step");
    require(iteration.damping > 0.0 && iteration.damping <= 1.0, "mfg: damping must lie in (0, 1]");
    require(iteration.tol_d0 > 0.0, "mfg: tol_d0 must be positive");
    require(iteration.max_iters >= 1, "mfg: max_iters must be positive");
    require_same_grid(kernel->grid(), m0.grid(), "mfg initial measure");
    require(std::abs(kernel->dt() - (T - t0) / steps) <= 1e-12 * kernel->dt(),
            "mfg: kernel cache step does not match (T - t0) / steps");
    if (initial_guess) {
        require(initial_guess->size() == static_cast<std::size_t>(steps) + 1, "mfg: initial guess slices");
        for (const auto& f : *initial_guess) require_same_grid(kernel->grid(), f.grid(), "mfg initial guess");
    }
}

bool DampingSchedule::observe(double gap) {
    rising = last >= 0.0 && gap > last ? rising + 1 : 0;
    last = gap;
    if (rising < patience) return false;
    lambda *= 0.5;
    rising = 0;
    return true;
}

Drift optimal_drift(const Hamiltonian& H, const Trajectory& u) {
    VectorTrajectory b;
    b.reserve(u.slices.size());
    for (const auto& s : u.slices) b.push_back(eval_DpH(H, s, gradient(s)));
    return Drift::from_fields(std::move(b));
}

BestResponse best_response(const MfgProblem& p, const std::vector<Field>& mu) {
    const KernelCache& K = *p.kernel;
    Trajectory source;
    const bool has_source = !p.F.is_zero();
    if (has_source) {
        source = Trajectory(K.grid(), p.t0, p.T, p.steps);
        for (int k = 0; k <= p.steps; ++k) source[k] = eval_F(p.F, mu[static_cast<std::size_t>(k)]);
    }
    BackwardProblem bp;
    bp.kernel = &K;
    bp.H = &p.H;
    bp.source = has_source ? &source : nullptr;
    bp.terminal = p.G.is_zero() ? Field(K.grid()) : eval_F(p.G, mu.back());
    bp.t0 = p.t0;
    bp.T = p.T;
    bp.steps = p.steps;
    HjbOptions ho;
    ho.picard_sweeps = p.hjb_sweeps;
    ho.enforce_budget = p.enforce_budget;

    BestResponse r;
    r.u = solve_backward(bp, ho);
    const Drift b = optimal_drift(p.H, r.u);
    ForwardProblem fp;
    fp.kernel = &K;
    fp.drift = &b;
    fp.rho0 = p.m0.density();
    fp.t0 = p.t0;
    fp.T = p.T;
    fp.steps = p.steps;
    fp.smoothed = &r.m_flux;
    FpOptions fo;
    fo.enforce_budget = p.enforce_budget;
    r.m = solve_forward(fp, fo);
    return r;
}

double sup_d0(const Trajectory& a, const Trajectory& b, const D0Options& opt) {
    require(a.slices.size() == b.slices.size(), "sup_d0: different time grids");
    double s = 0.0;
    for (std::size_t k = 0; k < a.slices.size(); ++k) s = std::max(s, d0_distance(a.slices[k], b.slices[k], opt));
    return s;
}

Measure MfgSolution::measure(int k) const { return Measure::normalized(m[k]); }

namespace {

double sup_d0(const std::vector<Field>& a, const Trajectory& b, const D0Options& opt) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s = std::max(s, d0_distance(b.slices[k], a[k], opt));
    return s;
}

MfgSolution from_response(BestResponse&& r) {
    MfgSolution s;
    s.u = std::move(r.u);
    s.m = std::move(r.m);
    s.m_flux = std::move(r.m_flux);
    return s;
}

}  // namespace

MfgSolution solve_mfg(const MfgProblem& p) {
    p.validate();
    std::vector<Field> mu =
        p.initial_guess ? *p.initial_guess : std::vector<Field>(static_cast<std::size_t>(p.steps) + 1, p.m0.density());
    DampingSchedule damping{p.iteration.damping, p.iteration.patience};

    auto respond = [&](int it) {
        try {
            return best_response(p, mu);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " (outer iteration " + std::to_string(it) + ")",
                                  e.last_stable_slice());
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(e.what()) + " (outer iteration " + std::to_string(it) + ")");
        }
    };

    if (p.F.ignores_m() && p.G.ignores_m()) {
        // S does not depend on mu, so S(mu^0) is the fixed point.
        MfgSolution s = from_response(respond(1));
        s.iterations = 1;
        s.converged = true;
        s.gap_history = {0.0};
        s.final_damping = damping.lambda;
        s.notes.push_back("decoupled: couplings ignore m");
        return s;
    }

    MfgSolution best;
    double best_gap = std::numeric_limits<double>::infinity();
    std::vector<std::string> notes;
    std::vector<double> history;
    for (int it = 1; it <= p.iteration.max_iters; ++it) {
        BestResponse r = respond(it);
        const double gap = sup_d0(mu, r.m, p.gap_metric);
        history.push_back(gap);
        const bool done = gap < p.iteration.tol_d0;
        if (gap < best_gap || done) {
            best_gap = gap;
            best = from_response(BestResponse(r));
            best.iterations = it;
        }
        if (done) {
            best.converged = true;
            break;
        }
        if (damping.observe(gap))
            notes.push_back("damping halved to " + std::to_string(damping.lambda) + " at iteration " +
                            std::to_string(it));
        for (std::size_t k = 0; k < mu.size(); ++k) {
            mu[k] *= 1.0 - damping.lambda;
            mu[k] = axpy(mu[k], damping.lambda, r.m.slices[k]);
        }
    }
    best.gap_history = std::move(history);
    best.final_damping = damping.lambda;
    best.notes = std::move(notes);
    if (!best.converged)
        best.notes.push_back("not converged in " + std::to_string(p.iteration.max_iters) +
                             " iterations; best gap " + std::to_string(best_gap) + " at iteration " +
                             std::to_string(best.iterations));
    return best;
}

LasryLionsReport lasry_lions_check(const MfgSolution& s1, const MfgSolution& s2, const Hamiltonian& H, double c2) {
    require_same_grid(s1.u.grid, s2.u.grid, "lasry_lions_check");
    require(s1.u.steps == s2.u.steps && s1.u.t0 == s2.u.t0 && s1.u.T == s2.u.T,
            "lasry_lions_check: different time grids");
    require(s1.m_flux.size() == s1.m.slices.size() && s2.m_flux.size() == s2.m.slices.size(),
            "lasry_lions_check: solutions lack flux densities");
    const int N = s1.u.steps;
    const double dt = s1.u.dt();
    const Grid& g = s1.u.grid;
    LasryLionsReport r;
    r.u_dependent = H.u_dependent();

    // Bregman gap H(v, q) - H(v, p) - D_pH(v, p)(q - p).
    auto bregman = [&](const Field& v, const VectorField& q, const VectorField& pgrad) {
        const VectorField b = eval_DpH(H, v, pgrad);
        VectorField diff(q.size());
        for (std::size_t a = 0; a < q.size(); ++a) diff[a] = q[a] - pgrad[a];
        return eval_H(H, v, q) - eval_H(H, v, pgrad) - dot(b, diff);
    };
    auto split_pairing = [](const Field& w, const Field& mu) {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            s += std::max(w[i], 0.0) * std::max(mu[i], 0.0) + std::max(-w[i], 0.0) * std::max(-mu[i], 0.0);
        return s * w.grid().cell_volume();
    };

    double cross = 0.0;
    double dependent_tail = 0.0;
    double c2_seen = 0.0;
    for (int k = 1; k <= N; ++k) {
        const VectorField D1 = gradient(s1.u[k]);
        const VectorField D2 = gradient(s2.u[k]);
        const Field& mh1 = s1.m_flux[static_cast<std::size_t>(k)];
        const Field& mh2 = s2.m_flux[static_cast<std::size_t>(k)];
        cross += inner(bregman(s2.u[k], D1, D2), mh2) + inner(bregman(s1.u[k], D2, D1), mh1);
        if (r.u_dependent) {
            dependent_tail += split_pairing(s1.u[k] - s2.u[k], mh1 - mh2);
            for (const auto* s : {&s1, &s2}) {
                const Field& u = s->u[k];
                const VectorField& D = s == &s1 ? D1 : D2;
                for (std::size_t i = 0; i < u.size(); ++i) {
                    const Vec2 p{D[0][i], D.size() > 1 ? D[1][i] : 0.0};
                    c2_seen = std::max(c2_seen, H.DuH(g.point(i), u[i], p));
                }
            }
        }
    }
    r.cross_term = dt * cross;
    const Field w0 = s1.u[0] - s2.u[0];
    const Field mu0 = s1.m[0] - s2.m[0];
    if (r.u_dependent) {
        r.c2 = c2 >= 0.0 ? c2 : c2_seen;
        r.rhs = split_pairing(w0, mu0) + r.c2 * dt * dependent_tail;
    } else {
        r.c2 = 0.0;
        r.rhs = inner(w0, mu0);
    }
    r.pass = r.cross_term <= r.rhs + 1e-7 && r.cross_term >= -1e-8;
    return r;
}

StabilityProbe lipschitz_stability_probe(const MfgProblem& p, const std::vector<Measure>& perturbed, double band) {
    require(!perturbed.empty(), "stability probe: no perturbed measures");
    StabilityProbe r;
    for (const auto& m : perturbed) {
        const double d = d0_distance(p.m0.density(), m.density(), p.gap_metric);
        require(d >= 1e-12, "stability probe: perturbed measure coincides with m0 (degenerate probe)");
        r.d0_initial.push_back(d);
    }
    std::vector<MfgSolution> sols(perturbed.size() + 1);
    parallel_for(sols.size(), [&](std::size_t i) {
        MfgProblem q = p;
        if (i > 0) q.m0 = perturbed[i - 1];
        sols[i] = solve_mfg(q);
    });
    for (std::size_t i = 1; i < sols.size(); ++i) {
        const double dm = sup_d0(sols[0].m, sols[i].m, p.gap_metric);
        double du = 0.0;
        for (int k = 0; k <= p.steps; ++k) du = std::max(du, max_abs_diff(sols[0].u[k], sols[i].u[k]));
        r.d0_flow.push_back(dm);
        r.u_gap.push_back(du);
        r.ratios.push_back((dm + du) / r.d0_initial[i - 1]);
    }
    const auto [lo, hi] = std::minmax_element(r.ratios.begin(), r.ratios.end());
    r.spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
    r.pass = r.spread <= band;
    return r;
}

}  // namespace lmfg
