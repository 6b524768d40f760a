#include "lmfg/fokker_planck.hpp"

#include <cmath>
#include <string>

#include "lmfg/errors.hpp"
#include "lmfg/hjb.hpp"
#include "lmfg/spectral.hpp"

namespace lmfg {

Trajectory solve_forward(const ForwardProblem& p, const FpOptions& opt) {
    require(p.kernel != nullptr, "forward solve: no kernel");
    const KernelCache& K = *p.kernel;
    require_same_grid(K.grid(), p.rho0.grid(), "forward solve initial data");
    Trajectory rho(K.grid(), p.t0, p.T, p.steps);
    const double dt = rho.dt();
    check_step(K, dt, opt.enforce_budget, "forward solve");
    const auto need = static_cast<std::size_t>(p.steps) + 1;
    const bool has_field = p.drift && !p.drift->field.empty();
    const bool has_const = p.drift && !p.drift->constant.empty();
    if (has_field) require(p.drift->field.size() == need, "forward solve: drift slices");
    if (has_const) require(p.drift->constant.size() == need, "forward solve: drift slices");
    if (p.flux) require(p.flux->size() == need, "forward solve: source slices");
    if (p.smoothed) p.smoothed->assign(need, p.rho0);

    const double mass0 = p.rho0.integral();
    double worst_negative = 0.0;
    rho[0] = p.rho0;
    for (int k = 0; k < p.steps; ++k) {
        const Vec2 a = has_const ? p.drift->constant[static_cast<std::size_t>(k + 1)] : Vec2{0.0, 0.0};
        const Field q = K.step_shifted(rho[k], true, a);
        Field next = q;
        if (has_field) {
            const VectorField& b = p.drift->field[static_cast<std::size_t>(k + 1)];
            VectorField flow(b.size());
            for (std::size_t i = 0; i < b.size(); ++i) flow[i] = pointwise(b[i], q);
            next = axpy(next, dt, divergence(flow));
        }
        if (p.flux) next = axpy(next, dt, divergence((*p.flux)[static_cast<std::size_t>(k + 1)]));
        if (!next.all_finite())
            throw DivergenceError("forward solve: non-finite density at slice " + std::to_string(k + 1), k);
        if (!p.flux) {
            const double drift = std::abs(next.integral() - mass0);
            if (drift > opt.mass_tol * std::max(1.0, std::abs(mass0)))
                throw Error(ErrorKind::instability, "forward solve: mass drift " + std::to_string(drift) +
                                                        " at slice " + std::to_string(k + 1) +
                                                        "; reduce dt");
        }
        if (next.max() > 0.0) worst_negative = std::min(worst_negative, next.min() / next.max());
        if (p.smoothed) (*p.smoothed)[static_cast<std::size_t>(k + 1)] = q;
        rho[k + 1] = std::move(next);
    }
    if (worst_negative < 0.0)
        rho.notes.push_back("largest relative undershoot " + std::to_string(worst_negative));
    return rho;
}

Trajectory solve_fp(const KernelCache& kernel, const Drift& b, const Field& rho0, const VectorTrajectory* c,
                    double t0, double T, int steps, const FpOptions& opt) {
    ForwardProblem p;
    p.kernel = &kernel;
    p.drift = b.empty() ? nullptr : &b;
    p.flux = c;
    p.rho0 = rho0;
    p.t0 = t0;
    p.T = T;
    p.steps = steps;
    return solve_forward(p, opt);
}

double weak_residual(const KernelCache& kernel, const Trajectory& rho, const Drift* b,
                     const VectorTrajectory* c, const Field& phi, int k) {
    require(k >= 0 && k <= rho.steps, "weak_residual: slice out of range");
    const Field Lphi = kernel.generator(phi);
    const VectorField Dphi = gradient(phi);
    auto integrand = [&](int j) {
        Field w = Lphi;
        if (b && !b->constant.empty()) {
            const Vec2 v = b->constant[static_cast<std::size_t>(j)];
            for (std::size_t a = 0; a < Dphi.size(); ++a) w = axpy(w, -v[a], Dphi[a]);
        }
        if (b && !b->field.empty()) w -= dot(b->field[static_cast<std::size_t>(j)], Dphi);
        double v = inner(w, rho[j]);
        if (c) {
            const VectorField& cj = (*c)[static_cast<std::size_t>(j)];
            for (std::size_t a = 0; a < Dphi.size(); ++a) v -= inner(Dphi[a], cj[a]);
        }
        return v;
    };
    double quad = 0.0;
    const double dt = rho.dt();
    for (int j = 0; j < k; ++j) quad += 0.5 * dt * (integrand(j) + integrand(j + 1));
    return std::abs(inner(phi, rho[k]) - inner(phi, rho[0]) - quad);
}

double generator_bound(const LevyTriplet& t, const TightnessFn& psi) {
    const double g = psi.grad_bound;
    const double h = psi.hess_bound;
    double rate = std::hypot(t.drift[0], t.drift[1]) * g;
    rate += (t.diffusion[0][0] + (t.dims == 2 ? t.diffusion[1][1] : 0.0)) * h;
    if (!t.jumps.empty()) {
        const auto jm = jump_moments(t, [](double r) { return tightness_profile(r) + kSubadditivitySlack; });
        rate += 0.5 * h * jm.small_second_moment + jm.tail_psi;
    }
    return rate;
}

TightnessReport tightness_report(const Trajectory& m, const TightnessFn& psi, double generator_rate,
                                 double drift_sup) {
    TightnessReport r;
    r.rate = generator_rate + psi.grad_bound * drift_sup;
    for (int k = 0; k <= m.steps; ++k) {
        r.series.push_back(inner(psi.psi, m[k]));
        r.bound.push_back(r.series.front() + (m.time(k) - m.t0) * r.rate);
        if (r.series.back() > r.bound.back() + 1e-10) r.pass = false;
    }
    return r;
}

}  // namespace lmfg
