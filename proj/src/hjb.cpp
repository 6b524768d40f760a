#include "lmfg/hjb.hpp"

#include <cmath>
#include <string>

#include "lmfg/errors.hpp"
#include "lmfg/spectral.hpp"

namespace lmfg {

double dt_budget(const KernelCache& kernel) {
    return 0.5 * std::pow(kernel.grid().dx_min(), kernel.alpha());
}

void check_step(const KernelCache& kernel, double dt, bool enforce, const char* where) {
    require(std::abs(kernel.dt() - dt) <= 1e-12 * dt,
            std::string(where) + ": kernel cache step " + std::to_string(kernel.dt()) +
                " does not match dt " + std::to_string(dt));
    const double dmax = dt_budget(kernel);
    if (enforce && dt > dmax * (1 + 1e-12))
        throw Error(ErrorKind::budget, std::string(where) + ": dt = " + std::to_string(dt) +
                                           " exceeds the step budget 0.5 dx_min^alpha = " +
                                           std::to_string(dmax));
}

namespace {

// H(v, Dv) + V_k . Dv on slice k; empty when the step is purely linear-exact.
Field explicit_part(const BackwardProblem& p, int k, const Field& v, bool& any) {
    const bool field = p.drift && !p.drift->field.empty();
    any = p.H != nullptr || field;
    if (!any) return {};
    const VectorField Dv = gradient(v);
    Field out(v.grid());
    if (p.H) out = eval_H(*p.H, v, Dv);
    if (field) out += dot(p.drift->field[static_cast<std::size_t>(k)], Dv);
    return out;
}

Vec2 back_shift(const BackwardProblem& p, int k) {
    if (!p.drift || p.drift->constant.empty()) return {0.0, 0.0};
    const Vec2 c = p.drift->constant[static_cast<std::size_t>(k)];
    return {-c[0], -c[1]};
}

void guard(const Field& v, int k, double limit, const char* where) {
    if (!v.all_finite() || v.max_abs() > limit)
        throw DivergenceError(std::string(where) + ": solution blew up at slice " + std::to_string(k), k + 1);
}

}  // namespace

Trajectory solve_backward(const BackwardProblem& p, const HjbOptions& opt) {
    require(p.kernel != nullptr, "backward solve: no kernel");
    const KernelCache& K = *p.kernel;
    require_same_grid(K.grid(), p.terminal.grid(), "backward solve terminal");
    Trajectory u(K.grid(), p.t0, p.T, p.steps);
    const double dt = u.dt();
    check_step(K, dt, opt.enforce_budget, "backward solve");
    if (p.source) {
        require(p.source->slices.size() == static_cast<std::size_t>(p.steps) + 1, "backward solve: source slices");
        require_same_grid(K.grid(), p.source->grid, "backward solve source");
    }
    if (p.drift) {
        const auto need = static_cast<std::size_t>(p.steps) + 1;
        require(p.drift->constant.empty() || p.drift->constant.size() == need, "backward solve: drift slices");
        require(p.drift->field.empty() || p.drift->field.size() == need, "backward solve: drift slices");
    }
    if (spectral_tail(p.terminal) > 1e-8)
        u.notes.push_back("terminal data under-resolved: spectral tail " +
                          std::to_string(spectral_tail(p.terminal)));
    const double limit = opt.blowup * std::max(1.0, p.terminal.max_abs());

    u[p.steps] = p.terminal;
    for (int k = p.steps - 1; k >= 0; --k) {
        Field w = u[k + 1];
        bool any = false;
        const Field e = explicit_part(p, k + 1, w, any);
        if (any) w = axpy(w, -dt, e);
        Field next = K.step_shifted(w, false, back_shift(p, k + 1));
        if (p.source) next = axpy(next, dt, (*p.source)[k]);
        guard(next, k, limit, "backward solve");
        u[k] = std::move(next);
    }

    for (int sweep = 0; sweep < opt.picard_sweeps; ++sweep) {
        std::vector<Field> nl(static_cast<std::size_t>(p.steps) + 1);
        bool any = false;
        for (int k = 0; k <= p.steps; ++k) nl[static_cast<std::size_t>(k)] = explicit_part(p, k, u[k], any);
        if (!any) break;
        Trajectory v(K.grid(), p.t0, p.T, p.steps);
        v[p.steps] = p.terminal;
        for (int k = p.steps - 1; k >= 0; --k) {
            Field w = axpy(v[k + 1], -0.5 * dt, nl[static_cast<std::size_t>(k + 1)]);
            if (p.source) w = axpy(w, 0.5 * dt, (*p.source)[k + 1]);
            Field next = K.step_shifted(w, false, back_shift(p, k + 1));
            next = axpy(next, -0.5 * dt, nl[static_cast<std::size_t>(k)]);
            if (p.source) next = axpy(next, 0.5 * dt, (*p.source)[k]);
            guard(next, k, limit, "backward solve");
            v[k] = std::move(next);
        }
        v.notes = u.notes;
        u = std::move(v);
    }
    return u;
}

Trajectory solve_hjb(const KernelCache& kernel, const Hamiltonian& H, const Trajectory* f, const Field& g,
                     double t0, double T, int steps, const HjbOptions& opt) {
    BackwardProblem p;
    p.kernel = &kernel;
    p.source = f;
    p.terminal = g;
    p.t0 = t0;
    p.T = T;
    p.steps = steps;
    Drift transport;
    if (H.kind == Hamiltonian::Kind::linear) {
        transport = Drift::uniform(H.velocity, steps);
        p.drift = &transport;
    } else
        p.H = &H;
    return solve_backward(p, opt);
}

GradientReport gradient_bound_report(const Trajectory& u) {
    GradientReport r;
    const int d = u.grid.dims();
    for (const auto& s : u.slices) {
        double n1 = 0.0, n2 = 0.0, n3 = 0.0;
        for (int a = 0; a < d; ++a) {
            MultiIndex b{0, 0};
            b[a] = 1;
            n1 = std::max(n1, spectral_derivative(s, b).max_abs());
            for (int c = 0; c < d; ++c) {
                MultiIndex b2 = b;
                b2[c] += 1;
                n2 = std::max(n2, spectral_derivative(s, b2).max_abs());
                for (int e = 0; e < d; ++e) {
                    MultiIndex b3 = b2;
                    b3[e] += 1;
                    n3 = std::max(n3, spectral_derivative(s, b3).max_abs());
                }
            }
        }
        r.sup_u.push_back(s.max_abs());
        r.sup_Du.push_back(n1);
        r.sup_D2u.push_back(n2);
        r.sup_D3u.push_back(n3);
        r.sup_C1 = std::max(r.sup_C1, s.max_abs() + n1);
    }
    return r;
}

}  // namespace lmfg
