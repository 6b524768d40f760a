#include "lmfg/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmfg/errors.hpp"
#include "lmfg/fokker_planck.hpp"
#include "lmfg/hjb.hpp"
#include "lmfg/parallel.hpp"
#include "lmfg/spectral.hpp"

namespace lmfg {

namespace {

constexpr double kEllipticTol = 1e-10;

double dx_max(const Grid& g) { return g.dims() == 2 ? std::max(g.dx(0), g.dx(1)) : g.dx(0); }

void check_slices(std::size_t have, std::size_t need, const char* what) {
    require(have == need, std::string("linear system: ") + what + " needs one slice per time level");
}

}  // namespace

void LinSystem::validate() const {
    require(kernel != nullptr, "linear system: no kernel cache");
    require(T > t0 && steps >= 1, "linear system: bad time grid");
    require(std::abs(kernel->dt() - (T - t0) / steps) <= 1e-12 * kernel->dt(),
            "linear system: kernel cache step does not match (T - t0) / steps");
    const auto need = static_cast<std::size_t>(steps) + 1;
    const Grid& g = grid();
    if (!V.field.empty()) check_slices(V.field.size(), need, "V");
    if (!V.constant.empty()) check_slices(V.constant.size(), need, "V");
    check_slices(Gamma.size(), need, "Gamma");
    check_slices(m.size(), need, "m");
    check_slices(m_flux.size(), need, "m_flux");
    if (b) check_slices(b->slices.size(), need, "b");
    if (c) check_slices(c->size(), need, "c");
    require_same_grid(g, z_T.grid(), "linear system terminal data");
    require_same_grid(g, rho0.grid(), "linear system initial data");
    require(rho0.all_finite(), "linear system: rho0 not finite");
    require(gamma_bound >= 1.0, "linear system: ellipticity constant must be >= 1");
    const double lo = 1.0 / gamma_bound - kEllipticTol;
    const double hi = gamma_bound + kEllipticTol;
    for (std::size_t k = 0; k < Gamma.size(); ++k) {
        const SymMatField& G = Gamma[k];
        for (std::size_t i = 0; i < g.size(); ++i) {
            double e0 = G.a00[i], e1 = G.a00[i];
            if (g.dims() == 2) {
                const double mean = 0.5 * (G.a00[i] + G.a11[i]);
                const double rad = std::hypot(0.5 * (G.a00[i] - G.a11[i]), G.a01[i]);
                e0 = mean - rad;
                e1 = mean + rad;
            }
            if (e0 < lo || e1 > hi)
                throw Error(ErrorKind::invalid_argument,
                            "linear system: Gamma violates the elliptic bound at slice " + std::to_string(k) +
                                ", node " + std::to_string(i) + " (eigenvalues " + std::to_string(e0) + ", " +
                                std::to_string(e1) + ")");
        }
    }
}

LinSystem linearize(const MfgProblem& p, const MfgSolution& s) {
    if (p.H.u_dependent())
        throw Error(ErrorKind::unsupported, "linearize: u-dependent Hamiltonians are not linearized");
    LinSystem sys;
    sys.kernel = p.kernel;
    sys.t0 = p.t0;
    sys.T = p.T;
    sys.steps = p.steps;
    sys.V = optimal_drift(p.H, s.u);
    for (const auto& u : s.u.slices) sys.Gamma.push_back(eval_DppH(p.H, u, gradient(u)));
    sys.m = s.m.slices;
    sys.m_flux = s.m_flux;
    sys.dF = p.F;
    sys.dG = p.G;
    sys.z_T = Field(p.kernel->grid());
    sys.rho0 = Field(p.kernel->grid());
    sys.gamma_bound = p.H.convexity_c1;
    return sys;
}

namespace {

struct Stepper {
    const LinSystem& sys;
    const LinOptions& opt;

    Trajectory backward(const Trajectory& rho) const {
        const Grid& g = sys.grid();
        const bool has_F = !sys.dF.ignores_m();
        Trajectory src;
        const bool has_src = has_F || sys.b.has_value();
        if (has_src) {
            src = Trajectory(g, sys.t0, sys.T, sys.steps);
            for (int k = 0; k <= sys.steps; ++k) {
                Field s = sys.b ? (*sys.b)[k] : Field(g);
                if (has_F) s += pair_dmF(sys.dF, sys.m[static_cast<std::size_t>(k)], rho[k]);
                src[k] = std::move(s);
            }
        }
        BackwardProblem bp;
        bp.kernel = sys.kernel.get();
        bp.drift = sys.V.empty() ? nullptr : &sys.V;
        bp.source = has_src ? &src : nullptr;
        bp.terminal = sys.z_T;
        if (!sys.dG.ignores_m()) bp.terminal += pair_dmF(sys.dG, sys.m.back(), rho.back());
        bp.t0 = sys.t0;
        bp.T = sys.T;
        bp.steps = sys.steps;
        HjbOptions ho;
        ho.picard_sweeps = 0;
        ho.enforce_budget = opt.enforce_budget;
        return solve_backward(bp, ho);
    }

    Trajectory forward(const Trajectory* z) const {
        VectorTrajectory flux;
        const bool has_flux = z != nullptr || sys.c.has_value();
        if (has_flux) {
            const int d = sys.grid().dims();
            for (int k = 0; k <= sys.steps; ++k) {
                VectorField f = sys.c ? (*sys.c)[static_cast<std::size_t>(k)] : VectorField(d, Field(sys.grid()));
                if (z) {
                    const VectorField q = sys.Gamma[static_cast<std::size_t>(k)].apply(gradient((*z)[k]));
                    for (int a = 0; a < d; ++a) f[a] += pointwise(q[a], sys.m_flux[static_cast<std::size_t>(k)]);
                }
                flux.push_back(std::move(f));
            }
        }
        ForwardProblem fp;
        fp.kernel = sys.kernel.get();
        fp.drift = sys.V.empty() ? nullptr : &sys.V;
        fp.flux = has_flux ? &flux : nullptr;
        fp.rho0 = sys.rho0;
        fp.t0 = sys.t0;
        fp.T = sys.T;
        fp.steps = sys.steps;
        FpOptions fo;
        fo.enforce_budget = opt.enforce_budget;
        // Signed data: mass is whatever rho0 carries, so only the flux-free case is monitored.
        fo.mass_tol = 1e-6;
        return solve_forward(fp, fo);
    }
};

double sup_d0_norm(const Trajectory& a, const Trajectory& b, const D0Options& opt) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.slices.size(); ++k) s = std::max(s, d0_norm(a.slices[k] - b.slices[k], opt));
    return s;
}

}  // namespace

LinSolution solve_linear_system(const LinSystem& sys, const LinOptions& opt) {
    sys.validate();
    require(opt.damping > 0.0 && opt.damping <= 1.0, "linear system: damping must lie in (0, 1]");
    require(opt.max_iters >= 1 && opt.tol > 0.0, "linear system: bad iteration options");
    const Stepper step{sys, opt};
    const bool coupled = !sys.dF.ignores_m() || !sys.dG.ignores_m();

    LinSolution out;
    Trajectory rho = step.forward(nullptr);
    Trajectory z;
    for (int it = 1; it <= opt.max_iters; ++it) {
        z = step.backward(rho);
        out.iterations = it;
        if (opt.max_iters == 1 && coupled) {
            out.notes.push_back("first backward iterate only");
            break;
        }
        Trajectory next = step.forward(&z);
        if (!coupled) {
            // z ignores rho, so one backward and one forward solve are exact.
            rho = std::move(next);
            out.gap_history.push_back(0.0);
            out.converged = true;
            break;
        }
        const double gap = sup_d0_norm(next, rho, opt.gap_metric);
        out.gap_history.push_back(gap);
        if (gap < opt.tol) {
            rho = std::move(next);
            out.converged = true;
            break;
        }
        for (int k = 0; k <= sys.steps; ++k) {
            rho[k] *= 1.0 - opt.damping;
            rho[k] = axpy(rho[k], opt.damping, next[k]);
        }
    }
    if (!out.converged && opt.max_iters > 1)
        out.notes.push_back("alternation not converged in " + std::to_string(opt.max_iters) + " iterations");

    double M = sys.z_T.max_abs() + d0_norm(sys.rho0, opt.gap_metric);
    double sup_b = 0.0, sup_c = 0.0;
    if (sys.b)
        for (const auto& s : sys.b->slices) sup_b = std::max(sup_b, s.max_abs());
    if (sys.c)
        for (const auto& v : *sys.c) {
            double s = 0.0;
            for (const auto& comp : v) s += total_variation(comp);
            sup_c = std::max(sup_c, s);
        }
    M += sup_b + sup_c;
    double sz = 0.0, sr = 0.0;
    for (int k = 0; k <= sys.steps; ++k) {
        sz = std::max(sz, z[k].max_abs());
        sr = std::max(sr, d0_norm(rho[k], opt.gap_metric));
    }
    out.data_norm = M;
    out.apriori_ratio = M > 0.0 ? (sz + sr) / M : 0.0;
    out.z = std::move(z);
    out.rho = std::move(rho);
    return out;
}

DualityReport duality_identity(const LinSystem& sys, const LinSolution& sol) {
    const int N = sys.steps;
    const double dt = sys.kernel->dt();
    DualityReport r;
    double lhs = 0.0;
    double source = 0.0;
    double flux = 0.0;
    for (int k = 1; k <= N; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const VectorField Dz = gradient(sol.z[k]);
        const VectorField q = sys.Gamma[kk].apply(Dz);
        for (std::size_t a = 0; a < Dz.size(); ++a) {
            lhs += inner(Dz[a], pointwise(q[a], sys.m_flux[kk]));
            if (sys.c) flux += inner(Dz[a], (*sys.c)[kk][a]);
        }
    }
    double cF = 0.0;
    for (int k = 0; k < N; ++k) {
        if (sys.b) source += inner((*sys.b)[k], sol.rho[k]);
        if (!sys.dF.ignores_m())
            cF += inner(pair_dmF(sys.dF, sys.m[static_cast<std::size_t>(k)], sol.rho[k]), sol.rho[k]);
    }
    r.coupling_F = dt * cF;
    r.coupling_G = sys.dG.ignores_m() ? 0.0 : inner(pair_dmF(sys.dG, sys.m.back(), sol.rho[N]), sol.rho[N]);
    r.lhs = dt * lhs;
    r.rhs = inner(sol.z[0], sys.rho0) - inner(sys.z_T, sol.rho[N]) - dt * source - dt * flux - r.coupling_F -
            r.coupling_G;
    const double scale = std::max(std::abs(r.lhs), std::abs(r.rhs));
    r.relative_gap = scale > 0.0 ? std::abs(r.lhs - r.rhs) / scale : 0.0;
    r.pass = r.relative_gap <= 1e-4 && r.coupling_F >= -1e-8 && r.coupling_G >= -1e-8;
    return r;
}

Field mollified_point_mass(const Grid& grid, std::size_t y) {
    require(y < grid.size(), "point mass: node out of range");
    Field d(grid);
    d[y] = 1.0 / grid.cell_volume();
    return mollify_field(d, 2.0 * dx_max(grid));
}

namespace {

LinSystem point_system(const LinSystem& base, std::size_t y) {
    LinSystem s = base;
    s.rho0 = mollified_point_mass(base.grid(), y);
    s.b.reset();
    s.c.reset();
    s.z_T = Field(base.grid());
    return s;
}

}  // namespace

Field j_field(const LinSystem& base, std::size_t y, const LinOptions& opt) {
    try {
        return solve_linear_system(point_system(base, y), opt).z[0];
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " (J node y = " + std::to_string(y) + ")");
    }
}

Eigen::MatrixXd j_field_batch(const LinSystem& base, const std::vector<std::size_t>& ys, const LinOptions& opt) {
    base.validate();
    const std::size_t n = base.grid().size();
    Eigen::MatrixXd J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ys.size()));
    parallel_for(ys.size(), [&](std::size_t j) {
        const Field z = j_field(base, ys[j], opt);
        for (std::size_t i = 0; i < n; ++i) J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z[i];
    });
    return J;
}

}  // namespace lmfg
