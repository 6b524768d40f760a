#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lmfg/field_io.hpp"
#include "lmfg/fokker_planck.hpp"
#include "lmfg/hjb.hpp"
#include "lmfg/linearized.hpp"
#include "lmfg/master.hpp"
#include "lmfg/mfg.hpp"
#include "lmfg/spectral.hpp"

namespace lmfg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const Verdict& v) {
    return json{{"name", v.name}, {"value", v.value}, {"tolerance", v.tolerance}, {"pass", v.pass}, {"anchor", v.anchor}};
}

bool RunReport::all_pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::divergence:
        case ErrorKind::instability:
        case ErrorKind::quadrature:
            return 3;
        case ErrorKind::budget:
            return 4;
        default:
            return 2;
    }
}

std::size_t nearest_node(const Grid& g, const Vec2& x) {
    int idx[2] = {0, 0};
    for (int a = 0; a < g.dims(); ++a) {
        const long j = std::lround((x[a] + g.half_width(a)) / g.dx(a));
        idx[a] = static_cast<int>(((j % g.n(a)) + g.n(a)) % g.n(a));
    }
    return g.index(idx[0], idx[1]);
}

namespace {

class Csv {
public:
    Csv(const fs::path& path, const std::vector<std::string>& header) : os_(path) {
        require(static_cast<bool>(os_), "cannot write " + path.string(), ErrorKind::config);
        os_ << std::setprecision(17);
        for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
        os_ << '\n';
    }
    void row(const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) os_ << (i ? "," : "") << v[i];
        os_ << '\n';
    }

private:
    std::ofstream os_;
};

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "cannot write " + path.string(), ErrorKind::config);
    os << j.dump(2) << '\n';
}

bool looks_like_warning(const std::string& note) {
    for (const char* key : {"warning", "undershoot", "not converged", "damping halved", "did not"})
        if (note.find(key) != std::string::npos) return true;
    return false;
}

void absorb_notes(RunReport& r, const std::vector<std::string>& notes) {
    for (const auto& n : notes) (looks_like_warning(n) ? r.warnings : r.notes).push_back(n);
}

std::vector<Vec2> points(const std::vector<double>& flat, int dims) {
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < flat.size(); i += static_cast<std::size_t>(dims))
        out.push_back({flat[i], dims == 2 ? flat[i + 1] : 0.0});
    return out;
}

MfgProblem mfg_problem(const RunConfig& c, const Setup& s) {
    MfgProblem p;
    p.kernel = s.kernel;
    p.H = s.H;
    p.F = s.F;
    p.G = s.G;
    p.m0 = *s.m0;
    p.t0 = c.time.t0;
    p.T = c.time.T;
    p.steps = c.time.steps;
    p.iteration = {c.solver.damping, c.solver.max_iters, c.solver.tol_d0, c.solver.patience};
    p.enforce_budget = c.solver.enforce_budget;
    p.gap_metric.max_cells = c.solver.d0_max_cells;
    return p;
}

LinOptions linear_options(const RunConfig& c) {
    LinOptions o;
    o.tol = c.solver.linear_tol;
    o.max_iters = c.solver.linear_max_iters;
    o.enforce_budget = c.solver.enforce_budget;
    o.gap_metric.max_cells = c.solver.d0_max_cells;
    return o;
}

// Mass, positivity, boundary shell and tightness of a density flow.
void flow_verdicts(RunReport& r, const Trajectory& m, const Setup& s, double drift_sup, const fs::path& csv) {
    const TightnessFn psi = make_tightness(m.grid);
    Csv out(csv, {"k", "t", "mass", "min", "psi_moment", "boundary_mass"});
    double mass_defect = 0.0, undershoot = 0.0, shell = 0.0;
    for (int k = 0; k <= m.steps; ++k) {
        const Field& f = m[k];
        const double mass = f.integral();
        mass_defect = std::max(mass_defect, std::abs(mass - m[0].integral()));
        undershoot = std::max(undershoot, -f.min() / std::max(f.max(), 1e-300));
        shell = std::max(shell, boundary_mass(f));
        out.row({static_cast<double>(k), m.time(k), mass, f.min(), inner(psi.psi, f), boundary_mass(f)});
    }
    const TightnessReport tr = tightness_report(m, psi, generator_bound(s.op, psi), drift_sup);
    r.verdicts.push_back({"mass conservation", mass_defect, 1e-10, mass_defect <= 1e-10,
                          "Fokker-Planck flow stays a probability density"});
    r.verdicts.push_back({"positivity (relative undershoot)", undershoot, 1e-7, undershoot <= 1e-7,
                          "Fokker-Planck flow stays a probability density"});
    // Heavy stable tails keep the outer shell above the threshold on any modest box; flag, don't fail.
    r.notes.push_back("max boundary shell mass " + std::to_string(shell));
    if (!(shell < 1e-6))
        r.warnings.push_back("boundary shell mass " + std::to_string(shell) + " >= 1e-6: periodic wrap-around not negligible");
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.series.size(); ++k) worst = std::max(worst, tr.series[k] - tr.bound[k]);
    r.verdicts.push_back({"tightness moment below its bound", worst, 0.0, tr.pass,
                          "tightness-measuring function bound for measure flows"});
}

RunReport run_kernel(const RunConfig& c, const Setup& s, const fs::path& out) {
    RunReport r;
    json reports = json::array();
    Csv csv(out / "kernel_norms.csv", {"beta", "t", "norm", "local_slope"});
    for (int b : c.kernel.betas) {
        const KReport k = verify_K_assumption(s.op, s.grid, {b, 0}, c.kernel.times);
        const bool pass = std::abs(k.slope - k.expected_slope) <= c.kernel.slope_tol;
        reports.push_back({{"alpha", k.alpha}, {"beta", b}, {"K_hat", k.K_hat}, {"slope", k.slope},
                           {"expected_slope", k.expected_slope}, {"pass", pass}});
        for (std::size_t i = 0; i < k.times.size(); ++i)
            csv.row({static_cast<double>(b), k.times[i], k.norms[i], i ? k.local_slopes[i - 1] : NAN});
        r.verdicts.push_back({"slope beta=" + std::to_string(b), k.slope, c.kernel.slope_tol, pass,
                              "kernel derivative bound ||D^beta K_t||_1 <= K t^(-|beta|/alpha)"});
    }
    write_json(out / "kernel_report.json", reports);
    for (double t : c.kernel.emit_times) {
        const Field K = s.kernel->kernel_field(t);
        std::ostringstream name;
        name << "kernel_t" << t << ".bin";
        write_field_file((out / name.str()).string(), K);
        const double defect = std::abs(K.integral() - 1.0);
        r.verdicts.push_back({"kernel mass at t=" + std::to_string(t), defect, 1e-10, defect <= 1e-10,
                              "heat kernel is a probability density"});
    }
    return r;
}

RunReport run_hjb(const RunConfig& c, const Setup& s, const fs::path& out) {
    RunReport r;
    const Grid& g = s.grid;
    // Without m0 only m-independent couplings reach this point; they ignore the density.
    const Field density = s.m0 ? s.m0->density() : Field(g);
    const Field terminal = !c.hjb.terminal.empty() ? parse_kernel(c.hjb.terminal, g) : eval_F(s.G, density);
    std::optional<Trajectory> source;
    if (!s.F.is_zero()) {
        source = Trajectory(g, c.time.t0, c.time.T, c.time.steps);
        const Field f = eval_F(s.F, density);
        for (int k = 0; k <= c.time.steps; ++k) (*source)[k] = f;
    }
    HjbOptions ho;
    ho.picard_sweeps = c.solver.picard_sweeps;
    ho.enforce_budget = c.solver.enforce_budget;
    const Trajectory u = solve_hjb(*s.kernel, s.H, source ? &*source : nullptr, terminal, c.time.t0, c.time.T,
                                   c.time.steps, ho);
    write_fields_file((out / "u.bin").string(), u.slices);
    const GradientReport gr = gradient_bound_report(u);
    Csv csv(out / "hjb_summary.csv", {"k", "t", "sup_u", "sup_Du", "sup_D2u"});
    for (int k = 0; k <= u.steps; ++k) {
        const auto i = static_cast<std::size_t>(k);
        csv.row({static_cast<double>(k), u.time(k), gr.sup_u[i], gr.sup_Du[i], gr.sup_D2u[i]});
    }
    absorb_notes(r, u.notes);
    const bool finite = std::all_of(u.slices.begin(), u.slices.end(), [](const Field& f) { return f.all_finite(); });
    r.verdicts.push_back({"bounded C1 solution", gr.sup_C1, 0.0, finite && std::isfinite(gr.sup_C1),
                          "viscous Hamilton-Jacobi well-posedness (bounded C1 mild solution)"});
    return r;
}

RunReport run_fp(const RunConfig& c, const Setup& s, const fs::path& out) {
    RunReport r;
    const Drift b = Drift::uniform(c.fp.drift, c.time.steps);
    FpOptions fo;
    fo.enforce_budget = c.solver.enforce_budget;
    const Trajectory m = solve_fp(*s.kernel, b, s.m0->density(), nullptr, c.time.t0, c.time.T, c.time.steps, fo);
    write_fields_file((out / "m.bin").string(), m.slices);
    absorb_notes(r, m.notes);
    flow_verdicts(r, m, s, std::hypot(c.fp.drift[0], c.fp.drift[1]), out / "fp_series.csv");
    return r;
}

RunReport run_mfg(const RunConfig& c, const Setup& s, const fs::path& out) {
    RunReport r;
    const MfgProblem p = mfg_problem(c, s);
    const MfgSolution sol = solve_mfg(p);
    write_fields_file((out / "u.bin").string(), sol.u.slices);
    write_fields_file((out / "m.bin").string(), sol.m.slices);
    {
        Csv csv(out / "gap_history.csv", {"iteration", "gap"});
        for (std::size_t i = 0; i < sol.gap_history.size(); ++i)
            csv.row({static_cast<double>(i + 1), sol.gap_history[i]});
    }
    absorb_notes(r, sol.notes);
    absorb_notes(r, sol.m.notes);
    const double gap = sol.gap_history.empty() ? 0.0 : sol.gap_history[static_cast<std::size_t>(sol.iterations - 1)];
    r.verdicts.push_back({"fixed-point gap sup_t d0", gap, c.solver.tol_d0, sol.converged,
                          "existence of MFG solutions by fixed point"});
    r.verdicts.push_back({"outer iterations", static_cast<double>(sol.iterations),
                          static_cast<double>(c.solver.max_iters), sol.iterations <= c.solver.max_iters && sol.converged,
                          "existence of MFG solutions by fixed point"});
    flow_verdicts(r, sol.m, s, optimal_drift(p.H, sol.u).sup_norm(), out / "m_series.csv");
    write_json(out / "diagnostics.json", json{{"iterations", sol.iterations},
                                              {"converged", sol.converged},
                                              {"final_damping", sol.final_damping},
                                              {"gap_history", sol.gap_history},
                                              {"notes", sol.notes}});
    return r;
}

RunReport run_linsys(const RunConfig& c, const Setup& s, const fs::path& out) {
    RunReport r;
    const MfgProblem p = mfg_problem(c, s);
    const MfgSolution sol = solve_mfg(p);
    absorb_notes(r, sol.notes);
    r.verdicts.push_back({"base MFG converged", sol.gap_history.back(), c.solver.tol_d0, sol.converged,
                          "existence of MFG solutions by fixed point"});
    const LinSystem sys = linearize(p, sol);
    const LinOptions lo = linear_options(c);
    std::vector<std::size_t> ys;
    json coords = json::array();
    for (const Vec2& y : points(c.linsys.y, s.grid.dims())) {
        ys.push_back(nearest_node(s.grid, y));
        const Vec2 at = s.grid.point(ys.back());
        coords.push_back(s.grid.dims() == 1 ? json(at[0]) : json{at[0], at[1]});
    }
    const Eigen::MatrixXd J = j_field_batch(sys, ys, lo);
    std::vector<Field> columns;
    for (Eigen::Index j = 0; j < J.cols(); ++j) {
        Field f(s.grid);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = J(static_cast<Eigen::Index>(i), j);
        columns.push_back(std::move(f));
    }
    write_fields_file((out / "J.bin").string(), columns);
    write_json(out / "J_axes.json",
               json{{"rows", "x: every node of the field grid, row-major"},
                    {"columns", "one field record per y node, in this order"},
                    {"y_nodes", ys},
                    {"y_coords", coords},
                    {"t0", c.time.t0},
                    {"mollification_width", 2.0 * std::max(s.grid.dx(0), s.grid.dims() == 2 ? s.grid.dx(1) : 0.0)}});

    LinSystem point = sys;
    point.rho0 = mollified_point_mass(s.grid, ys.front());
    const LinSolution ls = solve_linear_system(point, lo);
    absorb_notes(r, ls.notes);
    const DualityReport d = duality_identity(point, ls);
    r.verdicts.push_back({"duality identity relative gap", d.relative_gap, c.linsys.duality_tol,
                          d.relative_gap <= c.linsys.duality_tol, "linear forward-backward system duality"});
    r.verdicts.push_back({"F quadratic term", d.coupling_F, -1e-8, d.coupling_F >= -1e-8,
                          "monotonicity of the coupling derivative (M2)"});
    r.verdicts.push_back({"G quadratic term", d.coupling_G, -1e-8, d.coupling_G >= -1e-8,
                          "monotonicity of the coupling derivative (M2)"});
    return r;
}

RunReport run_master(const RunConfig& c, const Setup& s, const fs::path& out) {
    RunReport r;
    MasterScenario sc;
    sc.kernel = s.kernel;
    sc.H = s.H;
    sc.F = s.F;
    sc.G = s.G;
    sc.T = c.time.T;
    sc.iteration = {c.solver.damping, c.solver.max_iters, c.solver.tol_d0, c.solver.patience};
    sc.linear = linear_options(c);
    sc.gap_metric.max_cells = c.solver.d0_max_cells;
    sc.enforce_budget = c.solver.enforce_budget;
    sc.max_y_per_axis = c.solver.max_y_per_axis;
    MasterField U(sc);
    const double t0 = c.master.t0.value_or(c.time.t0);
    const Measure& m0 = *s.m0;

    std::vector<std::size_t> samples;
    for (const Vec2& x : points(c.master.samples, s.grid.dims())) samples.push_back(nearest_node(s.grid, x));
    const ResidualReport res = master_residual(U, t0, m0, samples);
    absorb_notes(r, res.notes);
    {
        Csv csv(out / "master_residual.csv",
                {"x0", "x1", "residual", "dt_U", "L_U", "H", "L_y_term", "transport_term", "F"});
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const Vec2 x = s.grid.point(samples[i]);
            if (res.terminal)
                csv.row({x[0], x[1], res.residual[i], NAN, NAN, NAN, NAN, NAN, NAN});
            else
                csv.row({x[0], x[1], res.residual[i], res.dt_U[i], res.L_U[i], res.H_term[i], res.L_y_term[i],
                         res.transport_term[i], res.F_term[i]});
        }
    }
    if (res.terminal)
        r.verdicts.push_back({"terminal identity U = G", res.max_abs, 1e-8, res.max_abs <= 1e-8,
                              "terminal condition of the master equation"});
    else
        r.verdicts.push_back({"master residual at samples", res.max_abs, c.master.residual_tol,
                              res.max_abs <= c.master.residual_tol, "master equation residual"});

    if (c.master.m0_prime) {
        const Measure mp = c.master.m0_prime->make(s.grid);
        const DerivativeTable d = derivative_check(U, t0, m0, mp, c.master.h);
        absorb_notes(r, d.notes);
        Csv csv(out / "derivative_table.csv", {"h", "defect"});
        for (std::size_t i = 0; i < d.h.size(); ++i) csv.row({d.h[i], d.defect[i]});
        r.verdicts.push_back({"derivative defect slope", d.flat ? INFINITY : d.slope, 1.2, d.pass,
                              "J-field identifies the measure derivative (superlinear defect)"});
        if (c.master.J_invariance) {
            DerivativeOptions ex;
            ex.explicit_J = true;
            const DerivativeTable a = derivative_check(U, t0, m0, mp, c.master.h, ex);
            ex.J_shift = 1.0;
            const DerivativeTable b = derivative_check(U, t0, m0, mp, c.master.h, ex);
            double worst = 0.0;
            for (std::size_t i = 0; i < a.defect.size(); ++i) worst = std::max(worst, std::abs(a.defect[i] - b.defect[i]));
            r.verdicts.push_back({"J -> J + 1 invariance", worst, 1e-10, worst <= 1e-10,
                                  "measure derivative defined up to an additive constant"});
        }
    }
    if (c.master.restart) {
        const FlowReport f = flow_consistency(U, t0, m0, *c.master.restart);
        absorb_notes(r, f.notes);
        r.verdicts.push_back({"flow consistency gap", f.gap, f.tolerance, f.pass,
                              "uniqueness for the master equation via restarted MFG flows"});
    }
    if (!c.master.stability_h.empty()) {
        const TimeStabilityReport ts = t0_stability(U, t0, m0, c.master.stability_h);
        Csv csv(out / "t0_stability.csv", {"h", "diff", "constant"});
        for (std::size_t i = 0; i < ts.h.size(); ++i) csv.row({ts.h[i], ts.diff[i], ts.constant[i]});
        const double ratio = *std::max_element(ts.constant.begin(), ts.constant.end()) / ts.constant.front();
        r.verdicts.push_back({"t0 stability constant ratio", ratio, 1.1, ts.pass,
                              "Holder-1/2 stability of U in the initial time"});
    }
    return r;
}

RunReport run_check(const RunConfig& c, const Setup& s, const fs::path& out) {
    RunReport r;
    const Coupling cp = c.check.coupling
                            ? parse_coupling(c.check.coupling->type, c.check.coupling->phi, c.check.coupling->Phi, s.grid)
                            : s.F;
    const Measure m = c.check.measure ? c.check.measure->make(s.grid)
                      : s.m0          ? *s.m0
                                      : mollified_delta(s.grid, {0.0, 0.0}, 2.0 * s.grid.dx(0));
    const M1Report m1 = check_M1(cp, s.grid, c.check.trials, c.seed);
    const auto norm =
        c.check.normalization == "zero_mean" ? DerivativeNormalization::zero_mean : DerivativeNormalization::raw;
    const M2Report m2 = check_M2(cp, m.density(), norm);
    r.verdicts.push_back({"M1", m1.min_value, -1e-10, m1.pass, "Lasry-Lions monotonicity (M1)"});
    r.verdicts.push_back({"M2", m2.min_eig, -1e-10, m2.pass, "monotonicity of the coupling derivative (M2)"});
    write_json(out / "check.json", json{{"coupling", cp.name},
                                        {"normalization", c.check.normalization},
                                        {"M1", {{"min", m1.min_value}, {"max_abs", m1.max_abs}, {"values", m1.values}}},
                                        {"M2", {{"min_eig", m2.min_eig}, {"max_eig", m2.max_eig}}}});
    return r;
}

}  // namespace

Setup prepare(const RunConfig& c, const std::string& cmd) {
    Setup s;
    s.grid = c.grid.make();
    s.op = parse_operator(c.operator_spec, c.grid.dims);
    validate(s.op);
    const double dt = cmd == "kernel" || cmd == "check" ? 0.01 : c.time.dt();
    s.kernel = std::make_shared<KernelCache>(s.op, s.grid, dt);
    s.H = parse_hamiltonian(c.hamiltonian);
    s.F = parse_coupling(c.F.type, c.F.phi, c.F.Phi, s.grid);
    s.G = parse_coupling(c.G.type, c.G.phi, c.G.Phi, s.grid);
    if (c.m0) s.m0 = c.m0->make(s.grid);
    return s;
}

RunReport run_command(const std::string& cmd, const RunConfig& c, const Setup& s, const fs::path& out) {
    if (cmd == "kernel") return run_kernel(c, s, out);
    if (cmd == "hjb") return run_hjb(c, s, out);
    if (cmd == "fp") return run_fp(c, s, out);
    if (cmd == "mfg") return run_mfg(c, s, out);
    if (cmd == "linsys") return run_linsys(c, s, out);
    if (cmd == "master") return run_master(c, s, out);
    if (cmd == "check") return run_check(c, s, out);
    throw Error(ErrorKind::config, "unknown subcommand '" + cmd + "'");
}

}  // namespace lmfg::cli
