#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lmfg/errors.hpp"
#include "lmfg/field_io.hpp"
#include "lmfg/levy.hpp"

namespace lmfg::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::config, "config " + path + ": " + what);
}

void only_keys(const json& o, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!o.is_object()) fail(path, "must be an object");
    for (const auto& [k, v] : o.items()) {
        (void)v;
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
            fail(path, "unknown key '" + k + "'");
    }
}

std::string sub(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const json& o, const std::string& path, const char* key, double def) {
    if (!o.contains(key)) return def;
    const json& v = o.at(key);
    if (!v.is_number()) fail(sub(path, key), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(sub(path, key), "must be finite");
    return d;
}

long integer(const json& o, const std::string& path, const char* key, long def) {
    if (!o.contains(key)) return def;
    const json& v = o.at(key);
    if (!v.is_number_integer()) fail(sub(path, key), "must be an integer");
    return v.get<long>();
}

bool boolean(const json& o, const std::string& path, const char* key, bool def) {
    if (!o.contains(key)) return def;
    if (!o.at(key).is_boolean()) fail(sub(path, key), "must be true or false");
    return o.at(key).get<bool>();
}

std::string text(const json& o, const std::string& path, const char* key, const std::string& def) {
    if (!o.contains(key)) return def;
    if (!o.at(key).is_string()) fail(sub(path, key), "must be a string");
    return o.at(key).get<std::string>();
}

std::vector<double> numbers(const json& o, const std::string& path, const char* key, std::vector<double> def) {
    if (!o.contains(key)) return def;
    const json& v = o.at(key);
    if (!v.is_array() || v.empty()) fail(sub(path, key), "must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) fail(sub(path, key), "must be a non-empty array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

void check(bool ok, const std::string& path, const std::string& what) {
    if (!ok) fail(path, what);
}

Vec2 point(const json& o, const std::string& path, const char* key, int dims, Vec2 def) {
    if (!o.contains(key)) return def;
    const std::vector<double> v = numbers(o, path, key, {});
    check(static_cast<int>(v.size()) == dims, sub(path, key), "needs one coordinate per axis");
    return {v[0], dims == 2 ? v[1] : 0.0};
}

GridSpec parse_grid(const json& o) {
    only_keys(o, "grid", {"n", "L"});
    check(o.contains("n") && o.contains("L"), "grid", "needs 'n' and 'L'");
    GridSpec g;
    std::vector<double> n, L;
    if (o.at("n").is_array()) {
        for (const auto& e : o.at("n")) {
            check(e.is_number_integer(), "grid.n", "must hold integers");
            n.push_back(e.get<double>());
        }
    } else {
        n.push_back(static_cast<double>(integer(o, "grid", "n", 0)));
    }
    L = o.at("L").is_array() ? numbers(o, "grid", "L", {}) : std::vector<double>{number(o, "grid", "L", 0.0)};
    check(n.size() == 1 || n.size() == 2, "grid.n", "one or two axes");
    if (L.size() == 1 && n.size() == 2) L.push_back(L[0]);
    check(L.size() == n.size(), "grid.L", "needs one half-width per axis");
    g.dims = static_cast<int>(n.size());
    for (int a = 0; a < g.dims; ++a) {
        const int na = static_cast<int>(n[a]);
        check(na >= 8 && na <= 8192 && (na & (na - 1)) == 0, "grid.n", "must be a power of two in [8, 8192]");
        check(L[a] > 0.0, "grid.L", "must be positive");
        g.n[a] = na;
        g.half_width[a] = L[a];
    }
    return g;
}

MeasureSpec parse_measure(const json& o, const std::string& path, int dims) {
    only_keys(o, path, {"type", "bumps", "center", "mollify", "path"});
    MeasureSpec m;
    m.type = text(o, path, "type", "gaussian_mixture");
    m.mollify = number(o, path, "mollify", 0.0);
    check(m.mollify >= 0.0, sub(path, "mollify"), "must be nonnegative");
    if (m.type == "gaussian_mixture") {
        check(o.contains("bumps") && o.at("bumps").is_array() && !o.at("bumps").empty(), sub(path, "bumps"),
              "needs a non-empty array");
        for (std::size_t i = 0; i < o.at("bumps").size(); ++i) {
            const std::string p = sub(path, "bumps[" + std::to_string(i) + "]");
            const json& b = o.at("bumps")[i];
            only_keys(b, p, {"center", "sigma", "weight"});
            Bump bump;
            bump.center = point(b, p, "center", dims, {0.0, 0.0});
            bump.sigma = number(b, p, "sigma", 0.5);
            bump.weight = number(b, p, "weight", 1.0);
            check(bump.sigma > 0.0, sub(p, "sigma"), "must be positive");
            check(bump.weight > 0.0, sub(p, "weight"), "must be positive");
            m.bumps.push_back(bump);
        }
    } else if (m.type == "delta") {
        m.center = point(o, path, "center", dims, {0.0, 0.0});
    } else if (m.type == "file") {
        m.path = text(o, path, "path", "");
        check(!m.path.empty(), sub(path, "path"), "needs a file path");
    } else {
        fail(sub(path, "type"), "must be gaussian_mixture, delta or file");
    }
    return m;
}

CouplingSpec parse_coupling_spec(const json& o, const std::string& path) {
    only_keys(o, path, {"type", "phi", "Phi", "phi2"});
    CouplingSpec c;
    c.type = text(o, path, "type", "");
    check(c.type == "zero" || c.type == "conv" || c.type == "local" || c.type == "fixed", sub(path, "type"),
          "must be zero, conv, local or fixed");
    c.phi = text(o, path, c.type == "local" ? "phi2" : "phi", "");
    c.Phi = text(o, path, "Phi", "identity");
    check(c.type == "zero" || !c.phi.empty(), path, "needs a kernel spec");
    return c;
}

}  // namespace

Grid GridSpec::make() const {
    return dims == 1 ? Grid(n[0], half_width[0]) : Grid(n, half_width);
}

Measure MeasureSpec::make(const Grid& g) const {
    Measure m;
    if (type == "delta") {
        return mollified_delta(g, center, mollify > 0.0 ? mollify : 2.0 * std::max(g.dx(0), g.dims() == 2 ? g.dx(1) : 0.0));
    } else if (type == "file") {
        const Field f = read_field_file(path);
        require(f.grid() == g, "m0 file grid differs from the config grid", ErrorKind::config);
        m = Measure::normalized(f);
    } else {
        Field f(g);
        for (const auto& b : bumps) f += b.weight * gaussian_measure(g, b.center, b.sigma).density();
        m = Measure::normalized(f);
    }
    return mollify > 0.0 ? lmfg::mollify(m, mollify) : m;
}

RunConfig parse_run_config(const json& j) {
    only_keys(j, "(root)",
              {"scenario", "operator", "grid", "time", "hamiltonian", "coupling", "m0", "solver", "kernel", "hjb", "fp",
               "linsys", "master", "check", "output", "seed"});
    RunConfig c;
    c.scenario = text(j, "", "scenario", "unnamed");
    check(j.contains("operator"), "operator", "is required");
    c.operator_spec = text(j, "", "operator", "");
    check(j.contains("grid"), "grid", "is required");
    c.grid = parse_grid(j.at("grid"));
    const int dims = c.grid.dims;
    // Parse the operator now so a bad spec is a config error before any work.
    (void)parse_operator(c.operator_spec, dims);

    if (j.contains("time")) {
        const json& t = j.at("time");
        only_keys(t, "time", {"t0", "T", "steps"});
        c.time.t0 = number(t, "time", "t0", 0.0);
        c.time.T = number(t, "time", "T", 1.0);
        c.time.steps = static_cast<int>(integer(t, "time", "steps", 100));
        check(c.time.T > c.time.t0, "time.T", "must exceed t0");
        check(c.time.steps >= 1 && c.time.steps <= 1000000, "time.steps", "must lie in [1, 1e6]");
    }
    c.hamiltonian = text(j, "", "hamiltonian", "quadratic");
    if (j.contains("coupling")) {
        const json& o = j.at("coupling");
        only_keys(o, "coupling", {"F", "G"});
        if (o.contains("F")) c.F = parse_coupling_spec(o.at("F"), "coupling.F");
        if (o.contains("G")) c.G = parse_coupling_spec(o.at("G"), "coupling.G");
    }
    if (j.contains("m0")) c.m0 = parse_measure(j.at("m0"), "m0", dims);

    if (j.contains("solver")) {
        const json& o = j.at("solver");
        only_keys(o, "solver",
                  {"damping", "max_iters", "tol_d0", "patience", "picard_sweeps", "enforce_budget", "linear_tol",
                   "linear_max_iters", "max_y_per_axis", "d0_max_cells"});
        SolverSpec& s = c.solver;
        s.damping = number(o, "solver", "damping", s.damping);
        s.max_iters = static_cast<int>(integer(o, "solver", "max_iters", s.max_iters));
        s.tol_d0 = number(o, "solver", "tol_d0", s.tol_d0);
        s.patience = static_cast<int>(integer(o, "solver", "patience", s.patience));
        s.picard_sweeps = static_cast<int>(integer(o, "solver", "picard_sweeps", s.picard_sweeps));
        s.enforce_budget = boolean(o, "solver", "enforce_budget", s.enforce_budget);
        s.linear_tol = number(o, "solver", "linear_tol", s.linear_tol);
        s.linear_max_iters = static_cast<int>(integer(o, "solver", "linear_max_iters", s.linear_max_iters));
        s.max_y_per_axis = static_cast<int>(integer(o, "solver", "max_y_per_axis", s.max_y_per_axis));
        s.d0_max_cells = static_cast<int>(integer(o, "solver", "d0_max_cells", s.d0_max_cells));
        check(s.damping > 0.0 && s.damping <= 1.0, "solver.damping", "must lie in (0, 1]");
        check(s.max_iters >= 1, "solver.max_iters", "must be positive");
        check(s.tol_d0 > 0.0, "solver.tol_d0", "must be positive");
        check(s.patience >= 1, "solver.patience", "must be positive");
        check(s.picard_sweeps >= 0 && s.picard_sweeps <= 10, "solver.picard_sweeps", "must lie in [0, 10]");
        check(s.linear_tol > 0.0, "solver.linear_tol", "must be positive");
        check(s.linear_max_iters >= 1, "solver.linear_max_iters", "must be positive");
        check(s.max_y_per_axis >= 4, "solver.max_y_per_axis", "must be at least 4");
        check(s.d0_max_cells >= 16, "solver.d0_max_cells", "must be at least 16");
    }
    if (j.contains("kernel")) {
        const json& o = j.at("kernel");
        only_keys(o, "kernel", {"betas", "times", "slope_tol", "emit_times"});
        KernelSection& k = c.kernel;
        if (o.contains("betas")) {
            k.betas.clear();
            for (double b : numbers(o, "kernel", "betas", {})) {
                check(b == std::floor(b) && b >= 0 && b <= 4, "kernel.betas", "must be integers in [0, 4]");
                k.betas.push_back(static_cast<int>(b));
            }
        }
        k.times = numbers(o, "kernel", "times", k.times);
        check(k.times.size() >= 2, "kernel.times", "needs at least two times");
        for (double t : k.times) check(t > 0.0, "kernel.times", "must be positive");
        k.slope_tol = number(o, "kernel", "slope_tol", k.slope_tol);
        check(k.slope_tol > 0.0, "kernel.slope_tol", "must be positive");
        k.emit_times = numbers(o, "kernel", "emit_times", k.emit_times);
        for (double t : k.emit_times) check(t > 0.0, "kernel.emit_times", "must be positive");
    }
    if (j.contains("hjb")) {
        only_keys(j.at("hjb"), "hjb", {"terminal"});
        c.hjb.terminal = text(j.at("hjb"), "hjb", "terminal", "");
    }
    if (j.contains("fp")) {
        only_keys(j.at("fp"), "fp", {"drift"});
        c.fp.drift = point(j.at("fp"), "fp", "drift", dims, {0.0, 0.0});
    }
    if (j.contains("linsys")) {
        const json& o = j.at("linsys");
        only_keys(o, "linsys", {"y", "duality_tol"});
        c.linsys.y = numbers(o, "linsys", "y", c.linsys.y);
        check(dims == 1 || c.linsys.y.size() % 2 == 0, "linsys.y", "2D needs coordinate pairs");
        c.linsys.duality_tol = number(o, "linsys", "duality_tol", c.linsys.duality_tol);
        check(c.linsys.duality_tol > 0.0, "linsys.duality_tol", "must be positive");
    }
    if (j.contains("master")) {
        const json& o = j.at("master");
        only_keys(o, "master",
                  {"t0", "samples", "residual_tol", "m0_prime", "h", "J_invariance", "restart", "stability_h"});
        MasterSection& m = c.master;
        if (o.contains("t0")) m.t0 = number(o, "master", "t0", 0.0);
        m.samples = numbers(o, "master", "samples", m.samples);
        check(dims == 1 || m.samples.size() % 2 == 0, "master.samples", "2D needs coordinate pairs");
        m.residual_tol = number(o, "master", "residual_tol", m.residual_tol);
        check(m.residual_tol > 0.0, "master.residual_tol", "must be positive");
        if (o.contains("m0_prime")) m.m0_prime = parse_measure(o.at("m0_prime"), "master.m0_prime", dims);
        m.h = numbers(o, "master", "h", m.h);
        m.J_invariance = boolean(o, "master", "J_invariance", false);
        if (o.contains("restart")) m.restart = number(o, "master", "restart", 0.0);
        if (o.contains("stability_h")) m.stability_h = numbers(o, "master", "stability_h", {});
    }
    if (j.contains("check")) {
        const json& o = j.at("check");
        only_keys(o, "check", {"coupling", "normalization", "trials", "measure"});
        if (o.contains("coupling")) c.check.coupling = parse_coupling_spec(o.at("coupling"), "check.coupling");
        c.check.normalization = text(o, "check", "normalization", "raw");
        check(c.check.normalization == "raw" || c.check.normalization == "zero_mean", "check.normalization",
              "must be raw or zero_mean");
        c.check.trials = static_cast<int>(integer(o, "check", "trials", 10));
        check(c.check.trials >= 1 && c.check.trials <= 10000, "check.trials", "must lie in [1, 10000]");
        if (o.contains("measure")) c.check.measure = parse_measure(o.at("measure"), "check.measure", dims);
    }
    c.output = text(j, "", "output", "out");
    if (j.contains("seed")) {
        check(j.at("seed").is_number_unsigned(), "seed", "must be a nonnegative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    return c;
}

void validate_for(const RunConfig& c, const std::string& cmd) {
    check(std::find(kSubcommands.begin(), kSubcommands.end(), cmd) != kSubcommands.end(), "subcommand",
          "unknown subcommand '" + cmd + "'");
    const bool solve = cmd == "hjb" || cmd == "fp" || cmd == "mfg" || cmd == "linsys" || cmd == "master";
    if (solve) {
        const double alpha = order_alpha(parse_operator(c.operator_spec, c.grid.dims));
        check(alpha > 1.0 && alpha <= 2.0, "operator", "solves need order alpha in (1, 2]");
    }
    const bool needs_m0 = cmd == "fp" || cmd == "mfg" || cmd == "linsys" || cmd == "master";
    check(!needs_m0 || c.m0.has_value(), "m0", "is required for " + cmd);
    if (cmd == "hjb")
        check(!c.hjb.terminal.empty() || c.m0.has_value() || c.G.type == "zero" || c.G.type == "fixed", "hjb",
              "needs hjb.terminal or an m0 to evaluate G");
    if (cmd == "hjb")
        check(c.F.type == "zero" || c.F.type == "fixed" || c.m0.has_value(), "m0", "is required to evaluate F");
    if (cmd == "check") check(c.check.coupling.has_value() || c.F.type != "zero", "check", "needs a coupling");
    if (cmd == "linsys" || cmd == "master")
        check(c.hamiltonian.find("_u") == std::string::npos, "hamiltonian",
              "linearization needs a Hamiltonian without u-dependence");
    if (cmd == "master") {
        for (std::size_t i = 0; i < c.master.h.size(); ++i) {
            check(c.master.h[i] > 0.0 && c.master.h[i] <= 1.0, "master.h", "must lie in (0, 1]");
            check(i == 0 || c.master.h[i] < c.master.h[i - 1], "master.h", "must decrease");
        }
    }
}

}  // namespace lmfg::cli
