#include "lmfg/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <regex>

#include "lmfg/errors.hpp"

namespace lmfg {

Hamiltonian quadratic_hamiltonian(double scale) {
    require(scale > 0.0, "quadratic Hamiltonian: scale must be positive", ErrorKind::config);
    Hamiltonian h;
    h.kind = Hamiltonian::Kind::quadratic;
    h.scale = scale;
    h.H = [scale](const Vec2&, double, const Vec2& p) { return scale * (p[0] * p[0] + p[1] * p[1]); };
    h.DpH = [scale](const Vec2&, double, const Vec2& p) { return Vec2{2 * scale * p[0], 2 * scale * p[1]}; };
    h.DppH = [scale](const Vec2&, double, const Vec2&) {
        return Mat2{{{2 * scale, 0.0}, {0.0, 2 * scale}}};
    };
    h.uniformly_convex = true;
    h.convexity_c1 = std::max(2 * scale, 1 / (2 * scale));
    h.name = scale == 1.0 ? "quadratic" : "quadratic(" + std::to_string(scale) + ")";
    return h;
}

Hamiltonian separable_hamiltonian(std::function<double(const Vec2&, const Vec2&)> H1,
                                  std::function<Vec2(const Vec2&, const Vec2&)> DpH1,
                                  std::function<Mat2(const Vec2&, const Vec2&)> DppH1,
                                  std::function<double(const Vec2&, double)> H2,
                                  std::function<double(const Vec2&, double)> DuH2, std::string name) {
    Hamiltonian h;
    h.kind = Hamiltonian::Kind::separable;
    h.H = [H1, H2](const Vec2& x, double u, const Vec2& p) { return H1(x, p) + H2(x, u); };
    h.DpH = [DpH1](const Vec2& x, double, const Vec2& p) { return DpH1(x, p); };
    h.DppH = [DppH1](const Vec2& x, double, const Vec2& p) { return DppH1(x, p); };
    if (DuH2) h.DuH = [DuH2](const Vec2& x, double u, const Vec2&) { return DuH2(x, u); };
    h.name = std::move(name);
    return h;
}

Hamiltonian quadratic_plus_linear_u(double scale, double beta) {
    require(scale > 0.0, "quadratic Hamiltonian: scale must be positive", ErrorKind::config);
    Hamiltonian h = separable_hamiltonian(
        [scale](const Vec2&, const Vec2& p) { return scale * (p[0] * p[0] + p[1] * p[1]); },
        [scale](const Vec2&, const Vec2& p) { return Vec2{2 * scale * p[0], 2 * scale * p[1]}; },
        [scale](const Vec2&, const Vec2&) { return Mat2{{{2 * scale, 0.0}, {0.0, 2 * scale}}}; },
        [beta](const Vec2&, double u) { return beta * u; }, [beta](const Vec2&, double) { return beta; },
        "quadratic_u(" + std::to_string(scale) + "," + std::to_string(beta) + ")");
    h.uniformly_convex = true;
    h.convexity_c1 = std::max(2 * scale, 1 / (2 * scale));
    h.gamma = beta;
    return h;
}

Hamiltonian general_hamiltonian(std::function<double(const Vec2&, double, const Vec2&)> H,
                                std::function<Vec2(const Vec2&, double, const Vec2&)> DpH,
                                std::function<Mat2(const Vec2&, double, const Vec2&)> DppH,
                                std::function<double(const Vec2&, double, const Vec2&)> DuH,
                                std::string name) {
    Hamiltonian h;
    h.kind = Hamiltonian::Kind::general;
    h.H = std::move(H);
    h.DpH = std::move(DpH);
    h.DppH = std::move(DppH);
    h.DuH = std::move(DuH);
    h.name = std::move(name);
    return h;
}

Hamiltonian linear_hamiltonian(const Vec2& v) {
    Hamiltonian h;
    h.kind = Hamiltonian::Kind::linear;
    h.velocity = v;
    h.H = [v](const Vec2&, double, const Vec2& p) { return v[0] * p[0] + v[1] * p[1]; };
    h.DpH = [v](const Vec2&, double, const Vec2&) { return v; };
    h.DppH = [](const Vec2&, double, const Vec2&) { return Mat2{{{0.0, 0.0}, {0.0, 0.0}}}; };
    h.name = "linear";
    return h;
}

Hamiltonian parse_hamiltonian(const std::string& spec) {
    static const std::regex q(R"(\s*quadratic\s*(?:\(\s*([^,()]+?)\s*\))?\s*)");
    static const std::regex qu(R"(\s*quadratic_u\s*\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)\s*)");
    std::smatch m;
    try {
        if (std::regex_match(spec, m, q))
            return quadratic_hamiltonian(m[1].matched ? std::stod(m[1].str()) : 1.0);
        if (std::regex_match(spec, m, qu))
            return quadratic_plus_linear_u(std::stod(m[1].str()), std::stod(m[2].str()));
    } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::config, "bad number in Hamiltonian spec: " + spec);
    }
    throw Error(ErrorKind::config, "unknown Hamiltonian: " + spec);
}

namespace {

Vec2 grad_at(const VectorField& Du, std::size_t i) {
    return {Du[0][i], Du.size() > 1 ? Du[1][i] : 0.0};
}

}  // namespace

Field eval_H(const Hamiltonian& h, const Field& u, const VectorField& Du) {
    const Grid& g = u.grid();
    Field out(g);
    if (h.kind == Hamiltonian::Kind::quadratic) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            double s = Du[0][i] * Du[0][i];
            if (Du.size() > 1) s += Du[1][i] * Du[1][i];
            out[i] = h.scale * s;
        }
        return out;
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = h.H(g.point(i), u[i], grad_at(Du, i));
    return out;
}

VectorField eval_DpH(const Hamiltonian& h, const Field& u, const VectorField& Du) {
    const Grid& g = u.grid();
    VectorField out = zero_vector_field(g);
    if (h.kind == Hamiltonian::Kind::quadratic) {
        for (std::size_t a = 0; a < out.size(); ++a) out[a] = 2 * h.scale * Du[a];
        return out;
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Vec2 v = h.DpH(g.point(i), u[i], grad_at(Du, i));
        for (std::size_t a = 0; a < out.size(); ++a) out[a][i] = v[a];
    }
    return out;
}

SymMatField eval_DppH(const Hamiltonian& h, const Field& u, const VectorField& Du) {
    const Grid& g = u.grid();
    SymMatField s{Field(g), Field(g), Field(g)};
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Mat2 m = h.DppH(g.point(i), u[i], grad_at(Du, i));
        s.a00[i] = m[0][0];
        s.a01[i] = 0.5 * (m[0][1] + m[1][0]);
        s.a11[i] = m[1][1];
    }
    return s;
}

HamiltonianReport validate_hamiltonian(const Hamiltonian& h, int dims, int probes, std::uint64_t seed,
                                       double tol) {
    HamiltonianReport r;
    r.min_hess_eig = std::numeric_limits<double>::infinity();
    r.max_hess_eig = -std::numeric_limits<double>::infinity();
    r.min_DuH = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int k = 0; k < probes; ++k) {
        const Vec2 x{U(rng), dims == 2 ? U(rng) : 0.0};
        const double u = U(rng);
        const Vec2 p{U(rng), dims == 2 ? U(rng) : 0.0};
        const Vec2 g = h.DpH(x, u, p);
        for (int a = 0; a < dims; ++a) {
            const double e = 1e-5 * std::max(1.0, std::abs(p[a]));
            Vec2 pp = p, pm = p;
            pp[a] += e;
            pm[a] -= e;
            const double fd = (h.H(x, u, pp) - h.H(x, u, pm)) / (2 * e);
            const double rel = std::abs(fd - g[a]) / std::max(1.0, std::abs(g[a]));
            r.max_gradient_rel_error = std::max(r.max_gradient_rel_error, rel);
        }
        const Mat2 m = h.DppH(x, u, p);
        double lo, hi;
        if (dims == 1) lo = hi = m[0][0];
        else {
            const double tr = m[0][0] + m[1][1];
            const double det = m[0][0] * m[1][1] - 0.25 * (m[0][1] + m[1][0]) * (m[0][1] + m[1][0]);
            const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
            lo = tr / 2 - disc;
            hi = tr / 2 + disc;
        }
        r.min_hess_eig = std::min(r.min_hess_eig, lo);
        r.max_hess_eig = std::max(r.max_hess_eig, hi);
        if (h.u_dependent()) r.min_DuH = std::min(r.min_DuH, h.DuH(x, u, p));
    }
    r.gradient_ok = r.max_gradient_rel_error <= 1e-6;
    if (h.uniformly_convex)
        r.convexity_ok = r.min_hess_eig >= 1 / h.convexity_c1 - tol && r.max_hess_eig <= h.convexity_c1 + tol;
    if (h.u_dependent()) r.monotone_ok = r.min_DuH >= h.gamma - tol;
    else r.min_DuH = 0.0;
    return r;
}

}  // namespace lmfg
