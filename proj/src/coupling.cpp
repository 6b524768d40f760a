#include "lmfg/coupling.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <regex>

#include "lmfg/errors.hpp"
#include "lmfg/parallel.hpp"
#include "lmfg/spectral.hpp"

namespace lmfg {

namespace {

double bump(double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

Field local_slope(const LocalCompositeCoupling& lc, const Field& s) {
    const Grid& g = s.grid();
    Field d(g);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = lc.map.ds(g.point(k), s[k]);
    return d;
}

// phi(x_i - x_j) for a kernel centered at node n/2, offsets periodic.
double kernel_at(const Field& phi, std::size_t i, std::size_t j) {
    const Grid& g = phi.grid();
    const int n0 = g.n(0), n1 = g.n(1);
    const int a0 = static_cast<int>(i / n1) - static_cast<int>(j / n1);
    const int a1 = static_cast<int>(i % n1) - static_cast<int>(j % n1);
    const int k0 = ((a0 + n0 / 2) % n0 + n0) % n0;
    const int k1 = g.dims() == 2 ? ((a1 + n1 / 2) % n1 + n1) % n1 : 0;
    return phi[g.index(k0, k1)];
}

}  // namespace

LocalMap power_map(double p) {
    require(p > 0.0, "power map: exponent must be positive", ErrorKind::config);
    LocalMap m;
    m.value = [p](const Vec2&, double s) { return std::copysign(std::pow(std::abs(s), p) / p, s); };
    m.ds = [p](const Vec2&, double s) { return p == 1.0 ? 1.0 : std::pow(std::abs(s), p - 1.0); };
    m.name = "power(" + std::to_string(p) + ")";
    return m;
}

Coupling zero_coupling() { return Coupling{}; }

int smoothness_budget(const Field& phi) {
    int budget = 0;
    for (int b = 1; b <= 4; ++b) {
        bool ok = true;
        for (int a = 0; a < phi.grid().dims(); ++a) {
            MultiIndex beta{0, 0};
            beta[a] = b;
            if (spectral_tail(spectral_derivative(phi, beta)) > 1e-8) ok = false;
        }
        if (!ok) break;
        budget = b;
    }
    return budget;
}

bool grid_positive_definite(const Field& phi) {
    const Spectrum s = dft(phi);
    const auto modes = half_spectrum_modes(phi.grid());
    double top = 0.0;
    for (const auto& v : s.coeffs) top = std::max(top, std::abs(v));
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const Complex m = s.coeffs[i] * static_cast<double>(modes[i].parity);
        if (std::abs(m.imag()) > 1e-12 * top || m.real() < -1e-12 * top) return false;
    }
    return true;
}

Coupling conv_coupling(Field phi, std::string name) {
    require(!phi.empty() && phi.all_finite(), "conv coupling: kernel must be finite");
    Coupling c;
    c.smoothness = smoothness_budget(phi);
    c.kind = ConvCoupling{std::move(phi)};
    c.name = std::move(name);
    return c;
}

Coupling fixed_coupling(Field value, std::string name) {
    require(!value.empty() && value.all_finite(), "fixed coupling: values must be finite");
    Coupling c;
    c.smoothness = smoothness_budget(value);
    c.kind = FixedCoupling{std::move(value)};
    c.name = std::move(name);
    return c;
}

Coupling local_coupling(LocalMap map, Field phi2, std::string name) {
    require(phi2.min() >= 0.0, "local coupling: phi2 must be nonnegative");
    require(max_abs_diff(phi2, reflect(phi2)) <= 1e-12 * std::max(1.0, phi2.max_abs()),
            "local coupling: phi2 must be even");
    require(static_cast<bool>(map.value) && static_cast<bool>(map.ds), "local coupling: map incomplete");
    Coupling c;
    c.smoothness = smoothness_budget(phi2);
    c.kind = LocalCompositeCoupling{std::move(map), std::move(phi2)};
    c.name = std::move(name);
    return c;
}

Field parse_kernel(const std::string& spec, const Grid& grid) {
    static const std::regex re(R"(\s*(\w+)\s*\(\s*([^,()]+?)\s*(?:,\s*([^,()]+?)\s*)?\)\s*)");
    std::smatch mm;
    require(std::regex_match(spec, mm, re), "kernel spec not understood: " + spec, ErrorKind::config);
    double p = 0.0, amp = 1.0;
    try {
        p = std::stod(mm[2].str());
        if (mm[3].matched) amp = std::stod(mm[3].str());
    } catch (const std::exception&) {
        throw Error(ErrorKind::config, "kernel spec has a bad number: " + spec);
    }
    require(p > 0.0 && std::isfinite(p) && std::isfinite(amp), "kernel width must be positive: " + spec,
            ErrorKind::config);
    const std::string kind = mm[1].str();
    auto radius = [](const Vec2& x) { return std::hypot(x[0], x[1]); };
    if (kind == "gauss")
        return Field::sample(grid, [&](const Vec2& x) {
            const double r = radius(x);
            return amp * std::exp(-r * r / (2 * p * p));
        });
    if (kind == "bump")
        return Field::sample(grid, [&](const Vec2& x) { return amp * bump(radius(x) / p); });
    if (kind == "odd")
        return Field::sample(grid, [&](const Vec2& x) { return amp * (x[0] / p) * bump(radius(x) / p); });
    if (kind == "pdbump") {
        // b * b with b a bump of radius p/2: support radius p, multiplier |b^|^2 >= 0.
        const Field b = Field::sample(grid, [&](const Vec2& x) { return bump(2 * radius(x) / p); });
        Field k = periodic_convolve(b, b);
        k *= amp / k.max();
        return k;
    }
    throw Error(ErrorKind::config, "unknown kernel: " + kind);
}

Coupling parse_coupling(const std::string& type, const std::string& phi, const std::string& Phi,
                        const Grid& grid) {
    if (type == "zero") return zero_coupling();
    if (type == "conv") return conv_coupling(parse_kernel(phi, grid), "conv " + phi);
    if (type == "fixed") return fixed_coupling(parse_kernel(phi, grid), "fixed " + phi);
    if (type == "local") {
        static const std::regex re(R"(\s*power\s*\(\s*([^()]+?)\s*\)\s*)");
        std::smatch mm;
        LocalMap map;
        if (Phi == "identity") map = power_map(1.0);
        else if (std::regex_match(Phi, mm, re)) {
            double p = 0.0;
            try {
                p = std::stod(mm[1].str());
            } catch (const std::exception&) {
                throw Error(ErrorKind::config, "bad power in " + Phi);
            }
            map = power_map(p);
        } else
            throw Error(ErrorKind::config, "unknown local map: " + Phi);
        return local_coupling(std::move(map), parse_kernel(phi, grid), "local " + Phi + " " + phi);
    }
    throw Error(ErrorKind::config, "unknown coupling type: " + type);
}

Field eval_F(const Coupling& c, const Field& m) {
    return std::visit(
        [&](const auto& k) -> Field {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ZeroCoupling>) return Field(m.grid());
            else if constexpr (std::is_same_v<T, FixedCoupling>) {
                require_same_grid(k.value.grid(), m.grid(), "eval_F");
                return k.value;
            } else if constexpr (std::is_same_v<T, ConvCoupling>) {
                require_same_grid(k.phi.grid(), m.grid(), "eval_F");
                return periodic_convolve(k.phi, m);
            } else {
                require_same_grid(k.phi2.grid(), m.grid(), "eval_F");
                const Field s = periodic_convolve(k.phi2, m);
                Field v(m.grid());
                for (std::size_t i = 0; i < v.size(); ++i) v[i] = k.map.value(m.grid().point(i), s[i]);
                return periodic_convolve(k.phi2, v);
            }
        },
        c.kind);
}

Field eval_F(const Coupling& c, const Measure& m) { return eval_F(c, m.density()); }

Field pair_dmF(const Coupling& c, const Field& m, const Field& rho) {
    require_same_grid(m.grid(), rho.grid(), "pair_dmF");
    return std::visit(
        [&](const auto& k) -> Field {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ZeroCoupling> || std::is_same_v<T, FixedCoupling>) return Field(m.grid());
            else if constexpr (std::is_same_v<T, ConvCoupling>) return periodic_convolve(k.phi, rho);
            else {
                Field w = local_slope(k, periodic_convolve(k.phi2, m));
                w.multiply(periodic_convolve(k.phi2, rho));
                return periodic_convolve(k.phi2, w);
            }
        },
        c.kind);
}

Field dmF_row(const Coupling& c, const Field& m, std::size_t x) {
    const Grid& g = m.grid();
    require(x < g.size(), "dmF_row: node out of range");
    return std::visit(
        [&](const auto& k) -> Field {
            using T = std::decay_t<decltype(k)>;
            Field row(g);
            if constexpr (std::is_same_v<T, ConvCoupling>) {
                for (std::size_t y = 0; y < g.size(); ++y) row[y] = kernel_at(k.phi, x, y);
            } else if constexpr (std::is_same_v<T, LocalCompositeCoupling>) {
                // int dPhi(z, s(z)) phi2(x - z) phi2(z - y) dz = (phi2 * w)(y), w(z) = dPhi phi2(x - z)
                Field w = local_slope(k, periodic_convolve(k.phi2, m));
                for (std::size_t z = 0; z < g.size(); ++z) w[z] *= kernel_at(k.phi2, x, z);
                row = periodic_convolve(k.phi2, w);
            }
            return row;
        },
        c.kind);
}

Eigen::MatrixXd eval_dmF(const Coupling& c, const Field& m, bool allow_large) {
    const Grid& g = m.grid();
    if (!allow_large) {
        bool ok = g.size() <= 4096;
        for (int a = 0; a < g.dims(); ++a) ok = ok && g.n(a) <= 256;
        require(ok, "eval_dmF: kernel matrix too large to materialize; use dmF_row", ErrorKind::size_guard);
    }
    const std::size_t N = g.size();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    if (c.ignores_m()) return M;
    parallel_for(N, [&](std::size_t x) {
        const Field row = dmF_row(c, m, x);
        for (std::size_t y = 0; y < N; ++y) M(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = row[y];
    });
    return M;
}

Measure random_bump_mixture(const Grid& grid, int bumps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Field f(grid);
    for (int b = 0; b < bumps; ++b) {
        Vec2 c{0.0, 0.0};
        for (int a = 0; a < grid.dims(); ++a) c[a] = (u(rng) - 0.5) * grid.half_width(a);
        const double s = 0.1 * grid.half_width(0) * (0.5 + u(rng));
        const double w = 0.2 + u(rng);
        f += w * gaussian_measure(grid, c, s).density();
    }
    double dxmax = grid.dx(0);
    if (grid.dims() == 2) dxmax = std::max(dxmax, grid.dx(1));
    return mollify(Measure::normalized(std::move(f)), 2 * dxmax);
}

M1Report check_M1(const Coupling& c, const Grid& grid, int trials, std::uint64_t seed) {
    require(trials >= 1, "check_M1: need at least one trial");
    M1Report r;
    r.min_value = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        const Measure m = random_bump_mixture(grid, 3, seed + 2 * static_cast<std::uint64_t>(t));
        const Measure mp = random_bump_mixture(grid, 3, seed + 2 * static_cast<std::uint64_t>(t) + 1);
        const double v = inner(eval_F(c, mp) - eval_F(c, m), mp.density() - m.density());
        r.values.push_back(v);
        r.min_value = std::min(r.min_value, v);
        r.max_abs = std::max(r.max_abs, std::abs(v));
    }
    r.pass = r.min_value >= -1e-10;
    return r;
}

M2Report check_M2(const Coupling& c, const Field& m, DerivativeNormalization norm) {
    M2Report r;
    r.normalization = norm;
    Eigen::MatrixXd M = eval_dmF(c, m);
    if (norm == DerivativeNormalization::zero_mean) {
        const Grid& g = m.grid();
        Eigen::VectorXd w(static_cast<Eigen::Index>(g.size()));
        for (std::size_t j = 0; j < g.size(); ++j) w(static_cast<Eigen::Index>(j)) = m[j] * g.cell_volume();
        const Eigen::VectorXd mean = M * w;
        M.colwise() -= mean;
    }
    const Eigen::MatrixXd Q = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
    r.min_eig = es.eigenvalues().minCoeff();
    r.max_eig = es.eigenvalues().maxCoeff();
    r.pass = r.min_eig >= -1e-10;
    return r;
}

}  // namespace lmfg
