#include "lmfg/levy.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cctype>
#include <limits>
#include <memory>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lmfg/errors.hpp"

namespace lmfg {

namespace {

using boost::math::quadrature::exp_sinh;
using boost::math::quadrature::gauss_kronrod;
using boost::math::quadrature::tanh_sinh;

constexpr double kPi = std::numbers::pi;

double norm2(const Vec2& v, int dims) {
    return dims == 1 ? std::abs(v[0]) : std::hypot(v[0], v[1]);
}

/// Upper incomplete gamma for s in (-1, 1).
double upper_gamma(double s, double x) {
    if (s > 0.0) return boost::math::tgamma(s, x);
    if (s == 0.0) return boost::math::expint(1, x);
    // Gamma(s, x) = (Gamma(s+1, x) - x^s e^{-x}) / s
    return (boost::math::tgamma(s + 1.0, x) - std::pow(x, s) * std::exp(-x)) / s;
}

Complex riesz_feller_symbol(double alpha, double xi) {
    if (xi == 0.0) return 0.0;
    const Complex lam(0.0, -xi);
    return -boost::math::tgamma(-alpha) * std::pow(lam, alpha) -
           Complex(0.0, xi / (alpha - 1.0));
}

Complex cgmy_symbol(const Cgmy& c, double xi) {
    if (xi == 0.0) return 0.0;
    const double Y = c.Y;
    const Complex ixi(0.0, xi);
    // Fully compensated exponent int (e^{i xi z} - 1 - i xi z) nu(dz).
    const Complex full =
        c.C * boost::math::tgamma(-Y) *
        (std::pow(Complex(c.M, 0.0) - ixi, Y) - std::pow(c.M, Y) +
         std::pow(Complex(c.G, 0.0) + ixi, Y) - std::pow(c.G, Y) +
         ixi * Y * (std::pow(c.M, Y - 1.0) - std::pow(c.G, Y - 1.0)));
    // int_{|z|>=1} z nu(dz) moves the compensator from all z to |z| < 1.
    const double big_mean = c.C * (std::pow(c.M, Y - 1.0) * upper_gamma(1.0 - Y, c.M) -
                                   std::pow(c.G, Y - 1.0) * upper_gamma(1.0 - Y, c.G));
    return -(full + ixi * big_mean);
}

double cgmy_density(const Cgmy& c, double z) {
    if (z == 0.0) return 0.0;
    const double a = std::abs(z);
    const double rate = z > 0.0 ? c.M : c.G;
    return c.C * std::exp(-rate * a) * std::pow(a, -1.0 - c.Y);
}

/// Quadrature of the compensated Levy-Khintchine integrand for a 1D density.
class DensityQuadrature {
public:
    explicit DensityQuadrature(const NumericDensity& nd) : nd_(nd) {
        for (int side = 0; side < 2; ++side) {
            const double sgn = side == 0 ? 1.0 : -1.0;
            auto nu = [&](double z) { return nd_.density(sgn * z); };
            // Tail cut: double until the remaining jump mass is negligible.
            exp_sinh<double> es;
            double zmax = 1.0;
            while (true) {
                const double mass = es.integrate([&](double z) { return nu(z); }, zmax,
                                                 std::numeric_limits<double>::infinity());
                if (!std::isfinite(mass))
                    throw Error(ErrorKind::quadrature, "numeric density: tail mass not finite");
                if (mass < nd_.tail_mass) break;
                zmax *= 2.0;
                if (zmax > 1e6)
                    throw Error(ErrorKind::quadrature,
                                "numeric density: tail test failed, jump mass beyond 1e6 exceeds " +
                                    std::to_string(nd_.tail_mass));
            }
            zmax_[side] = zmax;
            // Local power law below the small-jump cutoff, for the analytic remainder.
            const double z0 = nd_.small_cutoff;
            const double n0 = nu(z0);
            const double n1 = nu(0.5 * z0);
            double p = 0.0;
            if (n0 > 0.0 && n1 > 0.0) p = std::log(n1 / n0) / std::log(2.0);
            if (p >= 3.0)
                throw Error(ErrorKind::quadrature,
                            "numeric density: small-jump singularity is not integrable against |z|^2");
            power_[side] = p;
            nu_cut_[side] = n0;
        }
    }

    Complex symbol(double xi) const {
        if (xi == 0.0) return 0.0;
        const double ax = std::abs(xi);
        double re = 0.0;
        double im = 0.0;
        for (int side = 0; side < 2; ++side) {
            const double sgn = side == 0 ? 1.0 : -1.0;
            auto nu = [&](double z) { return nd_.density(sgn * z); };
            // Small jumps on log-spaced nodes: z = e^u.
            const double umin = std::log(nd_.small_cutoff);
            const double width = std::min(1.0, kPi / ax);
            for (double a = umin; a < 0.0; a += width) {
                const double b = std::min(0.0, a + width);
                re += gauss_kronrod<double, 21>::integrate(
                    [&](double u) {
                        const double z = std::exp(u);
                        const double s = std::sin(0.5 * xi * z);
                        return 2.0 * s * s * nu(z) * z;
                    },
                    a, b, 6, nd_.rel_tol);
                im += sgn * gauss_kronrod<double, 21>::integrate(
                                [&](double u) {
                                    const double z = std::exp(u);
                                    const double w = xi * z;
                                    const double d = std::abs(w) < 1e-2
                                                         ? -w * w * w / 6.0 + std::pow(w, 5) / 120.0
                                                         : std::sin(w) - w;
                                    return d * nu(z) * z;
                                },
                                a, b, 6, nd_.rel_tol);
            }
            // Below the cutoff: nu ~ c z^{-p}, (1 - cos) ~ xi^2 z^2 / 2.
            const double zc = nd_.small_cutoff;
            re += 0.5 * xi * xi * nu_cut_[side] * zc * zc * zc / (3.0 - power_[side]);
            // Large jumps, panels of half a period.
            for (double a = 1.0; a < zmax_[side]; a += width) {
                const double b = std::min(zmax_[side], a + width);
                re += gauss_kronrod<double, 21>::integrate(
                    [&](double z) {
                        const double s = std::sin(0.5 * xi * z);
                        return 2.0 * s * s * nu(z);
                    },
                    a, b, 6, nd_.rel_tol);
                im += sgn * gauss_kronrod<double, 21>::integrate(
                                [&](double z) { return std::sin(xi * z) * nu(z); }, a, b, 6,
                                nd_.rel_tol);
            }
        }
        return {re, -im};
    }

private:
    const NumericDensity& nd_;
    std::array<double, 2> zmax_{};
    std::array<double, 2> power_{};
    std::array<double, 2> nu_cut_{};
};

NumericDensity cgmy_as_density(const Cgmy& c) {
    NumericDensity nd;
    nd.density = [c](double z) { return cgmy_density(c, z); };
    nd.order = c.Y;
    return nd;
}

Complex jump_symbol(const JumpComponent& j, int dims, const Vec2& xi) {
    return std::visit(
        [&](const auto& c) -> Complex {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, FractionalLaplacian>) {
                return std::pow(norm2(xi, dims), c.alpha);
            } else if constexpr (std::is_same_v<T, AnisotropicStable>) {
                double s = std::pow(std::abs(xi[0]), c.alpha[0]);
                if (dims == 2) s += std::pow(std::abs(xi[1]), c.alpha[1]);
                return s;
            } else if constexpr (std::is_same_v<T, RieszFeller>) {
                return riesz_feller_symbol(c.alpha, xi[0]);
            } else if constexpr (std::is_same_v<T, Cgmy>) {
                if (c.Y == 1.0) {
                    const NumericDensity nd = cgmy_as_density(c);
                    return DensityQuadrature(nd).symbol(xi[0]);
                }
                return cgmy_symbol(c, xi[0]);
            } else {
                return DensityQuadrature(c).symbol(xi[0]);
            }
        },
        j);
}

bool one_dimensional_only(const JumpComponent& j) {
    return std::holds_alternative<RieszFeller>(j) || std::holds_alternative<Cgmy>(j) ||
           std::holds_alternative<NumericDensity>(j);
}

double component_order(const JumpComponent& j) {
    return std::visit(
        [](const auto& c) -> double {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, FractionalLaplacian>) return c.alpha;
            else if constexpr (std::is_same_v<T, AnisotropicStable>)
                return std::min(c.alpha[0], c.alpha[1]);
            else if constexpr (std::is_same_v<T, RieszFeller>) return c.alpha;
            else if constexpr (std::is_same_v<T, Cgmy>) return c.Y;
            else {
                if (!c.order)
                    throw Error(ErrorKind::invalid_argument,
                                "numeric density: order must be declared");
                return *c.order;
            }
        },
        j);
}

double min_eigenvalue(const Mat2& A, int dims) {
    if (dims == 1) return A[0][0];
    const double tr = A[0][0] + A[1][1];
    const double det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
    const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    return 0.5 * tr - disc;
}

// --- catalog parsing -------------------------------------------------------

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_top(const std::string& s, char sep) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char ch : s) {
        if (ch == '{') ++depth;
        if (ch == '}') --depth;
        if (ch == sep && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::vector<double> parse_numbers(const std::string& body, const std::string& spec) {
    std::vector<double> v;
    for (const auto& tok : split_top(body, ',')) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, "operator spec '" + spec + "': bad number '" + tok + "'");
        }
        if (used != tok.size())
            throw Error(ErrorKind::config, "operator spec '" + spec + "': bad number '" + tok + "'");
        v.push_back(x);
    }
    return v;
}

}  // namespace

LevyTriplet laplacian(int dims) {
    LevyTriplet t;
    t.dims = dims;
    t.diffusion[0][0] = 1.0;
    if (dims == 2) t.diffusion[1][1] = 1.0;
    t.name = "laplacian";
    return t;
}

LevyTriplet fractional_laplacian(int dims, double alpha) {
    require(alpha > 0.0 && alpha < 2.0, "frac: alpha must lie in (0, 2)");
    LevyTriplet t;
    t.dims = dims;
    t.jumps.push_back(FractionalLaplacian{alpha});
    std::ostringstream os;
    os << "frac{" << alpha << "}";
    t.name = os.str();
    return t;
}

LevyTriplet anisotropic_stable(double a0, double a1) {
    require(a0 > 1.0 && a0 < 2.0 && a1 > 1.0 && a1 < 2.0, "aniso: orders must lie in (1, 2)");
    LevyTriplet t;
    t.dims = 2;
    t.jumps.push_back(AnisotropicStable{{a0, a1}});
    std::ostringstream os;
    os << "aniso{" << a0 << "," << a1 << "}";
    t.name = os.str();
    return t;
}

LevyTriplet riesz_feller(double alpha) {
    require(alpha > 0.0 && alpha < 2.0 && alpha != 1.0,
            "riesz_feller: alpha must lie in (0, 2) and differ from 1");
    LevyTriplet t;
    t.dims = 1;
    t.jumps.push_back(RieszFeller{alpha});
    std::ostringstream os;
    os << "riesz_feller{" << alpha << "}";
    t.name = os.str();
    return t;
}

LevyTriplet cgmy(double C, double G, double M, double Y) {
    require(C > 0.0 && G > 0.0 && M > 0.0, "cgmy: C, G, M must be positive");
    require(Y > 0.0 && Y < 2.0, "cgmy: Y must lie in (0, 2)");
    LevyTriplet t;
    t.dims = 1;
    t.jumps.push_back(Cgmy{C, G, M, Y});
    std::ostringstream os;
    os << "cgmy{" << C << "," << G << "," << M << "," << Y << "}";
    t.name = os.str();
    return t;
}

LevyTriplet numeric_density(NumericDensity spec) {
    require(static_cast<bool>(spec.density), "numeric density: no density supplied");
    LevyTriplet t;
    t.dims = 1;
    t.jumps.push_back(std::move(spec));
    t.name = "numeric";
    return t;
}

LevyTriplet mix(const std::vector<LevyTriplet>& parts) {
    require(!parts.empty(), "mix: no parts");
    LevyTriplet t;
    t.dims = parts.front().dims;
    std::string name = "mix{";
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const auto& q = parts[p];
        require(q.dims == t.dims, "mix: dimension mismatch");
        for (int i = 0; i < 2; ++i) {
            t.drift[i] += q.drift[i];
            for (int j = 0; j < 2; ++j) t.diffusion[i][j] += q.diffusion[i][j];
        }
        t.jumps.insert(t.jumps.end(), q.jumps.begin(), q.jumps.end());
        name += (p ? "+" : "") + q.name;
    }
    t.name = name + "}";
    return t;
}

LevyTriplet parse_operator(const std::string& raw, int dims) {
    const std::string spec = trim(raw);
    require(dims == 1 || dims == 2, "operator: dims must be 1 or 2", ErrorKind::config);
    if (spec == "laplacian") return laplacian(dims);
    const auto open = spec.find('{');
    if (open == std::string::npos || spec.back() != '}')
        throw Error(ErrorKind::config, "unknown operator spec '" + spec + "'");
    const std::string head = spec.substr(0, open);
    const std::string body = spec.substr(open + 1, spec.size() - open - 2);
    try {
        if (head == "mix") {
            std::vector<LevyTriplet> parts;
            for (const auto& s : split_top(body, '+')) parts.push_back(parse_operator(s, dims));
            return mix(parts);
        }
        const auto v = parse_numbers(body, spec);
        auto need = [&](std::size_t k) {
            if (v.size() != k)
                throw Error(ErrorKind::config, "operator spec '" + spec + "': expected " +
                                                   std::to_string(k) + " parameters");
        };
        auto need_1d = [&]() {
            if (dims != 1)
                throw Error(ErrorKind::config, "operator '" + head + "' is one-dimensional");
        };
        if (head == "frac") {
            need(1);
            return fractional_laplacian(dims, v[0]);
        }
        if (head == "aniso") {
            need(2);
            if (dims != 2) throw Error(ErrorKind::config, "aniso requires a 2D grid");
            return anisotropic_stable(v[0], v[1]);
        }
        if (head == "riesz_feller") {
            need(1);
            need_1d();
            return riesz_feller(v[0]);
        }
        if (head == "cgmy") {
            need(4);
            need_1d();
            return cgmy(v[0], v[1], v[2], v[3]);
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) throw;
        throw Error(ErrorKind::config, "operator spec '" + spec + "': " + e.what());
    }
    throw Error(ErrorKind::config, "unknown operator spec '" + spec + "'");
}

void validate(const LevyTriplet& t) {
    require(t.dims == 1 || t.dims == 2, "triplet: dims must be 1 or 2");
    const Mat2& A = t.diffusion;
    require(std::abs(A[0][1] - A[1][0]) <= 1e-14, "triplet: diffusion matrix not symmetric");
    require(min_eigenvalue(A, t.dims) >= -1e-12, "triplet: diffusion matrix not PSD");
    for (const auto& j : t.jumps)
        if (t.dims == 2 && one_dimensional_only(j))
            throw Error(ErrorKind::invalid_argument, "triplet: jump component is 1D only");
    if (t.alpha_low) require(*t.alpha_low > 1.0 && *t.alpha_low <= 2.0, "triplet: alpha_low outside (1, 2]");
}

Complex symbol_at(const LevyTriplet& t, const Vec2& xi) {
    const int d = t.dims;
    double bxi = t.drift[0] * xi[0];
    double q = t.diffusion[0][0] * xi[0] * xi[0];
    if (d == 2) {
        bxi += t.drift[1] * xi[1];
        q += 2.0 * t.diffusion[0][1] * xi[0] * xi[1] + t.diffusion[1][1] * xi[1] * xi[1];
    }
    Complex psi(q, -bxi);
    for (const auto& j : t.jumps) psi += jump_symbol(j, d, xi);
    return psi;
}

std::vector<Complex> symbol_eval(const LevyTriplet& t, const Grid& grid) {
    validate(t);
    require(t.dims == grid.dims(), "symbol_eval: triplet and grid dimensions differ");
    // Quadrature-backed components are prepared once for the whole grid.
    std::vector<std::unique_ptr<DensityQuadrature>> quads;
    std::vector<NumericDensity> owned;
    owned.reserve(t.jumps.size());
    LevyTriplet closed = t;
    closed.jumps.clear();
    for (const auto& j : t.jumps) {
        if (const auto* nd = std::get_if<NumericDensity>(&j)) {
            owned.push_back(*nd);
        } else if (const auto* c = std::get_if<Cgmy>(&j); c && c->Y == 1.0) {
            owned.push_back(cgmy_as_density(*c));
        } else {
            closed.jumps.push_back(j);
        }
    }
    for (const auto& nd : owned) quads.push_back(std::make_unique<DensityQuadrature>(nd));
    auto psi = build_multiplier(grid, [&](const Vec2& xi) {
        Complex v = symbol_at(closed, xi);
        for (const auto& q : quads) v += q->symbol(xi[0]);
        return v;
    });
    psi[0] = 0.0;  // Psi(0) = 0 exactly
    for (const auto& v : psi) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw Error(ErrorKind::quadrature, "symbol_eval: non-finite symbol value");
        if (v.real() < -1e-12)
            throw Error(ErrorKind::invalid_argument, "symbol_eval: Re Psi < 0 on the grid");
    }
    return psi;
}

double order_alpha(const LevyTriplet& t) {
    if (t.alpha_low) return *t.alpha_low;
    if (min_eigenvalue(t.diffusion, t.dims) > 1e-12) return 2.0;
    require(!t.jumps.empty(), "order_alpha: operator has no regularizing part");
    double a = 0.0;
    for (const auto& j : t.jumps) a = std::max(a, component_order(j));
    return a;
}

bool is_symmetric(const LevyTriplet& t) {
    if (t.drift[0] != 0.0 || t.drift[1] != 0.0) return false;
    for (const auto& j : t.jumps) {
        if (std::holds_alternative<RieszFeller>(j)) return false;
        if (const auto* c = std::get_if<Cgmy>(&j); c && c->G != c->M) return false;
        if (std::holds_alternative<NumericDensity>(j)) return false;
    }
    return true;
}

double stable_constant(int dims, double alpha) {
    return alpha * std::pow(2.0, alpha - 1.0) * boost::math::tgamma(0.5 * (dims + alpha)) /
           (std::pow(kPi, 0.5 * dims) * boost::math::tgamma(1.0 - 0.5 * alpha));
}

JumpMoments jump_moments(const LevyTriplet& t, const std::function<double(double)>& psi) {
    JumpMoments jm;
    tanh_sinh<double> ts;
    exp_sinh<double> es;
    const double inf = std::numeric_limits<double>::infinity();
    auto add_1d = [&](const std::function<double(double)>& nu_pos) {
        // z^2 underflows before nu(z) overflows near 0.
        jm.small_second_moment += ts.integrate(
            [&](double z) { return z < 1e-100 ? 0.0 : z * z * nu_pos(z); }, 0.0, 1.0);
        jm.tail_psi += es.integrate([&](double z) { return psi(z) * nu_pos(z); }, 1.0, inf);
    };
    for (const auto& j : t.jumps) {
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, FractionalLaplacian>) {
                    const double k = stable_constant(t.dims, c.alpha);
                    if (t.dims == 1) {
                        add_1d([&](double z) { return 2.0 * k * std::pow(z, -1.0 - c.alpha); });
                    } else {
                        add_1d([&](double r) { return 2.0 * kPi * k * std::pow(r, -1.0 - c.alpha); });
                    }
                } else if constexpr (std::is_same_v<T, AnisotropicStable>) {
                    for (int a = 0; a < t.dims; ++a) {
                        const double k = stable_constant(1, c.alpha[a]);
                        add_1d([&](double z) { return 2.0 * k * std::pow(z, -1.0 - c.alpha[a]); });
                    }
                } else if constexpr (std::is_same_v<T, RieszFeller>) {
                    add_1d([&](double z) { return std::pow(z, -1.0 - c.alpha); });
                } else if constexpr (std::is_same_v<T, Cgmy>) {
                    add_1d([&](double z) { return cgmy_density(c, z) + cgmy_density(c, -z); });
                } else {
                    add_1d([&](double z) { return c.density(z) + c.density(-z); });
                }
            },
            j);
    }
    return jm;
}

}  // namespace lmfg
