#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lmfg/grid.hpp"
#include "lmfg/spectral.hpp"

namespace lmfg {

/// Isotropic stable jumps with symbol |xi|^alpha, alpha in (0, 2).
struct FractionalLaplacian {
    double alpha;
};

/// Axis-wise stable jumps with symbol sum_i |xi_i|^{alpha_i}.
struct AnisotropicStable {
    std::array<double, 2> alpha;
};

/// One-sided 1D stable jumps with density 1_{z>0} z^{-1-alpha}.
struct RieszFeller {
    double alpha;
};

/// Tempered stable jumps: C e^{-G|z|}|z|^{-1-Y} for z<0, C e^{-Mz} z^{-1-Y} for z>0.
struct Cgmy {
    double C, G, M, Y;
};

/// 1D jump density given pointwise; the symbol comes from quadrature.
struct NumericDensity {
    std::function<double(double)> density;
    std::optional<double> order;
    double small_cutoff = 1e-10;   ///< inner end of the log-spaced small-jump range
    double tail_mass = 1e-12;      ///< truncate where the remaining jump mass is below this
    double rel_tol = 1e-12;
};

using JumpComponent =
    std::variant<FractionalLaplacian, AnisotropicStable, RieszFeller, Cgmy, NumericDensity>;

/// Drift B, Gaussian part A and a sum of jump components.
///
/// L u = B.Du + div(A Du) + int (u(x+z) - u(x) - Du.z 1_{|z|<1}) nu(dz), with
/// symbol Psi(xi) = -i B.xi + xi.A xi + jump part, so that L = -F^{-1} Psi F.
struct LevyTriplet {
    int dims = 1;
    Vec2 drift{0.0, 0.0};
    Mat2 diffusion{{{0.0, 0.0}, {0.0, 0.0}}};
    std::vector<JumpComponent> jumps;
    std::optional<double> alpha_low;
    std::string name;
};

LevyTriplet laplacian(int dims);
LevyTriplet fractional_laplacian(int dims, double alpha);
LevyTriplet anisotropic_stable(double alpha0, double alpha1);
LevyTriplet riesz_feller(double alpha);
LevyTriplet cgmy(double C, double G, double M, double Y);
LevyTriplet numeric_density(NumericDensity spec);
/// Sum of operators: drifts and diffusions add, jump lists concatenate.
LevyTriplet mix(const std::vector<LevyTriplet>& parts);

/// Parses "laplacian", "frac{a}", "aniso{a1,a2}", "riesz_feller{a}",
/// "cgmy{C,G,M,Y}" and "mix{spec+spec+...}".
LevyTriplet parse_operator(const std::string& spec, int dims);

void validate(const LevyTriplet& t);

/// Psi at one wavenumber.
Complex symbol_at(const LevyTriplet& t, const Vec2& xi);

/// Psi on the half spectrum of the grid (Nyquist modes symmetrized).
std::vector<Complex> symbol_eval(const LevyTriplet& t, const Grid& grid);

/// The exponent alpha of the L1 derivative bound for the heat kernel.
double order_alpha(const LevyTriplet& t);

/// True when the symbol is real (symmetric operator).
bool is_symmetric(const LevyTriplet& t);

/// Jump-measure moments used by the tightness bound.
struct JumpMoments {
    double small_second_moment = 0.0;  ///< int_{|z|<1} |z|^2 nu(dz)
    double tail_psi = 0.0;             ///< int_{|z|>=1} psi(z) nu(dz)
};
JumpMoments jump_moments(const LevyTriplet& t, const std::function<double(double)>& radial_psi);

/// Normalizing constant of the isotropic alpha-stable density c |z|^{-d-alpha}.
double stable_constant(int dims, double alpha);

}  // namespace lmfg
