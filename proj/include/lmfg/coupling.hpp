#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <variant>

#include "lmfg/grid.hpp"
#include "lmfg/measure.hpp"

namespace lmfg {

struct ZeroCoupling {};

/// F(x, m) = (phi * m)(x); phi is centered at node n/2.
struct ConvCoupling {
    Field phi;
};

/// F(x, m) = f(x): ignores m, so dF/dm = 0.
struct FixedCoupling {
    Field value;
};

/// Scalar map Phi(z, s) with its s-derivative.
struct LocalMap {
    std::function<double(const Vec2&, double)> value;
    std::function<double(const Vec2&, double)> ds;
    std::string name;
};
/// sign(s)|s|^p / p, whose s-derivative |s|^{p-1} is nonnegative.
LocalMap power_map(double p);

/// F(x, m) = (phi2 * Phi(., phi2 * m))(x) with phi2 even and nonnegative.
struct LocalCompositeCoupling {
    LocalMap map;
    Field phi2;
};

struct Coupling {
    std::variant<ZeroCoupling, ConvCoupling, LocalCompositeCoupling, FixedCoupling> kind;
    /// Number of resolved derivatives of the kernel (0..4).
    int smoothness = 4;
    std::string name = "zero";

    bool is_zero() const { return std::holds_alternative<ZeroCoupling>(kind); }
    bool ignores_m() const { return is_zero() || std::holds_alternative<FixedCoupling>(kind); }
};

Coupling zero_coupling();
Coupling fixed_coupling(Field value, std::string name = "fixed");
/// Checks the kernel is finite and computes the smoothness budget.
Coupling conv_coupling(Field phi, std::string name = "conv");
/// Rejects phi2 that is negative or not even.
Coupling local_coupling(LocalMap map, Field phi2, std::string name = "local");

/// Kernels by name: "gauss(s)", "gauss(s,a)", "pdbump(r)" (autocorrelation of a
/// bump, compact and positive definite), "bump(r)" (nonnegative even bump),
/// "odd(r)" (x * bump(x / r), odd).
Field parse_kernel(const std::string& spec, const Grid& grid);
/// {"type": "zero" | "conv" | "local" | "fixed"} specs; "fixed" samples the kernel spec as f(x) from the config layer.
Coupling parse_coupling(const std::string& type, const std::string& phi, const std::string& Phi,
                        const Grid& grid);

/// Bochner criterion on the grid: the convolution multiplier of phi is real
/// and nonnegative up to 1e-12 relative.
bool grid_positive_definite(const Field& phi);
/// Largest beta <= 4 with D^beta phi resolved (spectral tail <= 1e-8).
int smoothness_budget(const Field& phi);

Field eval_F(const Coupling& c, const Field& m);
Field eval_F(const Coupling& c, const Measure& m);

/// <dF/dm(x, m, .), rho>_y as a field in x, without forming the kernel.
Field pair_dmF(const Coupling& c, const Field& m, const Field& rho);

/// Row x of dF/dm(x, m, y) as a field in y.
Field dmF_row(const Coupling& c, const Field& m, std::size_t x);
/// Full kernel matrix M[x][y]; size guard: at most 256 nodes per axis and
/// 4096 nodes in total, unless `allow_large` is set.
Eigen::MatrixXd eval_dmF(const Coupling& c, const Field& m, bool allow_large = false);

struct M1Report {
    double min_value = 0.0;
    double max_abs = 0.0;
    std::vector<double> values;
    bool pass = false;
};
/// Random pairs of mollified bump mixtures; pass iff min pairing >= -1e-10.
M1Report check_M1(const Coupling& c, const Grid& grid, int trials, std::uint64_t seed);

enum class DerivativeNormalization { raw, zero_mean };

struct M2Report {
    double min_eig = 0.0;
    double max_eig = 0.0;
    bool pass = false;
    DerivativeNormalization normalization = DerivativeNormalization::raw;
};
/// Smallest eigenvalue of (M + M^T)/2 acting on mass vectors (rho_j dx^d).
/// zero_mean subtracts int dF/dm(x, m, y') m(dy') from every row.
M2Report check_M2(const Coupling& c, const Field& m,
                  DerivativeNormalization norm = DerivativeNormalization::raw);

/// Random mollified mixture of `bumps` Gaussian bumps inside the central half of the box.
Measure random_bump_mixture(const Grid& grid, int bumps, std::uint64_t seed);

}  // namespace lmfg
