#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "lmfg/grid.hpp"
#include "lmfg/trajectory.hpp"

namespace lmfg {

/// H(x, u, p) with its derivatives, evaluated pointwise.
struct Hamiltonian {
    enum class Kind { quadratic, separable, general, linear };

    Kind kind = Kind::quadratic;
    /// Quadratic only: H = scale |p|^2.
    double scale = 1.0;
    /// Linear only: H = velocity . p, solved as exact transport inside the semigroup step.
    Vec2 velocity{0.0, 0.0};
    std::function<double(const Vec2&, double, const Vec2&)> H;
    std::function<Vec2(const Vec2&, double, const Vec2&)> DpH;
    std::function<Mat2(const Vec2&, double, const Vec2&)> DppH;
    /// Empty when H does not depend on u.
    std::function<double(const Vec2&, double, const Vec2&)> DuH;
    bool uniformly_convex = false;
    double convexity_c1 = 1.0;
    /// Lower bound on D_uH claimed for u-dependent Hamiltonians.
    double gamma = 0.0;
    std::string name = "quadratic";

    bool u_dependent() const { return static_cast<bool>(DuH); }
};

/// scale |p|^2; uniformly convex with c1 = max(2 scale, 1 / (2 scale)).
Hamiltonian quadratic_hamiltonian(double scale = 1.0);
/// H1(x, p) + H2(x, u).
Hamiltonian separable_hamiltonian(std::function<double(const Vec2&, const Vec2&)> H1,
                                  std::function<Vec2(const Vec2&, const Vec2&)> DpH1,
                                  std::function<Mat2(const Vec2&, const Vec2&)> DppH1,
                                  std::function<double(const Vec2&, double)> H2,
                                  std::function<double(const Vec2&, double)> DuH2, std::string name);
/// scale |p|^2 + beta u
Hamiltonian quadratic_plus_linear_u(double scale, double beta);
Hamiltonian general_hamiltonian(std::function<double(const Vec2&, double, const Vec2&)> H,
                                std::function<Vec2(const Vec2&, double, const Vec2&)> DpH,
                                std::function<Mat2(const Vec2&, double, const Vec2&)> DppH,
                                std::function<double(const Vec2&, double, const Vec2&)> DuH,
                                std::string name);

/// velocity . p
Hamiltonian linear_hamiltonian(const Vec2& velocity);

/// "quadratic", "quadratic(c)", "quadratic_u(c,beta)".
Hamiltonian parse_hamiltonian(const std::string& spec);

/// Field evaluations. Du has one component per axis.
Field eval_H(const Hamiltonian& h, const Field& u, const VectorField& Du);
VectorField eval_DpH(const Hamiltonian& h, const Field& u, const VectorField& Du);
SymMatField eval_DppH(const Hamiltonian& h, const Field& u, const VectorField& Du);

struct HamiltonianReport {
    double max_gradient_rel_error = 0.0;
    double min_hess_eig = 0.0;
    double max_hess_eig = 0.0;
    double min_DuH = 0.0;
    bool gradient_ok = false;
    bool convexity_ok = true;
    bool monotone_ok = true;
};
/// Random probes: D_pH against central differences of H (1e-6 relative),
/// Hessian eigenvalues in [1/c1 - tol, c1 + tol] when flagged convex,
/// D_uH >= gamma - tol when u-dependent.
HamiltonianReport validate_hamiltonian(const Hamiltonian& h, int dims, int probes, std::uint64_t seed,
                                       double tol = 1e-8);

}  // namespace lmfg
