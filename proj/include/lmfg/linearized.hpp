#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmfg/coupling.hpp"
#include "lmfg/heat_kernel.hpp"
#include "lmfg/measure.hpp"
#include "lmfg/mfg.hpp"
#include "lmfg/trajectory.hpp"

namespace lmfg {

/// Forward-backward linear system around a flow m:
///   -z_t - L z + V . Dz = <dF/dm(x, m(t), .), rho(t)> + b,   z(T) = <dG/dm(x, m(T), .), rho(T)> + z_T,
///    rho_t = L* rho + div(V rho) + div(m Gamma Dz + c),     rho(t0) = rho0.
/// Stepped as the exact linearization of the discrete MFG step: slice k + 1 of
/// V, Gamma and the flux density drives the step k -> k + 1.
struct LinSystem {
    std::shared_ptr<const KernelCache> kernel;
    double t0 = 0.0;
    double T = 1.0;
    int steps = 1;
    Drift V;
    std::vector<SymMatField> Gamma;
    /// Base flow m_k (couplings are linearized here).
    std::vector<Field> m;
    /// Density multiplying Gamma Dz in step k-1 -> k (P* m_{k-1} for MFG linearizations).
    std::vector<Field> m_flux;
    Coupling dF = zero_coupling();
    Coupling dG = zero_coupling();
    /// Optional data; empty means zero.
    std::optional<Trajectory> b;
    std::optional<VectorTrajectory> c;
    Field z_T;
    Field rho0;
    /// Ellipticity constant: eigenvalues of Gamma must lie in [1/c, c].
    double gamma_bound = 1.0;

    const Grid& grid() const { return kernel->grid(); }
    /// Shapes, grids and the ellipticity probe of Gamma (tolerance 1e-10).
    void validate() const;
};

/// V = D_pH(Du), Gamma = D2_ppH(Du), m and m_flux from the solution; all data zero.
LinSystem linearize(const MfgProblem& p, const MfgSolution& s);

struct LinOptions {
    double damping = 0.5;
    int max_iters = 400;
    /// Stop once sup_t d0-norm(rho_new - rho) falls below this.
    double tol = 1e-12;
    bool enforce_budget = true;
    D0Options gap_metric;
};

struct LinSolution {
    Trajectory z;
    Trajectory rho;
    int iterations = 0;
    bool converged = false;
    std::vector<double> gap_history;
    /// Data size M = ||z_T||_inf + sup ||b||_inf + sup ||c||_1 + d0-norm(rho0).
    double data_norm = 0.0;
    /// (sup_t ||z||_inf + sup_t d0-norm(rho)) / M; 0 when M = 0.
    double apriori_ratio = 0.0;
    std::vector<std::string> notes;
};

/// Damped alternation: rho^0 is the forward solve without feedback; then
/// z = backward(rho^j), rho^{j+1} = (1 - damping) rho^j + damping forward(z).
/// max_iters = 1 returns the first backward iterate.
LinSolution solve_linear_system(const LinSystem& sys, const LinOptions& opt = {});

struct DualityReport {
    /// dt sum_{k>=1} <Dz_k, m_flux_k Gamma_k Dz_k>
    double lhs = 0.0;
    /// <z_0, rho0> - <z_T, rho_N> - dt sum <b, rho> - dt sum <Dz, c> - coupling terms
    double rhs = 0.0;
    /// dt sum_{k<N} <<dF/dm, rho_k>, rho_k> and <<dG/dm, rho_N>, rho_N>
    double coupling_F = 0.0;
    double coupling_G = 0.0;
    double relative_gap = 0.0;
    bool pass = false;
};
/// Both sides evaluated separately; pass iff relative gap <= 1e-4 and both coupling terms >= -1e-8.
DualityReport duality_identity(const LinSystem& sys, const LinSolution& sol);

/// rho0 for J at node y: a grid delta mollified once with width 2 dx_max.
Field mollified_point_mass(const Grid& grid, std::size_t y);

/// z_y(t0, .) for rho0 = mollified delta at y and all other data zero.
Field j_field(const LinSystem& base, std::size_t y, const LinOptions& opt = {});
/// J(x, y) = z_y(t0, x) for the listed nodes y (columns). Parallel over y;
/// failures are rethrown tagged with the node.
Eigen::MatrixXd j_field_batch(const LinSystem& base, const std::vector<std::size_t>& ys,
                              const LinOptions& opt = {});

}  // namespace lmfg
