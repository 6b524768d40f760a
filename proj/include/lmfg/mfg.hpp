#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmfg/coupling.hpp"
#include "lmfg/fokker_planck.hpp"
#include "lmfg/hamiltonian.hpp"
#include "lmfg/heat_kernel.hpp"
#include "lmfg/hjb.hpp"
#include "lmfg/measure.hpp"

namespace lmfg {

struct IterationOptions {
    double damping = 0.5;
    int max_iters = 100;
    /// Stop once sup_t d0(S(mu)(t), mu(t)) falls below this.
    double tol_d0 = 1e-6;
    /// Consecutive gap increases that trigger halving the damping.
    int patience = 5;
};

/// Halves the damping after `patience` consecutive gap increases.
struct DampingSchedule {
    double lambda = 0.5;
    int patience = 5;
    int rising = 0;
    double last = -1.0;
    /// Records one gap; true when the damping was halved.
    bool observe(double gap);
};

/// -u_t - L u + H(x, u, Du) = F(x, m(t)), u(T) = G(x, m(T));
///  m_t = L* m + div(D_pH(x, u, Du) m), m(t0) = m0.
struct MfgProblem {
    std::shared_ptr<const KernelCache> kernel;
    Hamiltonian H = quadratic_hamiltonian();
    Coupling F = zero_coupling();
    Coupling G = zero_coupling();
    Measure m0;
    double t0 = 0.0;
    double T = 1.0;
    int steps = 1;
    IterationOptions iteration;
    /// Single-pass backward steps keep the discrete linearization exact.
    int hjb_sweeps = 0;
    bool enforce_budget = true;
    /// Metric used for the stopping gap; 2D grids above max_cells are coarsened.
    D0Options gap_metric;
    /// Starting flow mu^0 (steps + 1 densities); default is m0 frozen in time.
    std::optional<std::vector<Field>> initial_guess;

    void validate() const;
};

/// One application of the best-response map: HJB against mu, then FP along its drift.
struct BestResponse {
    Trajectory u;
    Trajectory m;
    /// P* m_{k-1} for k >= 1 (slot 0 is m0): the density the drift acts on in step k.
    std::vector<Field> m_flux;
};
BestResponse best_response(const MfgProblem& p, const std::vector<Field>& mu);

/// Drift slices D_pH(x, u_k, Du_k).
Drift optimal_drift(const Hamiltonian& H, const Trajectory& u);

struct MfgSolution {
    Trajectory u;
    /// Raw densities; undershoots are kept (see measure()).
    Trajectory m;
    std::vector<Field> m_flux;
    int iterations = 0;
    bool converged = false;
    /// sup_t d0(S(mu^k), mu^k) per outer iteration.
    std::vector<double> gap_history;
    double final_damping = 0.0;
    std::vector<std::string> notes;

    /// Slice k clamped and renormalized to a Measure.
    Measure measure(int k) const;
};

/// Damped Picard iteration mu <- (1 - lambda) mu + lambda S(mu). Non-convergence
/// returns the iterate with the smallest gap and converged = false.
MfgSolution solve_mfg(const MfgProblem& p);

/// sup_k d0(a_k, b_k) over two flows on the same time grid.
double sup_d0(const Trajectory& a, const Trajectory& b, const D0Options& opt = {});

struct LasryLionsReport {
    /// Convexity integral of both solutions (nonnegative for convex H).
    double cross_term = 0.0;
    double rhs = 0.0;
    bool u_dependent = false;
    double c2 = 0.0;
    bool pass = false;
};
/// Time integrals use the discrete flux densities m_flux so that, for exact
/// discrete solutions, cross_term = <u1 - u2, m1 - m2>(t0) minus the coupling
/// monotonicity terms. For u-dependent separable H the right side is
/// a(t0) + c2 dt sum_k a_k with a = int (u1-u2)^+ (m1-m2)^+ + (u1-u2)^- (m1-m2)^-.
/// c2 < 0 means: take the largest D_uH seen on either solution.
LasryLionsReport lasry_lions_check(const MfgSolution& s1, const MfgSolution& s2, const Hamiltonian& H,
                                   double c2 = -1.0);

struct StabilityProbe {
    std::vector<double> d0_initial;
    std::vector<double> d0_flow;
    std::vector<double> u_gap;
    std::vector<double> ratios;
    /// max ratio / min ratio
    double spread = 0.0;
    bool pass = false;
};
/// Ratio (sup_t d0(m1, m2) + sup_t ||u1 - u2||_inf) / d0(m0, m0') for each perturbed
/// initial measure; pass iff spread <= band. Solves run in parallel.
StabilityProbe lipschitz_stability_probe(const MfgProblem& p, const std::vector<Measure>& perturbed,
                                         double band = 10.0);

}  // namespace lmfg
