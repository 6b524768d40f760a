#pragma once

#include <vector>

#include "lmfg/hamiltonian.hpp"
#include "lmfg/heat_kernel.hpp"
#include "lmfg/trajectory.hpp"

namespace lmfg {

/// dt_max = 0.5 dx_min^alpha.
double dt_budget(const KernelCache& kernel);
/// Throws a budget error when dt exceeds dt_budget and `enforce` is set; also
/// checks that the cache step matches dt.
void check_step(const KernelCache& kernel, double dt, bool enforce, const char* where);

struct HjbOptions {
    /// Trapezoid-in-time corrections on the whole interval after the first pass.
    int picard_sweeps = 2;
    bool enforce_budget = true;
    /// Growth of ||u||_inf beyond this factor of max(1, ||g||_inf) is a divergence.
    double blowup = 1e6;
};

/// Backward problem -u_t - L u + H(x, u, Du) + V . Du = f, u(T) = g, stepped in
/// reversed time as u_k = P(u_{k+1} - dt [H + V . Du]_{k+1}) + dt f_k.
/// The constant part of V shifts the semigroup step exactly.
struct BackwardProblem {
    const KernelCache* kernel = nullptr;
    const Hamiltonian* H = nullptr;
    const Drift* drift = nullptr;
    const Trajectory* source = nullptr;
    Field terminal;
    double t0 = 0.0;
    double T = 1.0;
    int steps = 1;
};
Trajectory solve_backward(const BackwardProblem& p, const HjbOptions& opt = {});

/// f may be null (zero source). A linear Hamiltonian is routed to the exact transport step.
Trajectory solve_hjb(const KernelCache& kernel, const Hamiltonian& H, const Trajectory* f, const Field& g,
                     double t0, double T, int steps, const HjbOptions& opt = {});

struct GradientReport {
    std::vector<double> sup_u, sup_Du, sup_D2u, sup_D3u;
    /// max over slices of ||u||_inf + ||Du||_inf
    double sup_C1 = 0.0;
};
GradientReport gradient_bound_report(const Trajectory& u);

}  // namespace lmfg
