#pragma once

#include <vector>

#include "lmfg/heat_kernel.hpp"
#include "lmfg/measure.hpp"
#include "lmfg/trajectory.hpp"

namespace lmfg {

struct FpOptions {
    bool enforce_budget = true;
    /// Relative mass drift that counts as an instability (checked without sources).
    double mass_tol = 1e-6;
};

/// rho_t = L* rho + div(b rho) + div(c), stepped as
/// rho_{k+1} = (I + dt div(b~_{k+1} .)) Q*_{k+1} rho_k + dt div(c_{k+1}),
/// where Q* is the adjoint semigroup step translated by the constant drift part.
/// This is the exact transpose of the backward step in solve_backward.
struct ForwardProblem {
    const KernelCache* kernel = nullptr;
    const Drift* drift = nullptr;
    const VectorTrajectory* flux = nullptr;
    Field rho0;
    double t0 = 0.0;
    double T = 1.0;
    int steps = 1;
    /// If set, receives Q*_{k} rho_{k-1} for k = 1..N (slot 0 holds rho0).
    std::vector<Field>* smoothed = nullptr;
};
Trajectory solve_forward(const ForwardProblem& p, const FpOptions& opt = {});

Trajectory solve_fp(const KernelCache& kernel, const Drift& b, const Field& rho0, const VectorTrajectory* c,
                    double t0, double T, int steps, const FpOptions& opt = {});

/// |<phi, rho_k> - <phi, rho_0> - int_0^{t_k} (<L phi - b . D phi, rho> - <D phi, c>) ds|
/// with trapezoid quadrature in time.
double weak_residual(const KernelCache& kernel, const Trajectory& rho, const Drift* b,
                     const VectorTrajectory* c, const Field& phi, int k);

struct TightnessReport {
    std::vector<double> series;
    std::vector<double> bound;
    double rate = 0.0;
    bool pass = true;
};
/// Bound on sup_x L psi from the triplet: |B| g + tr(A) h + h/2 int_{|z|<1}|z|^2 nu
/// + int_{|z|>=1} (psi + slack) nu, with g, h the derivative bounds of psi.
double generator_bound(const LevyTriplet& t, const TightnessFn& psi);
/// series(t) = int psi m(t); bound(t) = series(0) + t (rate + g ||b||_inf).
TightnessReport tightness_report(const Trajectory& m, const TightnessFn& psi, double generator_rate,
                                 double drift_sup);

}  // namespace lmfg
