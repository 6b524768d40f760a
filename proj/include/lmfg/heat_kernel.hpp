#pragma once

#include <vector>

#include "lmfg/grid.hpp"
#include "lmfg/levy.hpp"
#include "lmfg/spectral.hpp"

namespace lmfg {

/// Spectral multipliers of the semigroup e^{tL} on one grid for one step size.
///
/// The adjoint semigroup uses conj(Psi); its kernel is the reflection of K_t.
/// Immutable after construction, safe for concurrent reads.
class KernelCache {
public:
    KernelCache(LevyTriplet triplet, const Grid& grid, double dt);

    const Grid& grid() const { return grid_; }
    const LevyTriplet& triplet() const { return triplet_; }
    double dt() const { return dt_; }
    double alpha() const { return alpha_; }
    const std::vector<Complex>& symbol() const { return psi_; }
    const std::vector<Complex>& step_multiplier(bool adjoint = false) const {
        return adjoint ? step_adj_ : step_;
    }

    /// e^{-t Psi} (or its conjugate) composed from the dt multiplier by binary
    /// exponentiation plus one fractional remainder.
    std::vector<Complex> multiplier(double t, bool adjoint = false) const;

    /// One step of size dt.
    Field step(const Field& f, bool adjoint = false) const;
    /// One step followed by a translation: result(x) = (P f)(x + shift_rate * dt).
    Field step_shifted(const Field& f, bool adjoint, const Vec2& shift_rate) const;
    Field apply(double t, const Field& f, bool adjoint = false) const;

    /// L f (or L* f) through the symbol.
    Field generator(const Field& f, bool adjoint = false) const;

    /// D^beta K_t sampled at the nodes, centered at x = 0 (node n/2).
    Field kernel_field(double t, bool adjoint = false, const MultiIndex& beta = {0, 0}) const;

    /// max |e^{-t Psi}| over modes with a Nyquist component.
    double nyquist_tail(double t) const;
    /// Smallest power-of-two point count per axis that resolves e^{-t Psi} to 1e-12.
    int required_points(double t) const;

private:
    LevyTriplet triplet_;
    Grid grid_;
    double dt_;
    double alpha_;
    std::vector<Complex> psi_;
    std::vector<Complex> step_;
    std::vector<Complex> step_adj_;
    std::vector<Mode> modes_;
};

Field kernel_field(const KernelCache& cache, double t);
Field semigroup_apply(const KernelCache& cache, double t, const Field& f);

struct KReport {
    double alpha = 0.0;
    MultiIndex beta{0, 0};
    double K_hat = 0.0;
    double slope = 0.0;
    double expected_slope = 0.0;
    bool pass = false;
    std::vector<double> times;
    std::vector<double> norms;
    /// Slopes between consecutive sample times; for mixed operators these show
    /// the transition between component orders.
    std::vector<double> local_slopes;
};

/// Fits the log-log slope of ||D^beta K_t||_1 over the given times.
KReport verify_K_assumption(const LevyTriplet& triplet, const Grid& grid, const MultiIndex& beta,
                            const std::vector<double>& times);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lmfg
