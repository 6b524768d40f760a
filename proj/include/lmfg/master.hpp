#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "lmfg/linearized.hpp"
#include "lmfg/mfg.hpp"

namespace lmfg {

/// Everything that defines U(t0, x, m0) except (t0, m0). The time step is the
/// kernel cache step; every t0 must sit on the lattice T - k dt.
struct MasterScenario {
    std::shared_ptr<const KernelCache> kernel;
    Hamiltonian H = quadratic_hamiltonian();
    Coupling F = zero_coupling();
    Coupling G = zero_coupling();
    double T = 1.0;
    /// Tight by default: U differences are divided by small steps.
    IterationOptions iteration{0.5, 200, 1e-10, 5};
    LinOptions linear;
    D0Options gap_metric;
    bool enforce_budget = true;
    /// y-batch cap per axis for the J kernel; finer grids use a strided y-subgrid.
    int max_y_per_axis = 128;

    const Grid& grid() const { return kernel->grid(); }
    double dt() const { return kernel->dt(); }
    /// Steps from t0 to T; rejects t0 off the lattice or beyond T.
    int steps_from(double t0) const;
    MfgProblem problem(double t0, const Measure& m0) const;
};

/// U(t0, ., m0) = u(t0, .) of the MFG started at (t0, m0), with solves cached.
/// Safe to call from several threads; a key computed twice is stored once.
class MasterField {
public:
    explicit MasterField(MasterScenario s) : scenario_(std::move(s)) {}
    const MasterScenario& scenario() const { return scenario_; }

    /// G(., m0) directly when t0 = T; otherwise a converged solve (throws on non-convergence).
    Field U(double t0, const Measure& m0);
    /// Full solution behind U; t0 < T.
    std::shared_ptr<const MfgSolution> solution(double t0, const Measure& m0);
    std::size_t cache_size() const;

private:
    struct Entry {
        double t0;
        Field m0;
        std::shared_ptr<const MfgSolution> sol;
    };
    MasterScenario scenario_;
    mutable std::mutex mu_;
    std::vector<Entry> cache_;
};

struct DerivativeOptions {
    /// Pair through the explicit J matrix instead of one linear solve with rho0 = m0' - m0.
    bool explicit_J = false;
    /// Added to every J entry (explicit mode only); zero-mass pairings must not see it.
    double J_shift = 0.0;
};

struct DerivativeTable {
    std::vector<double> h;
    std::vector<double> defect;
    double slope = 0.0;
    /// All defects below 1e-10: U is flat in m along this direction.
    bool flat = false;
    bool pass = false;
    std::vector<std::string> notes;
};

/// defect(h) = ||U(t0, (1-h) m0 + h m0') - U(t0, m0) - h <J, m0' - m0>||_inf;
/// pass iff the log-log slope is >= 1.2 (or every defect is <= 1e-10).
DerivativeTable derivative_check(MasterField& U, double t0, const Measure& m0, const Measure& m0_prime,
                                 const std::vector<double>& h_list, const DerivativeOptions& opt = {});

/// J(x, y) over all y (or the strided y-subgrid) as columns of a matrix.
struct JKernel {
    Grid y_grid;
    std::vector<std::size_t> y_nodes;
    Eigen::MatrixXd J;
    int stride = 1;
};
JKernel j_kernel(MasterField& U, double t0, const Measure& m0);

struct ResidualReport {
    std::vector<std::size_t> samples;
    std::vector<double> residual;
    /// Individual terms at the samples, for diagnosis.
    std::vector<double> dt_U, L_U, H_term, L_y_term, transport_term, F_term;
    double max_abs = 0.0;
    /// t0 = T: residual holds U - G instead.
    bool terminal = false;
    int y_stride = 1;
    std::vector<std::string> notes;
};

/// dt U + L_x U - H(x, D_x U) + int L_y J m0(dy) - int D_y J . D_pH(y, D_y U) m0(dy) + F(x, m0)
/// at the sample nodes; dt U by central differences of fresh solves at t0 +- dt.
ResidualReport master_residual(MasterField& U, double t0, const Measure& m0,
                               const std::vector<std::size_t>& samples);

struct FlowReport {
    double s = 0.0;
    double gap = 0.0;
    double u_gap = 0.0;
    double m_gap = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::vector<std::string> notes;
};

/// Restart the MFG at (s, m(s)) of the base solve; gap = sup_{t >= s} ||u' - u||_inf + d0(m', m).
/// pass iff gap <= 20 tol_d0.
FlowReport flow_consistency(MasterField& U, double t0, const Measure& m0, double s);

struct TimeStabilityReport {
    std::vector<double> h;
    std::vector<double> diff;
    /// diff / sqrt(h)
    std::vector<double> constant;
    bool pass = false;
};

/// ||U(t0) - U(t0 - h)||_inf for each h; pass iff the constant fitted at the
/// largest h bounds the others within 10%.
TimeStabilityReport t0_stability(MasterField& U, double t0, const Measure& m0, const std::vector<double>& h_list);

}  // namespace lmfg
