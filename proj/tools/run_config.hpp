#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmfg/grid.hpp"
#include "lmfg/measure.hpp"

namespace lmfg::cli {

inline const std::vector<std::string> kSubcommands{"kernel", "hjb", "fp", "mfg", "linsys", "master", "check"};

struct GridSpec {
    int dims = 1;
    std::array<int, 2> n{1, 1};
    std::array<double, 2> half_width{0.0, 0.0};
    Grid make() const;
};

struct TimeSpec {
    double t0 = 0.0;
    double T = 1.0;
    int steps = 100;
    double dt() const { return (T - t0) / steps; }
};

struct Bump {
    Vec2 center{0.0, 0.0};
    double sigma = 0.5;
    double weight = 1.0;
};

/// "gaussian_mixture" (weighted Gaussians, renormalized), "delta" (mollified
/// grid delta) or "file" (binary field, normalized).
struct MeasureSpec {
    std::string type = "gaussian_mixture";
    std::vector<Bump> bumps;
    Vec2 center{0.0, 0.0};
    /// Mollifier width; 0 means none for mixtures and 2 dx for deltas.
    double mollify = 0.0;
    std::string path;
    Measure make(const Grid& g) const;
};

struct CouplingSpec {
    std::string type = "zero";
    std::string phi;
    std::string Phi = "identity";
};

struct SolverSpec {
    double damping = 0.5;
    int max_iters = 100;
    double tol_d0 = 1e-6;
    int patience = 5;
    int picard_sweeps = 2;
    bool enforce_budget = true;
    double linear_tol = 1e-12;
    int linear_max_iters = 400;
    int max_y_per_axis = 128;
    int d0_max_cells = 1024;
};

struct KernelSection {
    std::vector<int> betas{1, 2};
    std::vector<double> times{0.1, 0.158489, 0.251189, 0.398107, 0.630957, 1.0};
    double slope_tol = 0.02;
    std::vector<double> emit_times{1.0};
};

struct HjbSection {
    /// Kernel spec for the terminal cost; empty means G(., m0).
    std::string terminal;
};

struct FpSection {
    Vec2 drift{0.0, 0.0};
};

struct LinsysSection {
    std::vector<double> y{0.0};
    double duality_tol = 1e-4;
};

struct MasterSection {
    std::optional<double> t0;
    std::vector<double> samples{0.0};
    double residual_tol = 0.05;
    std::optional<MeasureSpec> m0_prime;
    std::vector<double> h{0.2, 0.1, 0.05, 0.025};
    bool J_invariance = false;
    std::optional<double> restart;
    std::vector<double> stability_h;
};

struct CheckSection {
    std::optional<CouplingSpec> coupling;
    std::string normalization = "raw";
    int trials = 10;
    std::optional<MeasureSpec> measure;
};

struct RunConfig {
    std::string scenario = "unnamed";
    std::string operator_spec;
    GridSpec grid;
    TimeSpec time;
    std::string hamiltonian = "quadratic";
    CouplingSpec F, G;
    std::optional<MeasureSpec> m0;
    SolverSpec solver;
    KernelSection kernel;
    HjbSection hjb;
    FpSection fp;
    LinsysSection linsys;
    MasterSection master;
    CheckSection check;
    std::string output = "out";
    std::uint64_t seed = 0;
};

/// Parses and range-checks a config; unknown keys, wrong types and
/// out-of-range values throw config errors naming the offending path.
RunConfig parse_run_config(const nlohmann::json& j);
/// Checks that depend on the subcommand (required sections, alpha in (1, 2] for solves).
void validate_for(const RunConfig& c, const std::string& subcommand);

}  // namespace lmfg::cli
