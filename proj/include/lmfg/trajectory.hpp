#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lmfg/grid.hpp"

namespace lmfg {

/// N_t + 1 slices on a uniform time grid t_k = t0 + k dt.
struct Trajectory {
    Grid grid;
    double t0 = 0.0;
    double T = 1.0;
    int steps = 0;
    std::vector<Field> slices;
    std::vector<std::string> notes;

    Trajectory() = default;
    Trajectory(const Grid& g, double t0_, double T_, int steps_);

    double dt() const { return (T - t0) / steps; }
    double time(int k) const { return t0 + k * dt(); }
    Field& operator[](int k) { return slices[static_cast<std::size_t>(k)]; }
    const Field& operator[](int k) const { return slices[static_cast<std::size_t>(k)]; }
    const Field& front() const { return slices.front(); }
    const Field& back() const { return slices.back(); }
    /// All slices present, on the grid, finite.
    void validate() const;
};

using VectorTrajectory = std::vector<VectorField>;

/// Symmetric 2x2 (or 1x1) matrix field.
struct SymMatField {
    Field a00, a01, a11;
    /// (this) p, applied pointwise
    VectorField apply(const VectorField& p) const;
};

/// Transport velocity per slice: an optional constant part handled exactly by
/// the semigroup step, plus an optional field part handled explicitly.
/// Slice k+1 drives the step k -> k+1.
struct Drift {
    std::vector<Vec2> constant;
    VectorTrajectory field;

    bool empty() const { return constant.empty() && field.empty(); }
    static Drift uniform(const Vec2& v, int steps);
    static Drift from_fields(VectorTrajectory f) { return Drift{{}, std::move(f)}; }
    /// sup over slices and nodes of |b|
    double sup_norm() const;
};

}  // namespace lmfg
