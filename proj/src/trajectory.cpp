#include "lmfg/trajectory.hpp"

#include <cmath>

#include "lmfg/errors.hpp"

namespace lmfg {

Trajectory::Trajectory(const Grid& g, double t0_, double T_, int steps_)
    : grid(g), t0(t0_), T(T_), steps(steps_) {
    require(steps_ >= 1, "trajectory: need at least one time step");
    require(T_ > t0_, "trajectory: need T > t0");
    slices.assign(static_cast<std::size_t>(steps_) + 1, Field(g));
}

void Trajectory::validate() const {
    require(slices.size() == static_cast<std::size_t>(steps) + 1, "trajectory: wrong slice count");
    for (const auto& s : slices) {
        require_same_grid(grid, s.grid(), "trajectory slice");
        require(s.all_finite(), "trajectory: non-finite slice");
    }
}

VectorField SymMatField::apply(const VectorField& p) const {
    VectorField out(p.size());
    if (p.size() == 1) {
        out[0] = pointwise(a00, p[0]);
        return out;
    }
    out[0] = pointwise(a00, p[0]) + pointwise(a01, p[1]);
    out[1] = pointwise(a01, p[0]) + pointwise(a11, p[1]);
    return out;
}

Drift Drift::uniform(const Vec2& v, int steps) {
    Drift d;
    d.constant.assign(static_cast<std::size_t>(steps) + 1, v);
    return d;
}

double Drift::sup_norm() const {
    double s = 0.0;
    for (std::size_t k = 0; k < std::max(constant.size(), field.size()); ++k) {
        Vec2 c{0.0, 0.0};
        if (k < constant.size()) c = constant[k];
        if (k < field.size()) {
            const auto& f = field[k];
            for (std::size_t i = 0; i < f[0].size(); ++i) {
                const double b0 = c[0] + f[0][i];
                const double b1 = c[1] + (f.size() > 1 ? f[1][i] : 0.0);
                s = std::max(s, std::hypot(b0, b1));
            }
        } else
            s = std::max(s, std::hypot(c[0], c[1]));
    }
    return s;
}

}  // namespace lmfg
