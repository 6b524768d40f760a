#pragma once

#include "lmfg/grid.hpp"

namespace lmfg {

/// Probability density on the grid: nonnegative, dx^d * sum = 1.
class Measure {
public:
    static constexpr double kMassTol = 1e-9;

    Measure() = default;
    /// Zeroes magnitudes below 1e-14, then checks sign and mass.
    explicit Measure(Field density);
    /// Clamps negatives to zero and rescales to unit mass.
    static Measure normalized(Field density);

    const Field& density() const { return density_; }
    const Grid& grid() const { return density_.grid(); }
    double mass() const { return density_.integral(); }

private:
    Field density_;
};

/// Node with unit mass at the node nearest to `at`.
Measure grid_delta(const Grid& grid, const Vec2& at);
Measure gaussian_measure(const Grid& grid, const Vec2& center, double sigma);
/// Shift by the nearest whole number of nodes (periodic roll).
Measure shift(const Measure& m, const Vec2& a);

/// dx^d * sum |f|
double total_variation(const Field& f);

/// psi(x) = log(1 + sqrt(1 + |x|^2)) - log 2, with bounds on its first two derivatives.
struct TightnessFn {
    Field psi;
    double grad_bound = 0.0;
    double hess_bound = 0.0;
};
/// Additive slack in psi(x + y) <= psi(x) + psi(y) + slack.
inline constexpr double kSubadditivitySlack = 0.7;
double tightness_profile(double r);
TightnessFn make_tightness(const Grid& grid);
double generalized_moment(const Measure& m, const TightnessFn& psi);

struct D0Options {
    /// 2D problems with more cells are coarsened first.
    int max_cells = 1024;
};

/// Bounded-Lipschitz norm of a signed density. `exact` is false when the 2D
/// problem was coarsened; then the true norm lies in [lower, upper] and
/// `value` is the coarse solution.
struct D0Result {
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool exact = true;
    int coarsening = 1;
};

D0Result d0_norm_bounds(const Field& mu, const D0Options& opt = {});
double d0_norm(const Field& mu, const D0Options& opt = {});
/// d0(m, m'); rejects a mass mismatch above 1e-8.
double d0_distance(const Field& m, const Field& m_prime, const D0Options& opt = {});

/// Normalized compact bump exp(-1 / (1 - (r / eps)^2)) centered at node n/2.
Field bump_kernel(const Grid& grid, double eps);
/// Convolution with bump_kernel; needs eps >= 2 dx.
Measure mollify(const Measure& m, double eps);
Field mollify_field(const Field& f, double eps);
Measure mollified_delta(const Grid& grid, const Vec2& at, double eps);

}  // namespace lmfg
