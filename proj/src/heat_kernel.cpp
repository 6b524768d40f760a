#include "lmfg/heat_kernel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lmfg/errors.hpp"

namespace lmfg {

namespace {

constexpr double kResolved = 1e-12;

std::vector<Complex> exp_multiplier(const std::vector<Complex>& psi, double t, bool adjoint) {
    std::vector<Complex> m(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i)
        m[i] = std::exp(-t * (adjoint ? std::conj(psi[i]) : psi[i]));
    return m;
}

}  // namespace

KernelCache::KernelCache(LevyTriplet triplet, const Grid& grid, double dt)
    : triplet_(std::move(triplet)), grid_(grid), dt_(dt) {
    require(dt > 0.0 && std::isfinite(dt), "kernel cache: dt must be positive");
    psi_ = symbol_eval(triplet_, grid_);
    alpha_ = order_alpha(triplet_);
    step_ = exp_multiplier(psi_, dt_, false);
    step_adj_ = exp_multiplier(psi_, dt_, true);
    step_[0] = 1.0;
    step_adj_[0] = 1.0;
    modes_ = half_spectrum_modes(grid_);
}

std::vector<Complex> KernelCache::multiplier(double t, bool adjoint) const {
    require(t >= 0.0, "semigroup: negative time");
    const auto& base = step_multiplier(adjoint);
    auto k = static_cast<long long>(std::floor(t / dt_ * (1.0 + 1e-14)));
    double rest = t - static_cast<double>(k) * dt_;
    if (rest < 0.0) rest = 0.0;

    std::vector<Complex> out(base.size(), Complex(1.0, 0.0));
    std::vector<Complex> power = base;
    while (k > 0) {
        if (k & 1)
            for (std::size_t i = 0; i < out.size(); ++i) out[i] *= power[i];
        k >>= 1;
        if (k > 0)
            for (auto& p : power) p *= p;
    }
    if (rest > 0.0) {
        const auto frac = exp_multiplier(psi_, rest, adjoint);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= frac[i];
    }
    out[0] = 1.0;
    return out;
}

Field KernelCache::step(const Field& f, bool adjoint) const {
    require_same_grid(grid_, f.grid(), "semigroup step");
    return apply_multiplier(f, step_multiplier(adjoint));
}

Field KernelCache::step_shifted(const Field& f, bool adjoint, const Vec2& a) const {
    require_same_grid(grid_, f.grid(), "semigroup step");
    if (a[0] == 0.0 && a[1] == 0.0) return step(f, adjoint);
    const auto& base = step_multiplier(adjoint);
    const auto shift = build_multiplier(grid_, [&](const Vec2& xi) {
        const double phase = dt_ * (a[0] * xi[0] + (grid_.dims() == 2 ? a[1] * xi[1] : 0.0));
        return Complex(std::cos(phase), std::sin(phase));
    });
    std::vector<Complex> m(base.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = base[i] * shift[i];
    return apply_multiplier(f, m);
}

Field KernelCache::apply(double t, const Field& f, bool adjoint) const {
    require_same_grid(grid_, f.grid(), "semigroup apply");
    if (t == 0.0) return f;
    return apply_multiplier(f, multiplier(t, adjoint));
}

Field KernelCache::generator(const Field& f, bool adjoint) const {
    require_same_grid(grid_, f.grid(), "generator");
    std::vector<Complex> m(psi_.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = -(adjoint ? std::conj(psi_[i]) : psi_[i]);
    return apply_multiplier(f, m);
}

double KernelCache::nyquist_tail(double t) const {
    double tail = 0.0;
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        const auto& md = modes_[i];
        bool edge = std::abs(md.xi[0]) == std::abs(grid_.wavenumber(0, grid_.n(0) / 2));
        if (grid_.dims() == 2)
            edge = edge || std::abs(md.xi[1]) == std::abs(grid_.wavenumber(1, grid_.n(1) / 2));
        if (edge) tail = std::max(tail, std::exp(-t * psi_[i].real()));
    }
    return tail;
}

int KernelCache::required_points(double t) const {
    int needed = 8;
    for (int axis = 0; axis < grid_.dims(); ++axis) {
        int n = 8;
        while (n <= (1 << 22)) {
            Vec2 xi{0.0, 0.0};
            xi[axis] = std::numbers::pi * (n / 2) / grid_.half_width(axis);
            if (std::exp(-t * symbol_at(triplet_, xi).real()) < kResolved) break;
            n *= 2;
        }
        needed = std::max(needed, n);
    }
    return needed;
}

Field KernelCache::kernel_field(double t, bool adjoint, const MultiIndex& beta) const {
    require(t > 0.0, "kernel_field: t must be positive");
    const double tail = nyquist_tail(t);
    if (tail >= kResolved) {
        const int n = required_points(t);
        throw ResolutionError("kernel_field: e^{-t Psi} not resolved at t = " + std::to_string(t) +
                                  " (Nyquist tail " + std::to_string(tail) + "), need n >= " +
                                  std::to_string(n) + " per axis",
                              n);
    }
    auto m = multiplier(t, adjoint);
    if (beta[0] + beta[1] > 0) {
        const auto d = derivative_multiplier(grid_, beta);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] *= d[i];
    }
    // Phase (-1)^k puts x = 0 at node n/2.
    for (std::size_t i = 0; i < m.size(); ++i) m[i] *= static_cast<double>(modes_[i].parity);
    Field k = idft(Spectrum{grid_, std::move(m)});
    k *= 1.0 / grid_.cell_volume();
    return k;
}

Field kernel_field(const KernelCache& cache, double t) { return cache.kernel_field(t); }

Field semigroup_apply(const KernelCache& cache, double t, const Field& f) {
    return cache.apply(t, f);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need at least two points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

KReport verify_K_assumption(const LevyTriplet& triplet, const Grid& grid, const MultiIndex& beta,
                            const std::vector<double>& times) {
    require(times.size() >= 2, "verify_K: need at least two times");
    KReport r;
    r.beta = beta;
    r.times = times;
    const KernelCache cache(triplet, grid, times.front());
    r.alpha = cache.alpha();
    const int order = beta[0] + beta[1];
    r.expected_slope = -static_cast<double>(order) / r.alpha;
    for (double t : times) {
        const Field dk = cache.kernel_field(t, false, beta);
        double s = 0.0;
        for (double v : dk.values()) s += std::abs(v);
        const double norm = s * grid.cell_volume();
        r.norms.push_back(norm);
        r.K_hat = std::max(r.K_hat, norm * std::pow(t, order / r.alpha));
    }
    r.slope = loglog_slope(times, r.norms);
    for (std::size_t i = 1; i < times.size(); ++i)
        r.local_slopes.push_back(std::log(r.norms[i] / r.norms[i - 1]) /
                                 std::log(times[i] / times[i - 1]));
    r.pass = std::abs(r.slope - r.expected_slope) <= 0.02;
    return r;
}

}  // namespace lmfg
