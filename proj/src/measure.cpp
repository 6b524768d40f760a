#include "lmfg/measure.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <string>

#include "lmfg/errors.hpp"
#include "lmfg/spectral.hpp"

namespace lmfg {

namespace {

constexpr double kClamp = 1e-14;

// --- 1D: chain LP by dynamic programming over the vertex lattice ---
//
// maximize sum w_j phi_j, |phi_j| <= 1, |phi_{j+1} - phi_j| <= dx.
// At a vertex every phi_j is +-1 plus a multiple of dx, so the DP over the
// lattice {1 - k dx} U {-1 + k dx} is exact.
double chain_lp(const std::vector<double>& w, double dx) {
    std::vector<double> vals;
    const int K = static_cast<int>(std::floor(2.0 / dx + 1e-9));
    for (int k = 0; k <= K; ++k) {
        vals.push_back(1.0 - k * dx);
        vals.push_back(-1.0 + k * dx);
    }
    std::sort(vals.begin(), vals.end());
    std::vector<double> v;
    for (double x : vals)
        if (v.empty() || x - v.back() > 1e-12) v.push_back(x);
    const std::size_t S = v.size();
    const double reach = dx * (1.0 + 1e-10);

    std::vector<double> best(S), next(S);
    for (std::size_t s = 0; s < S; ++s) best[s] = w[0] * v[s];
    for (std::size_t j = 1; j < w.size(); ++j) {
        // sliding-window max of best over |v_t - v_s| <= dx
        std::deque<std::size_t> dq;
        std::size_t hi = 0;
        std::size_t lo = 0;
        for (std::size_t s = 0; s < S; ++s) {
            while (hi < S && v[hi] <= v[s] + reach) {
                while (!dq.empty() && best[dq.back()] <= best[hi]) dq.pop_back();
                dq.push_back(hi++);
            }
            while (v[lo] < v[s] - reach) ++lo;
            while (dq.front() < lo) dq.pop_front();
            next[s] = best[dq.front()] + w[j] * v[s];
        }
        best.swap(next);
    }
    return *std::max_element(best.begin(), best.end());
}

// --- 2D: transport with unit creation/destruction cost ---
//
// Supplies: positive cells plus a dummy carrying the negative mass; demands:
// negative cells plus a dummy carrying the positive mass. Cost between real
// cells is min(|x - y|, 2), cell-to-dummy is 1, dummy-to-dummy 0. The optimum
// equals the bounded-Lipschitz norm by LP duality.
struct Site {
    Vec2 x;
    double mass;
};

double transport_bl(const std::vector<Site>& pos, const std::vector<Site>& neg) {
    double ptot = 0.0, ntot = 0.0;
    for (const auto& s : pos) ptot += s.mass;
    for (const auto& s : neg) ntot += s.mass;
    const std::size_t P = pos.size() + 1;  // last is the dummy
    const std::size_t N = neg.size() + 1;
    std::vector<double> supply(P), demand(N);
    for (std::size_t i = 0; i + 1 < P; ++i) supply[i] = pos[i].mass;
    supply[P - 1] = ntot;
    for (std::size_t j = 0; j + 1 < N; ++j) demand[j] = neg[j].mass;
    demand[N - 1] = ptot;
    const double scale = std::max(ptot + ntot, 1e-300);
    const double eps = 1e-15 * scale;

    std::vector<double> cost(P * N);
    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            double c;
            if (i + 1 == P && j + 1 == N) c = 0.0;
            else if (i + 1 == P || j + 1 == N) c = 1.0;
            else c = std::min(2.0, std::hypot(pos[i].x[0] - neg[j].x[0], pos[i].x[1] - neg[j].x[1]));
            cost[i * N + j] = c;
        }
    std::vector<double> flow(P * N, 0.0);
    std::vector<double> pu(P, 0.0), pv(N, 0.0);  // potentials
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> du(P), dv(N);
    std::vector<std::ptrdiff_t> pred_u(P), pred_v(N);  // pred of right node is a left node and vice versa
    std::vector<char> done_u(P), done_v(N);

    double remaining = ptot + ntot;
    while (remaining > eps) {
        std::fill(du.begin(), du.end(), inf);
        std::fill(dv.begin(), dv.end(), inf);
        std::fill(done_u.begin(), done_u.end(), 0);
        std::fill(done_v.begin(), done_v.end(), 0);
        for (std::size_t i = 0; i < P; ++i)
            if (supply[i] > eps) {
                du[i] = 0.0;
                pred_u[i] = -1;
            }
        std::ptrdiff_t target = -1;
        double dtarget = inf;
        for (;;) {
            // dense Dijkstra: pick the closest unsettled node on either side
            double bd = inf;
            std::ptrdiff_t bu = -1, bv = -1;
            for (std::size_t i = 0; i < P; ++i)
                if (!done_u[i] && du[i] < bd) bd = du[i], bu = static_cast<std::ptrdiff_t>(i), bv = -1;
            for (std::size_t j = 0; j < N; ++j)
                if (!done_v[j] && dv[j] < bd) bd = dv[j], bv = static_cast<std::ptrdiff_t>(j), bu = -1;
            if (bd == inf) break;
            if (bu >= 0) {
                done_u[bu] = 1;
                for (std::size_t j = 0; j < N; ++j) {
                    if (done_v[j]) continue;
                    const double rc = cost[bu * N + j] + pu[bu] - pv[j];
                    if (bd + rc < dv[j]) {
                        dv[j] = bd + rc;
                        pred_v[j] = bu;
                    }
                }
            } else {
                done_v[bv] = 1;
                if (demand[bv] > eps) {
                    target = bv;
                    dtarget = bd;
                    break;
                }
                for (std::size_t i = 0; i < P; ++i) {
                    if (done_u[i] || flow[i * N + bv] <= eps) continue;
                    const double rc = -cost[i * N + bv] + pv[bv] - pu[i];
                    if (bd + rc < du[i]) {
                        du[i] = bd + rc;
                        pred_u[i] = bv;
                    }
                }
            }
        }
        require(target >= 0, "d0: transport problem infeasible", ErrorKind::quadrature);
        for (std::size_t i = 0; i < P; ++i) pu[i] += std::min(du[i], dtarget) - dtarget;
        for (std::size_t j = 0; j < N; ++j) pv[j] += std::min(dv[j], dtarget) - dtarget;

        // bottleneck along the alternating path
        double amt = demand[target];
        std::ptrdiff_t j = target;
        std::ptrdiff_t i;
        for (;;) {
            i = pred_v[j];
            if (pred_u[i] < 0) break;
            const std::ptrdiff_t jp = pred_u[i];
            amt = std::min(amt, flow[i * N + jp]);
            j = jp;
        }
        amt = std::min(amt, supply[i]);
        j = target;
        for (;;) {
            i = pred_v[j];
            flow[i * N + j] += amt;
            if (pred_u[i] < 0) break;
            const std::ptrdiff_t jp = pred_u[i];
            flow[i * N + jp] -= amt;
            j = jp;
        }
        supply[i] -= amt;
        demand[target] -= amt;
        remaining -= amt;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < P * N; ++k)
        if (flow[k] > 0.0) total += flow[k] * cost[k];
    return total;
}

double d0_2d_exact(const Field& mu, const std::vector<Vec2>& pts, const std::vector<double>& w) {
    (void)mu;
    std::vector<Site> pos, neg;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] > 0) pos.push_back({pts[k], w[k]});
        else if (w[k] < 0) neg.push_back({pts[k], -w[k]});
    }
    return transport_bl(pos, neg);
}

}  // namespace

Measure::Measure(Field density) : density_(std::move(density)) {
    require(!density_.empty(), "measure: empty density");
    for (auto& v : density_.data())
        if (std::abs(v) < kClamp) v = 0.0;
    require(density_.min() >= -1e-12,
            "measure: negative density value " + std::to_string(density_.min()));
    const double m = density_.integral();
    require(std::abs(m - 1.0) <= kMassTol, "measure: mass " + std::to_string(m) + " differs from 1");
}

Measure Measure::normalized(Field density) {
    for (auto& v : density.data()) v = std::max(v, 0.0);
    const double m = density.integral();
    require(m > 0.0, "measure: cannot normalize a zero density");
    density *= 1.0 / m;
    return Measure(std::move(density));
}

Measure grid_delta(const Grid& grid, const Vec2& at) {
    int idx[2] = {0, 0};
    for (int a = 0; a < grid.dims(); ++a) {
        const double j = std::round((at[a] + grid.half_width(a)) / grid.dx(a));
        idx[a] = ((static_cast<int>(j) % grid.n(a)) + grid.n(a)) % grid.n(a);
    }
    Field f(grid);
    f[grid.index(idx[0], idx[1])] = 1.0 / grid.cell_volume();
    return Measure(std::move(f));
}

Measure gaussian_measure(const Grid& grid, const Vec2& center, double sigma) {
    require(sigma > 0.0, "gaussian_measure: sigma must be positive");
    Field f = Field::sample(grid, [&](const Vec2& x) {
        double r2 = 0.0;
        for (int a = 0; a < grid.dims(); ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
        return std::exp(-r2 / (2 * sigma * sigma));
    });
    return Measure::normalized(std::move(f));
}

Measure shift(const Measure& m, const Vec2& a) {
    const Grid& g = m.grid();
    int s[2] = {0, 0};
    for (int ax = 0; ax < g.dims(); ++ax) s[ax] = static_cast<int>(std::lround(a[ax] / g.dx(ax)));
    Field out(g);
    for (int i0 = 0; i0 < g.n(0); ++i0)
        for (int i1 = 0; i1 < g.n(1); ++i1) {
            const int j0 = ((i0 + s[0]) % g.n(0) + g.n(0)) % g.n(0);
            const int j1 = ((i1 + s[1]) % g.n(1) + g.n(1)) % g.n(1);
            out[g.index(j0, j1)] = m.density()[g.index(i0, i1)];
        }
    return Measure(std::move(out));
}

double total_variation(const Field& f) {
    double s = 0.0;
    for (double v : f.values()) s += std::abs(v);
    return s * f.grid().cell_volume();
}

double tightness_profile(double r) {
    return std::log1p(std::sqrt(1.0 + r * r)) - std::log(2.0);
}

TightnessFn make_tightness(const Grid& grid) {
    TightnessFn t;
    t.psi = Field::sample(grid, [](const Vec2& x) { return tightness_profile(std::hypot(x[0], x[1])); });
    // psi'(r) = r / (s (1 + s)), s = sqrt(1 + r^2); Hessian eigenvalues psi'' and psi'/r.
    for (int k = 0; k <= 100000; ++k) {
        const double r = k * 1e-3;
        const double s = std::sqrt(1.0 + r * r);
        const double q = s + s * s;
        const double d1 = r / q;
        const double d2 = (q - r * r * (1.0 / s + 2.0)) / (q * q);
        const double radial = r > 0 ? d1 / r : 0.5;
        t.grad_bound = std::max(t.grad_bound, d1);
        t.hess_bound = std::max({t.hess_bound, std::abs(d2), radial});
    }
    return t;
}

double generalized_moment(const Measure& m, const TightnessFn& psi) {
    return inner(m.density(), psi.psi);
}

D0Result d0_norm_bounds(const Field& mu, const D0Options& opt) {
    const Grid& g = mu.grid();
    D0Result r;
    if (g.dims() == 1) {
        std::vector<double> w(mu.size());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = mu[j] * g.dx(0);
        r.value = r.lower = r.upper = std::max(0.0, chain_lp(w, g.dx(0)));
        return r;
    }
    int f = 1;
    while (static_cast<long long>(g.n(0) / f) * (g.n(1) / f) > opt.max_cells && f < g.n(0) && f < g.n(1))
        f *= 2;
    const int c0 = g.n(0) / f, c1 = g.n(1) / f;
    std::vector<Vec2> pts(static_cast<std::size_t>(c0) * c1, Vec2{0.0, 0.0});
    std::vector<double> w(pts.size(), 0.0);
    const double vol = g.cell_volume();
    for (int i0 = 0; i0 < g.n(0); ++i0)
        for (int i1 = 0; i1 < g.n(1); ++i1) {
            const std::size_t k = static_cast<std::size_t>(i0 / f) * c1 + i1 / f;
            w[k] += mu[g.index(i0, i1)] * vol;
        }
    for (int b0 = 0; b0 < c0; ++b0)
        for (int b1 = 0; b1 < c1; ++b1)
            pts[static_cast<std::size_t>(b0) * c1 + b1] = {g.coord(0, b0 * f) + 0.5 * (f - 1) * g.dx(0),
                                                          g.coord(1, b1 * f) + 0.5 * (f - 1) * g.dx(1)};
    r.value = d0_2d_exact(mu, pts, w);
    r.coarsening = f;
    if (f == 1) {
        r.lower = r.upper = r.value;
        return r;
    }
    // Each unit of |mu| moves at most the block half-diagonal; test functions are 1-Lipschitz.
    const double delta = 0.5 * (f - 1) * std::hypot(g.dx(0), g.dx(1));
    const double tv = total_variation(mu);
    r.exact = false;
    r.lower = std::max(0.0, r.value - delta * tv);
    r.upper = std::min(r.value + delta * tv, tv);
    return r;
}

double d0_norm(const Field& mu, const D0Options& opt) { return d0_norm_bounds(mu, opt).value; }

double d0_distance(const Field& m, const Field& m_prime, const D0Options& opt) {
    require_same_grid(m.grid(), m_prime.grid(), "d0_distance");
    const double dm = m_prime.integral() - m.integral();
    require(std::abs(dm) <= 1e-8, "d0_distance: mass mismatch " + std::to_string(dm));
    return d0_norm(m_prime - m, opt);
}

Field bump_kernel(const Grid& grid, double eps) {
    double dxmax = 0.0;
    for (int a = 0; a < grid.dims(); ++a) dxmax = std::max(dxmax, grid.dx(a));
    if (eps < 2.0 * dxmax) {
        int n = grid.n(0);
        while (2.0 * (2 * grid.half_width(0) / n) > eps && n < (1 << 22)) n *= 2;
        throw ResolutionError("mollify: eps = " + std::to_string(eps) + " is below 2 dx = " +
                                  std::to_string(2 * dxmax),
                              n);
    }
    Field k = Field::sample(grid, [&](const Vec2& x) {
        const double r = std::hypot(x[0], x[1]) / eps;
        return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0;
    });
    k *= 1.0 / k.integral();
    return k;
}

Field mollify_field(const Field& f, double eps) {
    return periodic_convolve(f, bump_kernel(f.grid(), eps));
}

Measure mollify(const Measure& m, double eps) {
    Field out = mollify_field(m.density(), eps);
    for (auto& v : out.data()) v = std::max(v, 0.0);  // FFT roundoff only
    return Measure::normalized(std::move(out));
}

Measure mollified_delta(const Grid& grid, const Vec2& at, double eps) {
    return mollify(grid_delta(grid, at), eps);
}

}  // namespace lmfg
