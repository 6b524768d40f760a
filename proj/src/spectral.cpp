#include "lmfg/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "lmfg/errors.hpp"

namespace lmfg {

namespace {

struct Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

// FFTW's planner is not thread-safe; execution with new arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

const Plans& plans_for(const Grid& g) {
    static std::map<std::tuple<int, int, int>, Plans> cache;
    std::lock_guard<std::mutex> lock(planner_mutex());
    const auto key = std::make_tuple(g.dims(), g.n(0), g.n(1));
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<double> real(g.size());
    std::vector<Complex> cplx(half_spectrum_size(g));
    auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p;
    if (g.dims() == 1) {
        p.forward = fftw_plan_dft_r2c_1d(g.n(0), real.data(), c, flags);
        p.backward = fftw_plan_dft_c2r_1d(g.n(0), c, real.data(), flags);
    } else {
        p.forward = fftw_plan_dft_r2c_2d(g.n(0), g.n(1), real.data(), c, flags);
        p.backward = fftw_plan_dft_c2r_2d(g.n(0), g.n(1), c, real.data(), flags);
    }
    if (p.forward == nullptr || p.backward == nullptr)
        throw Error(ErrorKind::unsupported, "fft: planner failed");
    return cache.emplace(key, p).first->second;
}

int last_axis_len(const Grid& g) { return g.dims() == 1 ? g.n(0) : g.n(1); }

}  // namespace

std::size_t half_spectrum_size(const Grid& g) {
    const std::size_t h = static_cast<std::size_t>(last_axis_len(g) / 2 + 1);
    return g.dims() == 1 ? h : static_cast<std::size_t>(g.n(0)) * h;
}

std::vector<Mode> half_spectrum_modes(const Grid& g) {
    std::vector<Mode> modes;
    modes.reserve(half_spectrum_size(g));
    if (g.dims() == 1) {
        const int n = g.n(0);
        for (int k = 0; k <= n / 2; ++k) {
            const int s = g.signed_mode(0, k);
            const bool nyq = (k == n / 2);
            const double xi = g.wavenumber(0, s);
            const double partner = nyq ? xi : -xi;
            modes.push_back({{xi, 0.0}, {partner, 0.0}, nyq, (k % 2 == 0) ? 1 : -1});
        }
        return modes;
    }
    const int n0 = g.n(0);
    const int n1 = g.n(1);
    for (int j0 = 0; j0 < n0; ++j0) {
        const int s0 = g.signed_mode(0, j0);
        const bool nyq0 = (j0 == n0 / 2);
        const double xi0 = g.wavenumber(0, s0);
        for (int k1 = 0; k1 <= n1 / 2; ++k1) {
            const int s1 = g.signed_mode(1, k1);
            const bool nyq1 = (k1 == n1 / 2);
            const double xi1 = g.wavenumber(1, s1);
            Mode m;
            m.xi = {xi0, xi1};
            m.partner_xi = {nyq0 ? xi0 : -xi0, nyq1 ? xi1 : -xi1};
            m.nyquist = nyq0 || nyq1;
            m.parity = ((j0 + k1) % 2 == 0) ? 1 : -1;
            modes.push_back(m);
        }
    }
    return modes;
}

std::vector<Complex> build_multiplier(const Grid& g,
                                      const std::function<Complex(const Vec2&)>& m) {
    const auto modes = half_spectrum_modes(g);
    std::vector<Complex> out(modes.size());
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const Mode& md = modes[i];
        if (!md.nyquist) {
            out[i] = m(md.xi);
        } else {
            out[i] = 0.5 * (m(md.xi) + std::conj(m(md.partner_xi)));
        }
    }
    return out;
}

Spectrum dft(const Field& f) {
    const Grid& g = f.grid();
    require(f.all_finite(), "dft: non-finite input value");
    const Plans& p = plans_for(g);
    std::vector<double> in(f.data());
    Spectrum s{g, std::vector<Complex>(half_spectrum_size(g))};
    fftw_execute_dft_r2c(p.forward, in.data(), reinterpret_cast<fftw_complex*>(s.coeffs.data()));
    return s;
}

Field idft(const Spectrum& s) {
    const Grid& g = s.grid;
    const Plans& p = plans_for(g);
    // c2r overwrites its input.
    std::vector<Complex> work(s.coeffs);
    std::vector<double> out(g.size());
    fftw_execute_dft_c2r(p.backward, reinterpret_cast<fftw_complex*>(work.data()), out.data());
    const double inv = 1.0 / static_cast<double>(g.size());
    for (double& v : out) v *= inv;
    Field f(g);
    f.data() = std::move(out);
    return f;
}

Field dft_roundtrip(const Field& f) { return idft(dft(f)); }

Field apply_multiplier(const Field& f, std::span<const Complex> multiplier) {
    Spectrum s = dft(f);
    require(multiplier.size() == s.coeffs.size(), "apply_multiplier: size mismatch");
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] *= multiplier[i];
    return idft(s);
}

std::vector<Complex> derivative_multiplier(const Grid& g, const MultiIndex& beta) {
    const int order = beta[0] + beta[1];
    Complex ipow(1.0, 0.0);
    for (int k = 0; k < order; ++k) ipow *= Complex(0.0, 1.0);
    return build_multiplier(g, [&](const Vec2& xi) {
        double v = std::pow(xi[0], beta[0]);
        if (g.dims() == 2) v *= std::pow(xi[1], beta[1]);
        return ipow * v;
    });
}

Field spectral_derivative(const Field& f, const MultiIndex& beta) {
    require(beta[0] >= 0 && beta[1] >= 0, "spectral_derivative: negative order");
    if (beta[0] + beta[1] > 4)
        throw Error(ErrorKind::unsupported, "spectral_derivative: order above 4 is unsupported");
    if (f.grid().dims() == 1 && beta[1] != 0)
        throw Error(ErrorKind::invalid_argument, "spectral_derivative: axis 1 on a 1D grid");
    if (beta[0] + beta[1] == 0) return f;
    const auto m = derivative_multiplier(f.grid(), beta);
    return apply_multiplier(f, m);
}

Field translate(const Field& f, const Vec2& a) {
    const bool two = f.grid().dims() == 2;
    const auto m = build_multiplier(f.grid(), [&](const Vec2& xi) {
        const double phase = -(a[0] * xi[0] + (two ? a[1] * xi[1] : 0.0));
        return Complex(std::cos(phase), std::sin(phase));
    });
    return apply_multiplier(f, m);
}

VectorField gradient(const Field& f) {
    VectorField g;
    const Spectrum s = dft(f);
    for (int a = 0; a < f.grid().dims(); ++a) {
        MultiIndex beta{0, 0};
        beta[a] = 1;
        const auto m = derivative_multiplier(f.grid(), beta);
        Spectrum d = s;
        for (std::size_t i = 0; i < d.coeffs.size(); ++i) d.coeffs[i] *= m[i];
        g.push_back(idft(d));
    }
    return g;
}

Field divergence(const VectorField& v) {
    require(!v.empty(), "divergence: empty vector field");
    const Grid& g = v[0].grid();
    require(static_cast<int>(v.size()) == g.dims(), "divergence: component count");
    Spectrum acc{g, std::vector<Complex>(half_spectrum_size(g))};
    for (int a = 0; a < g.dims(); ++a) {
        require_same_grid(g, v[a].grid(), "divergence");
        MultiIndex beta{0, 0};
        beta[a] = 1;
        const auto m = derivative_multiplier(g, beta);
        const Spectrum s = dft(v[a]);
        for (std::size_t i = 0; i < s.coeffs.size(); ++i) acc.coeffs[i] += m[i] * s.coeffs[i];
    }
    return idft(acc);
}

Field periodic_convolve(const Field& f, const Field& g) {
    require_same_grid(f.grid(), g.grid(), "periodic_convolve");
    const Spectrum a = dft(f);
    const Spectrum b = dft(g);
    const auto modes = half_spectrum_modes(f.grid());
    Spectrum c{f.grid(), std::vector<Complex>(a.coeffs.size())};
    // The (-1)^k phase moves the origin of f from index n/2 (x = 0) to index 0.
    for (std::size_t i = 0; i < c.coeffs.size(); ++i)
        c.coeffs[i] = static_cast<double>(modes[i].parity) * (a.coeffs[i] * b.coeffs[i]);
    Field out = idft(c);
    out *= f.grid().cell_volume();
    return out;
}

double spectral_energy(const Field& f) {
    const Grid& g = f.grid();
    const Spectrum s = dft(f);
    const int h = last_axis_len(g) / 2;
    const std::size_t row = static_cast<std::size_t>(h + 1);
    double e = 0.0;
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
        const int k = static_cast<int>(i % row);
        const double w = (k == 0 || k == h) ? 1.0 : 2.0;
        e += w * std::norm(s.coeffs[i]);
    }
    return e * g.cell_volume() / static_cast<double>(g.size());
}

double spectral_tail(const Field& f) {
    const Grid& g = f.grid();
    const Spectrum s = dft(f);
    const auto modes = half_spectrum_modes(g);
    double top = 0.0;
    double tail = 0.0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const double a = std::abs(s.coeffs[i]);
        top = std::max(top, a);
        bool high = std::abs(modes[i].xi[0]) >= 0.5 * std::abs(g.wavenumber(0, g.n(0) / 2));
        if (g.dims() == 2)
            high = high || std::abs(modes[i].xi[1]) >= 0.5 * std::abs(g.wavenumber(1, g.n(1) / 2));
        if (high) tail = std::max(tail, a);
    }
    return top > 0.0 ? tail / top : 0.0;
}

}  // namespace lmfg
