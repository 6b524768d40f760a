#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "lmfg/grid.hpp"

namespace lmfg {

using Complex = std::complex<double>;

/// Half-complex spectrum of a real field (FFTW r2c layout).
///
/// 1D: n/2 + 1 coefficients. 2D: n0 rows of n1/2 + 1 coefficients.
/// Forward transform is unnormalized with kernel e^{-2 pi i jk/n}; this matches
/// F u(xi) = int e^{-i xi x} u(x) dx up to the node offset, so D^beta has
/// multiplier (i xi)^beta.
struct Spectrum {
    Grid grid;
    std::vector<Complex> coeffs;
};

std::size_t half_spectrum_size(const Grid& grid);

/// Wavenumber vector of every stored half-spectrum coefficient, plus whether a
/// Nyquist component is present (those modes get a symmetrized multiplier).
struct Mode {
    Vec2 xi;
    Vec2 partner_xi;  ///< wavenumber of the conjugate-partner mode
    bool nyquist;
    int parity;       ///< (-1)^(k0 + k1)
};
std::vector<Mode> half_spectrum_modes(const Grid& grid);

/// Samples a multiplier m(xi) on the half spectrum. The caller guarantees
/// m(-xi) = conj(m(xi)); on Nyquist modes the value is averaged with the
/// conjugate of the partner so that real fields stay real.
std::vector<Complex> build_multiplier(const Grid& grid,
                                      const std::function<Complex(const Vec2&)>& m);

Spectrum dft(const Field& f);
/// Normalized inverse, so idft(dft(f)) == f.
Field idft(const Spectrum& s);
Field dft_roundtrip(const Field& f);

Field apply_multiplier(const Field& f, std::span<const Complex> multiplier);

/// (i xi)^beta multiplier on the half spectrum.
std::vector<Complex> derivative_multiplier(const Grid& grid, const MultiIndex& beta);

/// D^beta f, |beta| <= 4.
Field spectral_derivative(const Field& f, const MultiIndex& beta);
VectorField gradient(const Field& f);
/// Band-limited translation: result(x) = f(x - a), exact for resolved periodic f.
Field translate(const Field& f, const Vec2& a);
Field divergence(const VectorField& v);

/// dx^d-normalized convolution of node-sampled functions:
/// (f * g)(x_i) = dx^d sum_j f(x_i - x_j) g(x_j), offsets taken periodically.
Field periodic_convolve(const Field& f, const Field& g);

/// dx^d / N * sum over the full spectrum of |F_k|^2 (Parseval partner of inner(f, f)).
double spectral_energy(const Field& f);

/// Spectral tail diagnostic: largest |coefficient| with some |k_i| >= n_i/4,
/// relative to the largest coefficient. Small values mean the field is resolved.
double spectral_tail(const Field& f);

}  // namespace lmfg
