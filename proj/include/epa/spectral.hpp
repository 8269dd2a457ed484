#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "epa/field.hpp"

namespace epa {

using Complex = std::complex<double>;

/// Fourier coefficients c_k of a real Field, f(x) = sum_k c_k e^{2 pi i k x}.
///
/// Only k = 0..n/2 are stored; negative modes follow from Hermitian symmetry.
/// The coefficients are the true torus coefficients (the -1/2 grid origin is
/// accounted for), so c_k is independent of where the grid starts.
class Spectrum {
 public:
  Spectrum(Grid grid, std::vector<Complex> coeffs);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t modes() const noexcept { return coeffs_.size(); }

  Complex& operator[](std::size_t k) noexcept { return coeffs_[k]; }
  const Complex& operator[](std::size_t k) const noexcept { return coeffs_[k]; }

  std::span<Complex> coefficients() noexcept { return coeffs_; }
  std::span<const Complex> coefficients() const noexcept { return coeffs_; }

 private:
  Grid grid_;
  std::vector<Complex> coeffs_;
};

Spectrum forward(const Field& f);
Field inverse(const Spectrum& s);

/// L2 norm from the coefficients (Parseval).
double spectral_l2_norm(const Spectrum& s);

/// Symbol of a Fourier multiplier as a function of the wavenumber k >= 0.
/// Real-valuedness requires m(-k) = conj(m(k)), which is implied.
using Multiplier = std::function<Complex(double k)>;

enum class Parity { even, odd };

/// Applies a multiplier to f. Odd multipliers drop the Nyquist mode.
Field apply_multiplier(const Field& f, const Multiplier& m, Parity parity);

/// Lambda^alpha f, symbol (2 pi |k|)^alpha, alpha in (0, 2].
Field lambda_alpha(const Field& f, double alpha);

/// Lambda^alpha d_x^{-1} of the zero-mean part of f:
/// symbol (2 pi |k|)^alpha / (2 pi i k) for k != 0.
Field lambda_alpha_inv_dx(const Field& f, double alpha);

/// Zero-mean primitive of f. Throws MeanViolationError when
/// |mean f| > 1e-10 max(1, |f|_inf).
Field antiderivative(const Field& f);

/// Spectral d/dx.
Field derivative(const Field& f);

/// Periodic convolution int_T f(y) g(x - y) dy.
Field convolve(const Field& f, const Field& g);

/// 2/3-rule truncation: zeroes modes with |k| > n/3.
Field dealias(const Field& f);

/// Trigonometric interpolant of f sampled at z_l = -1/2 + (l + offset)/m,
/// l = 0..m-1. Requires m >= n and m even.
std::vector<double> trig_interpolate(const Field& f, std::size_t m,
                                     double offset);

/// Fraction of the non-mean L2 energy carried by modes n/6 < k <= n/3,
/// reported as an amplitude ratio. Zero when the non-mean amplitude is at
/// most `floor` (round-off noise on near-constant fields).
double spectral_tail_fraction(const Field& f, double floor = 0.0);

}  // namespace epa
