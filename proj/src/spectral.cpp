#include "epa/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "epa/error.hpp"

namespace epa {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Workspace {
 public:
  explicit Workspace(std::size_t n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    real_ = fftw_alloc_real(n);
    cplx_ = fftw_alloc_complex(n / 2 + 1);
    const int len = static_cast<int>(n);
    fwd_ = fftw_plan_dft_r2c_1d(len, real_, cplx_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_1d(len, cplx_, real_, FFTW_ESTIMATE);
  }
  ~Workspace() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_);
    fftw_free(cplx_);
  }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  // Unnormalized DFT X_k = sum_j f_j e^{-2 pi i jk/n}, k = 0..n/2.
  void r2c(std::span<const double> in, std::vector<Complex>& out) {
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(fwd_);
    out.resize(n_ / 2 + 1);
    for (std::size_t k = 0; k <= n_ / 2; ++k) out[k] = {cplx_[k][0], cplx_[k][1]};
  }

  // f_j = sum over the Hermitian extension of X_k e^{2 pi i jk/n}.
  void c2r(std::span<const Complex> in, std::span<double> out) {
    for (std::size_t k = 0; k <= n_ / 2; ++k) {
      cplx_[k][0] = in[k].real();
      cplx_[k][1] = in[k].imag();
    }
    fftw_execute(bwd_);
    std::copy(real_, real_ + n_, out.begin());
  }

 private:
  std::size_t n_;
  double* real_ = nullptr;
  fftw_complex* cplx_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

Workspace& workspace(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<Workspace>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Workspace>(n);
  return *slot;
}

double sign_of_mode(std::size_t k) { return (k % 2 == 0) ? 1.0 : -1.0; }

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw DomainError("alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
}

}  // namespace

Spectrum::Spectrum(Grid grid, std::vector<Complex> coeffs)
    : grid_(grid), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_.size() / 2 + 1) {
    throw GridMismatchError("spectrum size does not match grid");
  }
}

Spectrum forward(const Field& f) {
  const std::size_t n = f.size();
  std::vector<Complex> coeffs;
  workspace(n).r2c(f.values(), coeffs);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    coeffs[k] *= scale * sign_of_mode(k);
  }
  return Spectrum(f.grid(), std::move(coeffs));
}

Field inverse(const Spectrum& s) {
  const std::size_t n = s.grid().size();
  std::vector<Complex> shifted(s.coefficients().begin(), s.coefficients().end());
  for (std::size_t k = 0; k < shifted.size(); ++k) shifted[k] *= sign_of_mode(k);
  Field out(s.grid());
  workspace(n).c2r(shifted, out.values());
  return out;
}

double spectral_l2_norm(const Spectrum& s) {
  const std::size_t half = s.grid().size() / 2;
  double sum = std::norm(s[0]) + std::norm(s[half]);
  for (std::size_t k = 1; k < half; ++k) sum += 2.0 * std::norm(s[k]);
  return std::sqrt(sum);
}

Field apply_multiplier(const Field& f, const Multiplier& m, Parity parity) {
  Spectrum s = forward(f);
  const std::size_t half = f.size() / 2;
  for (std::size_t k = 0; k < half; ++k) s[k] *= m(static_cast<double>(k));
  if (parity == Parity::odd) {
    s[half] = 0.0;
  } else {
    // The stored Nyquist coefficient is real; an even real symbol keeps it so.
    s[half] *= m(static_cast<double>(half)).real();
  }
  return inverse(s);
}

Field lambda_alpha(const Field& f, double alpha) {
  require_alpha(alpha);
  f.require_finite("lambda_alpha");
  return apply_multiplier(
      f, [alpha](double k) -> Complex {
        return k == 0.0 ? 0.0 : std::pow(kTwoPi * k, alpha);
      },
      Parity::even);
}

Field lambda_alpha_inv_dx(const Field& f, double alpha) {
  require_alpha(alpha);
  f.require_finite("lambda_alpha_inv_dx");
  return apply_multiplier(
      f, [alpha](double k) -> Complex {
        if (k == 0.0) return 0.0;
        const double w = kTwoPi * k;
        return std::pow(w, alpha) / Complex(0.0, w);
      },
      Parity::odd);
}

Field antiderivative(const Field& f) {
  f.require_finite("antiderivative");
  const double m = mean(f);
  const double tol = 1e-10 * std::max(1.0, max_abs(f));
  if (std::abs(m) > tol) {
    throw MeanViolationError("antiderivative of a field with mean " +
                             std::to_string(m));
  }
  return apply_multiplier(
      f, [](double k) -> Complex {
        return k == 0.0 ? 0.0 : 1.0 / Complex(0.0, kTwoPi * k);
      },
      Parity::odd);
}

Field derivative(const Field& f) {
  f.require_finite("derivative");
  return apply_multiplier(
      f, [](double k) -> Complex { return Complex(0.0, kTwoPi * k); },
      Parity::odd);
}

Field convolve(const Field& f, const Field& g) {
  require_same_grid(f, g, "convolve");
  f.require_finite("convolve");
  g.require_finite("convolve");
  Spectrum a = forward(f);
  const Spectrum b = forward(g);
  const std::size_t half = f.size() / 2;
  for (std::size_t k = 0; k < half; ++k) a[k] *= b[k];
  // Nyquist coefficients carry the full cos(pi n x) amplitude.
  a[half] = 0.5 * a[half].real() * b[half].real();
  return inverse(a);
}

Field dealias(const Field& f) {
  Spectrum s = forward(f);
  const std::size_t cutoff = f.grid().dealias_cutoff();
  for (std::size_t k = cutoff + 1; k < s.modes(); ++k) s[k] = 0.0;
  return inverse(s);
}

std::vector<double> trig_interpolate(const Field& f, std::size_t m,
                                     double offset) {
  const std::size_t n = f.size();
  if (m < n || m % 2 != 0) {
    throw DomainError("interpolation target size must be even and >= n");
  }
  const Spectrum s = forward(f);
  std::vector<Complex> target(m / 2 + 1, 0.0);
  const double md = static_cast<double>(m);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double phase = kTwoPi * static_cast<double>(k) * offset / md;
    target[k] = s[k] * sign_of_mode(k) * std::polar(1.0, phase);
  }
  const std::size_t half = n / 2;
  const double nyq = s[half].real() * sign_of_mode(half);
  if (m == n) {
    target[half] = nyq * std::cos(std::numbers::pi * offset);
  } else {
    const double phase = std::numbers::pi * static_cast<double>(n) * offset / md;
    target[half] = 0.5 * nyq * std::polar(1.0, phase);
  }
  std::vector<double> out(m);
  workspace(m).c2r(target, out);
  return out;
}

double spectral_tail_fraction(const Field& f, double floor) {
  const Spectrum s = forward(f);
  const std::size_t cutoff = f.grid().dealias_cutoff();
  const std::size_t lower = f.size() / 6;
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t k = 1; k <= cutoff; ++k) {
    const double e = std::norm(s[k]);
    total += e;
    if (k > lower) tail += e;
  }
  if (total == 0.0 || std::sqrt(total) <= floor) return 0.0;
  return std::sqrt(tail / total);
}

}  // namespace epa
