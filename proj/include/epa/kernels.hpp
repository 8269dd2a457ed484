#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <variant>
#include <vector>

#include "epa/field.hpp"

namespace epa {

// ---------------------------------------------------------------------------
// Singular kernel psi_alpha(x) = sum_m c_alpha / |x + m|^{1+alpha}
// ---------------------------------------------------------------------------

/// Normalization making c_alpha P.V. int (f(x) - f(x+y)) / |y|^{1+alpha} dy
/// equal to Lambda^alpha f. Valid for alpha in (0, 2).
double c_alpha(double alpha);

/// Periodized singular kernel at x (mod 1), absolute error <= tol.
/// Throws SingularityError when x is an integer.
double psi_alpha_eval(double x, double alpha, double tol = 1e-12);

/// Minimum of psi_alpha over the torus, attained at x = 1/2.
double psi_m(double alpha);

/// psi_alpha on the half-cell offset quadrature nodes
/// y_j = -1/2 + (j + 1/2)/refinement. Shared and cached per (alpha, refinement).
std::shared_ptr<const std::vector<double>> offset_kernel_table(
    double alpha, std::size_t refinement);

// ---------------------------------------------------------------------------
// Sampled periodic tables (two-column CSV x,value with x in [-1/2, 1/2))
// ---------------------------------------------------------------------------

class SampledTable {
 public:
  /// Throws ConfigError unless x is strictly increasing inside [-1/2, 1/2)
  /// and all values are finite. At least 3 nodes.
  SampledTable(std::vector<double> x, std::vector<double> values);

  static SampledTable from_csv(const std::filesystem::path& path);

  /// Periodic piecewise-linear interpolation.
  double operator()(double x) const;

  std::size_t size() const noexcept { return x_.size(); }
  const std::vector<double>& nodes() const noexcept { return x_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double sup_norm() const noexcept { return sup_; }
  /// Largest secant slope between consecutive nodes (periodic).
  double lipschitz() const noexcept { return lipschitz_; }
  /// Largest centered second difference over the nodes (periodic).
  double second_derivative_sup() const noexcept { return second_; }

 private:
  std::vector<double> x_;
  std::vector<double> values_;
  double sup_ = 0.0;
  double lipschitz_ = 0.0;
  double second_ = 0.0;
};

// ---------------------------------------------------------------------------
// Alignment kernel psi = c psi_alpha + psi_L
// ---------------------------------------------------------------------------

struct LipschitzZero {};
struct LipschitzConstant {
  double a = 0.0;
};
/// psi_L(x) = a + b cos(2 pi x)
struct LipschitzCosine {
  double a = 0.0;
  double b = 0.0;
};
struct LipschitzTable {
  std::shared_ptr<const SampledTable> table;
};

using LipschitzPart =
    std::variant<LipschitzZero, LipschitzConstant, LipschitzCosine, LipschitzTable>;

struct KernelSpec {
  double c = 0.0;
  double alpha = 0.5;
  LipschitzPart psi_L = LipschitzZero{};

  bool has_singular_part() const noexcept { return c != 0.0; }
  bool has_lipschitz_part() const noexcept;
  /// True when psi vanishes identically (no alignment force).
  bool is_inactive() const noexcept {
    return !has_singular_part() && !has_lipschitz_part();
  }

  double lipschitz_value(double x) const;
  double lipschitz_sup() const;
  double lipschitz_slope() const;
  Field lipschitz_field(const Grid& grid) const;

  /// Full kernel c psi_alpha(x) + psi_L(x) for x != 0 (mod 1).
  double eval(double x) const;

  /// min over grid points x != 0 of psi(x).
  double min_on_grid(const Grid& grid) const;

  /// Throws ConfigError if the positivity gate min psi > 0 fails.
  void require_positive(const Grid& grid) const;
};

/// (psi_L * rho); zero field when psi_L = 0.
Field lipschitz_convolution(const KernelSpec& kernel, const Field& rho);

// ---------------------------------------------------------------------------
// Attraction-repulsion potential K = Newtonian(k) + K_reg
// ---------------------------------------------------------------------------

struct RegularZero {};
/// K_reg(x) = a cos(2 pi x)
struct RegularCosine {
  double a = 0.0;
};
/// K_reg(x) = a sum_m exp(-(x + m)^2 / (2 sigma^2))
struct RegularGaussian {
  double a = 0.0;
  double sigma = 0.1;
};
struct RegularTable {
  std::shared_ptr<const SampledTable> table;
};

using RegularPart =
    std::variant<RegularZero, RegularCosine, RegularGaussian, RegularTable>;

struct PotentialSpec {
  double k = 0.0;
  RegularPart regular = RegularZero{};

  bool has_regular_part() const noexcept;
  double regular_value(double x) const;
  Field regular_field(const Grid& grid) const;
  /// |K_reg|_inf, |d_x K_reg|_inf, |d_xx K_reg|_inf (closed form where
  /// available, dense sampling or differences otherwise).
  double regular_sup() const;
  double regular_slope_sup() const;
  double regular_second_derivative_sup() const;
};

/// -d_x phi with d_xx phi = k (rho - mean rho).
Field newtonian_force(const Field& rho, double k);

/// -d_x (K_reg * rho).
Field regular_force(const Field& rho, const PotentialSpec& spec);

/// newtonian_force + regular_force.
Field total_force(const Field& rho, const PotentialSpec& spec);

/// Forcing on the G equation: -d_xx (K * rho) = -k (rho - mean rho) - d_xx (K_reg * rho).
Field potential_forcing(const Field& rho, const PotentialSpec& spec);

/// Lambda^alpha f by direct principal-value quadrature
/// int_T psi_alpha(y) (f(x) - f(x+y)) dy on half-cell offset nodes, with f
/// trigonometrically interpolated. refinement must be a multiple of n.
Field lambda_alpha_quadrature(const Field& f, double alpha,
                              std::size_t refinement);

}  // namespace epa
