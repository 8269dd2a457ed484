#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epa/field.hpp"
#include "epa/integrator.hpp"
#include "epa/model.hpp"

namespace epa {

// ---------------------------------------------------------------------------
// A-priori bound constants
// ---------------------------------------------------------------------------

/// Constants of the density envelopes and the F bound, computed from the
/// initial state. The Newtonian strength |k| and the regular potential
/// curvature ||K_reg''|| enter through kappa = |k| + ||K_reg''||; with K_reg = 0
/// this is the pure EPA form and with k = 0 the W^{2,inf} form.
struct BoundConstants {
  double alpha = 0.5;
  double dx = 0.0;          ///< grid spacing, sets check tolerances 1 + 10 dx
  double rho_bar = 1.0;
  double rho0_min = 1.0;
  double rho0_max = 1.0;
  double drho0_inf = 0.0;   ///< ||d_x rho0||_inf
  double F0_inf = 0.0;
  double k_abs = 0.0;
  double kreg_dd = 0.0;     ///< ||d_xx K_reg||_inf
  double kappa = 0.0;
  double psi_m = 0.0;       ///< min of the full kernel over the torus
  double psiL_sup = 0.0;
  double eps_star = 0.0;
  double eps = 0.0;
  double A_m = 0.0;
  double C_m = 0.0;
  double A_M = 0.0;
  double C_M = 0.0;
  double C1 = 1.0;

  /// C_m exp(-A_m t).
  double rho_lower(double t) const noexcept;
  /// ||F0|| + |k| t + kappa rho_bar / (A_m C_m) exp(A_m t); ||F0|| when kappa = 0.
  double F_M(double t) const noexcept;
  /// C_M exp(A_M t).
  double rho_M(double t) const noexcept;
  /// max{||rho0||, 3 rho_bar, (f F_M / C1)^(1/alpha), (2 ||psi_L|| rho_bar / C1)^(1/(1+alpha))}
  /// with f = 2 when psi_L != 0, else 1 (last branch only when psi_L != 0).
  double rho_upper(double t) const noexcept;
  /// 1 + 10 dx.
  double tolerance() const noexcept { return 1.0 + 10.0 * dx; }
  /// Constants derived for 0 < alpha < 1 only; checks are advisory otherwise.
  bool advisory() const noexcept { return alpha >= 1.0; }

  /// Flat name/value list (CSV header round trip).
  std::vector<std::pair<std::string, double>> fields() const;
  static BoundConstants from_fields(const std::map<std::string, double>& values);
};

/// Evaluates all constants with eps = eps_fraction * eps_star from the initial
/// state. Throws VacuumError for min rho0 <= 0, DomainError when the kernel
/// minimum is not positive or eps_fraction is outside (0, 1).
BoundConstants bound_constants(const SimState& state0, double eps_fraction = 0.5,
                               double C1 = 1.0);

// ---------------------------------------------------------------------------
// Diagnostics log
// ---------------------------------------------------------------------------

struct DiagnosticsRow {
  double t = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double F_inf = 0.0;
  double drho_inf = 0.0;
  double bkm = 0.0;
  double mass = 0.0;
  double momentum = 0.0;
  double env_lower_margin = std::numeric_limits<double>::quiet_NaN();
  double env_upper_margin = std::numeric_limits<double>::quiet_NaN();
  int moc_pass = -1;  ///< -1 not evaluated at this row
  double moc_log_B = std::numeric_limits<double>::quiet_NaN();  ///< ln of minimal B
};

struct DiagnosticsLog {
  std::vector<DiagnosticsRow> rows;
};

struct BoundCheck {
  bool pass = true;
  double margin = std::numeric_limits<double>::infinity();  ///< min ratio over rows
  std::optional<double> first_violation;                    ///< time of first failure
};

struct UpperCheck : BoundCheck {
  /// Largest C1 for which the upper envelope holds at every row, +inf when
  /// the C1-independent branches already cover the log.
  double fitted_C1 = std::numeric_limits<double>::infinity();
};

struct FCheck : BoundCheck {
  bool monotone_required = false;  ///< kappa = 0: ||F|| must not increase
  bool monotone = true;
};

/// min rho(t) >= C_m exp(-A_m t) / (1 + 10 dx); margin = min rho_min / envelope.
BoundCheck check_lower_envelope(const DiagnosticsLog& log, const BoundConstants& bc);

/// max rho(t) <= rho_upper(t) (1 + 10 dx); margin = min rho_upper / rho_max.
UpperCheck check_upper_envelope(const DiagnosticsLog& log, const BoundConstants& bc);

/// ||F(t)|| <= F_M(t) (1 + 10 dx) + 1e-12; with kappa = 0 also
/// ||F(t)|| <= (1 + 10 dx) min_{s <= t} ||F(s)|| + 1e-12.
FCheck check_F_bound(const DiagnosticsLog& log, const BoundConstants& bc);

/// Trapezoidal int ||d_x rho||^2 dt over the logged times.
double bkm_accumulate(const DiagnosticsLog& log);

// ---------------------------------------------------------------------------
// Modulus of continuity
// ---------------------------------------------------------------------------

/// Parameters of omega_B. B is held as ln B: certified values overflow doubles.
struct ModulusParams {
  double delta = 0.1;
  double gamma = 0.01;
  double log_B = 0.0;
  double alpha = 0.5;

  /// Throws DomainError unless delta in (0,1), gamma > 0,
  /// gamma <= (delta - delta^(1+alpha/2)) / (2 ln 2), B >= 1, and omega_B is
  /// increasing and concave: (1+alpha/2) delta^(alpha/2) < 1 and
  /// gamma <= delta - (1+alpha/2) delta^(1+alpha/2).
  void validate() const;
  /// exp(log_B), +inf on overflow.
  double B() const noexcept;
};

/// omega_B(xi) = B xi - (B xi)^(1+alpha/2) for xi < delta/B,
/// gamma ln(B xi / delta) + delta - delta^(1+alpha/2) otherwise.
double omega_B(double xi, const ModulusParams& p);

struct MocResult {
  bool pass = true;
  std::size_t i = 0;  ///< worst pair (x_i, x_j)
  std::size_t j = 0;
  double distance = 0.0;
  double margin = std::numeric_limits<double>::infinity();  ///< min omega_B(d) - |drho|
};

/// |rho(x_i) - rho(x_j)| < omega_B(d_ij) over all grid pairs with periodic
/// distance d in (0, 1/2].
MocResult moc_check(const Field& rho, const ModulusParams& p);

/// Smallest ln B (bisection in ln B to ln 1.01) for which moc_check passes.
/// Returns 0 when B = 1 passes and +inf when log_B_cap does not.
double moc_min_log_B(const Field& rho, double delta, double gamma, double alpha,
                     double log_B_cap = 1e300);

/// exp(moc_min_log_B(...)).
double moc_min_B(const Field& rho, double delta, double gamma, double alpha);

/// delta, gamma, B of the persistence argument on [0, T], each strict
/// inequality met with the factor 1/2 (2 for ln B above ln of the bound):
///   delta = min{1, 2||rho0||/||rho0'||, (C3 rho_m / max{4 C2, 12 rho_M F_M, 6 rho_M^2 C_F})^(2/alpha)} / 2
///   gamma = min{C3 rho_m / (4 C2), min(1/(2 ln 2), alpha)(delta - delta^(1+alpha/2))} / 2
///   B = 2 max{1, delta ||rho0'|| / (2||rho0||) exp(2||rho0||/gamma),
///             2 delta exp(6 rho_M^2 F_M / (C3 gamma rho_m))}
/// with rho_m, rho_M, F_M at T. Throws DomainError for delta >= 1 or gamma <= 0.
ModulusParams certified_modulus_params(const SimState& state0, const BoundConstants& bc,
                                       double T, double C2 = 1.0, double C3 = 1.0,
                                       double C_F = 1.0);

// ---------------------------------------------------------------------------
// Run monitor
// ---------------------------------------------------------------------------

struct MocSettings {
  double delta = 0.0;
  double gamma = 0.0;
  double alpha = 0.5;
  /// ln B for moc_check; nullopt logs only the minimal B.
  std::optional<double> log_B;
  std::size_t every = 10;
};

/// Logs one row per step; evaluates the O(n^2) modulus monitors every
/// moc.every steps and at the final state.
class DiagnosticsMonitor final : public Monitor {
 public:
  DiagnosticsMonitor(std::optional<BoundConstants> bc, std::optional<MocSettings> moc);

  void observe(const StepSnapshot& snapshot) override;

  const DiagnosticsLog& log() const noexcept { return log_; }
  const std::optional<BoundConstants>& constants() const noexcept { return bc_; }
  const std::optional<MocSettings>& moc() const noexcept { return moc_; }

 private:
  std::optional<BoundConstants> bc_;
  std::optional<MocSettings> moc_;
  DiagnosticsLog log_;
};

}  // namespace epa
