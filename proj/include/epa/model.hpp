#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "epa/field.hpp"
#include "epa/kernels.hpp"

namespace epa {

/// Evolved state of the (rho, G) system.
///
/// G = d_x u - c Lambda^alpha rho + psi_L * rho. The velocity is never
/// stored; it is recovered from (rho, G) and the conserved momentum M0.
struct SimState {
  Field rho;
  Field G;
  double t = 0.0;
  double rho_bar = 1.0;  ///< conserved mean density
  double M0 = 0.0;       ///< conserved momentum int rho u
  KernelSpec kernel;
  PotentialSpec potential;

  const Grid& grid() const noexcept { return rho.grid(); }
};

/// Fields derived from a state by velocity recovery.
struct DerivedFields {
  Field u;
  Field F;      ///< G / rho
  Field theta;  ///< rho - rho_bar
  Field u_S;    ///< singular part c Lambda^alpha d_x^{-1} theta + d_x^{-1}(G - mean G)
  Field u_L;    ///< Lipschitz part, u - u_S (carries I0)
  double I0 = 0.0;
};

/// Rates (d rho/dt, dG/dt).
struct StateRate {
  Field drho;
  Field dG;
};

/// G = d_x u - c Lambda^alpha rho + psi_L * rho.
Field compute_G(const Field& rho, const Field& u, const KernelSpec& kernel);

/// u = c Lambda^alpha d_x^{-1} rho + d_x^{-1}(G - psi_L * rho) + I0 with I0
/// fixed so that int rho u = M0. Throws VacuumError when min rho <= 0 and
/// MeanViolationError when G - psi_L * rho has a nonzero mean.
DerivedFields recover_velocity(const SimState& state);

/// d rho/dt = -d_x(rho u), dG/dt = -d_x(G u) - d_xx(K * rho); products
/// dealiased by the 2/3 rule. Throws NonFiniteError on NaN/inf.
StateRate rhs(const SimState& state);

/// Alignment force int_T psi(y) (u(x+y) - u(x)) rho(x+y) dy by direct
/// quadrature on `refinement` half-cell offset nodes (refinement a multiple
/// of n). Cost O(n * refinement); parallel over grid points.
Field alignment_direct(const Field& rho, const Field& u, const KernelSpec& kernel,
                       std::size_t refinement);

/// The same force through the commutator identity
/// c (u Lambda^alpha rho - Lambda^alpha(rho u)) + psi_L*(rho u) - u psi_L*rho.
Field alignment_spectral(const Field& rho, const Field& u, const KernelSpec& kernel);

/// Named initial data with numeric parameters.
struct InitialPreset {
  std::string name = "cosine";
  std::map<std::string, double> params;
};

/// Builds (rho0, u0) from a preset, dealiases them and derives G0, rho_bar, M0.
///
/// Presets and parameters (defaults in parentheses):
///   uniform        rho_bar (1), u_mean (0)
///   cosine         rho_bar (1), a (0.5), b (0), mode (1), relax (0), u_mean (0)
///                  rho0 = rho_bar + a cos(2 pi mode x)
///                  u0 = u_mean + b sin(2 pi mode x) + relax * u_relaxed
///   gaussian-bump  base (1), amp (1), sigma (0.1), b (0), relax (0), u_mean (0)
///   burgers-shock  rho_bar (1), amp (1): u0 = -amp sin(2 pi x)
///   near-vacuum    eps (0.01), amp (1), sigma (0.15), b (0), relax (0), u_mean (0)
///   random-smooth  seed (1), modes (4), rho_amp (0.3), u_amp (0.3), rho_bar (1)
/// u_relaxed has d_x u_relaxed = c Lambda^alpha rho0 - (psi_L*rho0 - mean), which
/// makes G0 constant. Throws ConfigError for unknown presets/parameters or
/// min rho0 <= 0.
SimState make_initial(const InitialPreset& preset, const Grid& grid,
                      const KernelSpec& kernel, const PotentialSpec& potential);

/// Builds a state from explicit (rho0, u0).
SimState make_state(const Field& rho0, const Field& u0, const KernelSpec& kernel,
                    const PotentialSpec& potential);

/// Mass, zero-mean and positivity invariants. Throws on violation.
void check_state_invariants(const SimState& state);

}  // namespace epa
