#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "epa/model.hpp"

namespace epa {

/// Time-step control. stable_dt takes the minimum of the advective and
/// alignment/forcing limits, capped by dt_max and clamped below by dt_min.
/// A positive fixed_dt bypasses the stability limits (convergence studies).
struct StepControl {
  double cfl_advect = 0.4;
  double cfl_diffuse = 0.3;
  double dt_min = 1e-12;
  double dt_max = 1e-2;
  double t_end = 1.0;
  double fixed_dt = 0.0;

  /// Throws ConfigError unless all limits are positive and dt_min < dt_max.
  void validate() const;
};

/// Thresholds of the singularity detectors.
struct DetectionThresholds {
  double rho_max_factor = 1e6;   ///< blow-up when max rho > factor * rho_bar
  double drho_max = 1e8;         ///< blow-up when ||d_x rho||_inf exceeds this
  double bkm_cap = 1e10;         ///< blow-up when the running BKM integral exceeds this
  double spectral_tail = 0.1;    ///< blow-up when the resolved tail of rho exceeds this
  double vacuum_floor = 1e-8;    ///< vacuum when min rho < floor * rho_bar

  void validate() const;
};

enum class RunStatus { completed, blowup_detected, vacuum_detected, nan_detected };

const char* to_string(RunStatus status) noexcept;

/// Read-only view handed to monitors.
struct StepSnapshot {
  const SimState& state;
  const DerivedFields& derived;
  std::size_t step;
  double dt;            ///< step that produced this state (0 at the start)
  double drho_inf;      ///< ||d_x rho||_inf, spectral
  double bkm;           ///< running trapezoidal int ||d_x rho||_inf^2 dt
  bool final;           ///< last snapshot of the run
};

/// Run observer. The loop calls observe() every cadence() steps, at the
/// initial state and at the final state.
class Monitor {
 public:
  virtual ~Monitor() = default;
  virtual std::size_t cadence() const { return 1; }
  virtual void observe(const StepSnapshot& snapshot) = 0;
  /// Earliest time > t the monitor wants the run to land on exactly.
  virtual std::optional<double> next_stop(double /*t*/) const { return std::nullopt; }
};

struct RunOutcome {
  RunStatus status = RunStatus::completed;
  double t_final = 0.0;
  std::size_t steps = 0;
  double bkm = 0.0;
  std::string reason;  ///< detector that fired, empty on completion
  SimState final_state;
};

/// Stability-limited step for the current state.
double stable_dt(const SimState& state, const StepControl& ctl);

/// As above, reusing already recovered fields.
double stable_dt(const SimState& state, const DerivedFields& derived,
                 const StepControl& ctl);

/// Three-stage SSP Runge-Kutta step (Shu-Osher form). Throws NonFiniteError
/// when a stage goes non-finite and VacuumError when density loses positivity.
SimState step_ssprk3(const SimState& state, double dt);

/// Integrates to ctl.t_end or until a detector fires.
RunOutcome run(const SimState& initial, const StepControl& ctl,
               const std::vector<Monitor*>& monitors,
               const DetectionThresholds& detect = {});

}  // namespace epa
