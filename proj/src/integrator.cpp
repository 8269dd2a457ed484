#include "epa/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "epa/error.hpp"
#include "epa/spectral.hpp"

namespace epa {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double raw_stable_dt(const SimState& state, const DerivedFields& derived,
                     const StepControl& ctl) {
  const double dx = state.grid().dx();
  double dt = ctl.dt_max;
  const double umax = max_abs(derived.u);
  if (umax > 0.0) dt = std::min(dt, ctl.cfl_advect * dx / umax);

  const KernelSpec& kernel = state.kernel;
  const PotentialSpec& potential = state.potential;
  double rate = std::abs(potential.k) +
                potential.regular_second_derivative_sup() * state.rho_bar;
  if (kernel.has_singular_part()) {
    rate += std::pow(kTwoPi, kernel.alpha) * kernel.c * max_abs(state.rho);
  }
  if (kernel.has_lipschitz_part()) rate += kernel.lipschitz_sup() * state.rho_bar;
  if (rate > 0.0) {
    const double alpha = kernel.has_singular_part() ? kernel.alpha : 1.0;
    dt = std::min(dt, ctl.cfl_diffuse * std::pow(dx, alpha) / rate);
  }
  return dt;
}

SimState advance(const SimState& base, const StateRate& rate, double dt) {
  SimState next = base;
  next.rho += dt * rate.drho;
  next.G += dt * rate.dG;
  return next;
}

// a * x + b * y, stage weights of the Shu-Osher form.
Field blend(double a, const Field& x, double b, const Field& y) {
  Field out = a * x;
  out += b * y;
  return out;
}

double slope_norm(const Field& rho) { return max_abs(derivative(rho)); }

}  // namespace

void StepControl::validate() const {
  if (!(cfl_advect > 0.0) || !(cfl_diffuse > 0.0) || !(dt_min > 0.0) ||
      !(dt_max > 0.0) || !(t_end > 0.0)) {
    throw ConfigError("step control: cfl_advect, cfl_diffuse, dt_min, dt_max, t_end must be positive");
  }
  if (!(dt_min < dt_max)) throw ConfigError("step control: dt_min must be below dt_max");
  if (fixed_dt < 0.0) throw ConfigError("step control: fixed_dt must be >= 0");
}

void DetectionThresholds::validate() const {
  if (!(rho_max_factor > 1.0) || !(drho_max > 0.0) || !(bkm_cap > 0.0) ||
      !(spectral_tail > 0.0) || !(vacuum_floor >= 0.0)) {
    throw ConfigError("detection thresholds must be positive (rho_max_factor > 1)");
  }
}

const char* to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::blowup_detected: return "blowup_detected";
    case RunStatus::vacuum_detected: return "vacuum_detected";
    case RunStatus::nan_detected: return "nan_detected";
  }
  return "unknown";
}

double stable_dt(const SimState& state, const DerivedFields& derived,
                 const StepControl& ctl) {
  return std::max(ctl.dt_min, raw_stable_dt(state, derived, ctl));
}

double stable_dt(const SimState& state, const StepControl& ctl) {
  return stable_dt(state, recover_velocity(state), ctl);
}

SimState step_ssprk3(const SimState& state, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("step_ssprk3: dt must be positive");
  const SimState s1 = advance(state, rhs(state), dt);
  const SimState e2 = advance(s1, rhs(s1), dt);
  SimState s2 = state;
  s2.rho = blend(0.75, state.rho, 0.25, e2.rho);
  s2.G = blend(0.75, state.G, 0.25, e2.G);
  const SimState e3 = advance(s2, rhs(s2), dt);
  SimState next = state;
  next.rho = blend(1.0 / 3.0, state.rho, 2.0 / 3.0, e3.rho);
  next.G = blend(1.0 / 3.0, state.G, 2.0 / 3.0, e3.G);
  next.t = state.t + dt;
  if (!next.rho.is_finite() || !next.G.is_finite()) {
    throw NonFiniteError("step_ssprk3: non-finite state");
  }
  check_state_invariants(next);
  return next;
}

RunOutcome run(const SimState& initial, const StepControl& ctl,
               const std::vector<Monitor*>& monitors,
               const DetectionThresholds& detect) {
  ctl.validate();
  detect.validate();
  check_state_invariants(initial);

  RunOutcome out{RunStatus::completed, initial.t, 0, 0.0, {}, initial};
  SimState state = initial;
  DerivedFields derived = recover_velocity(state);
  double drho = slope_norm(state.rho);
  double dt_last = 0.0;
  const double t_slack = 1e-12 * std::max(1.0, std::abs(ctl.t_end));

  auto notify = [&](bool final) {
    const StepSnapshot snap{state, derived, out.steps, dt_last, drho, out.bkm, final};
    for (Monitor* m : monitors) {
      const std::size_t every = std::max<std::size_t>(1, m->cadence());
      if (final || out.steps % every == 0) m->observe(snap);
    }
  };
  notify(false);

  auto finish = [&](RunStatus status, std::string reason, bool observe) {
    out.status = status;
    out.reason = std::move(reason);
    out.t_final = state.t;
    out.final_state = state;
    if (observe) notify(true);
    return out;
  };

  while (state.t < ctl.t_end - t_slack) {
    double dt = ctl.fixed_dt;
    if (dt == 0.0) {
      dt = raw_stable_dt(state, derived, ctl);
      if (dt < ctl.dt_min) return finish(RunStatus::blowup_detected, "dt below dt_min", true);
    }
    double stop = ctl.t_end;
    for (const Monitor* m : monitors) {
      if (auto next = m->next_stop(state.t); next && *next > state.t + t_slack) {
        stop = std::min(stop, *next);
      }
    }
    bool landing = false;
    if (dt >= stop - state.t - t_slack) {
      dt = stop - state.t;
      landing = true;
    }

    std::optional<SimState> next;
    std::optional<DerivedFields> next_derived;
    try {
      next = step_ssprk3(state, dt);
      if (landing) next->t = stop;
      next_derived = recover_velocity(*next);
    } catch (const NonFiniteError& e) {
      return finish(RunStatus::nan_detected, e.what(), false);
    } catch (const VacuumError& e) {
      return finish(RunStatus::vacuum_detected, e.what(), false);
    }

    const double drho_next = slope_norm(next->rho);
    out.bkm += 0.5 * dt * (drho * drho + drho_next * drho_next);
    state = std::move(*next);
    derived = std::move(*next_derived);
    drho = drho_next;
    dt_last = dt;
    ++out.steps;

    const double rho_bar = state.rho_bar;
    if (min_value(state.rho) < detect.vacuum_floor * rho_bar) {
      return finish(RunStatus::vacuum_detected, "min rho below vacuum floor", true);
    }
    if (!std::isfinite(drho) || !std::isfinite(out.bkm)) {
      return finish(RunStatus::nan_detected, "non-finite density slope", false);
    }
    if (max_value(state.rho) > detect.rho_max_factor * rho_bar) {
      return finish(RunStatus::blowup_detected, "max rho above threshold", true);
    }
    if (drho > detect.drho_max) {
      return finish(RunStatus::blowup_detected, "density slope above threshold", true);
    }
    if (out.bkm > detect.bkm_cap) {
      return finish(RunStatus::blowup_detected, "BKM integral above cap", true);
    }
    if (spectral_tail_fraction(state.rho, 1e-8 * rho_bar) > detect.spectral_tail) {
      return finish(RunStatus::blowup_detected, "resolution lost (spectral tail)", true);
    }
    if (state.t < ctl.t_end - t_slack) notify(false);
  }
  return finish(RunStatus::completed, "", true);
}

}  // namespace epa
