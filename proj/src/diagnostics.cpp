#include "epa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "epa/error.hpp"
#include "epa/parallel.hpp"
#include "epa/spectral.hpp"

namespace epa {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAbsSlack = 1e-12;

double junction_value(const ModulusParams& p) {
  return p.delta - std::pow(p.delta, 1.0 + 0.5 * p.alpha);
}

// Largest deviation max_i |rho[i+m] - rho[i]| and its arg for m = 1..n/2.
struct PairTable {
  std::vector<double> deviation;
  std::vector<std::size_t> arg;
};

PairTable pair_table(const Field& rho) {
  const std::size_t n = rho.size();
  const std::size_t half = n / 2;
  PairTable t{std::vector<double>(half + 1, 0.0), std::vector<std::size_t>(half + 1, 0)};
  parallel_for(half, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin + 1; m <= end; ++m) {
      double best = -1.0;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(rho[(i + m) % n] - rho[i]);
        if (d > best) {
          best = d;
          arg = i;
        }
      }
      t.deviation[m] = best;
      t.arg[m] = arg;
    }
  });
  return t;
}

bool table_passes(const PairTable& t, std::size_t n, const ModulusParams& p) {
  for (std::size_t m = 1; m < t.deviation.size(); ++m) {
    const double d = static_cast<double>(m) / static_cast<double>(n);
    if (!(t.deviation[m] < omega_B(d, p))) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------

double BoundConstants::rho_lower(double t) const noexcept { return C_m * std::exp(-A_m * t); }

double BoundConstants::F_M(double t) const noexcept {
  if (kappa == 0.0) return F0_inf;
  return F0_inf + k_abs * t + kappa * rho_bar / (A_m * C_m) * std::exp(A_m * t);
}

double BoundConstants::rho_M(double t) const noexcept { return C_M * std::exp(A_M * t); }

double BoundConstants::rho_upper(double t) const noexcept {
  const double f = psiL_sup > 0.0 ? 2.0 : 1.0;
  double bound = std::max({rho0_max, 3.0 * rho_bar, std::pow(f * F_M(t) / C1, 1.0 / alpha)});
  if (psiL_sup > 0.0) {
    bound = std::max(bound, std::pow(2.0 * psiL_sup * rho_bar / C1, 1.0 / (1.0 + alpha)));
  }
  return bound;
}

std::vector<std::pair<std::string, double>> BoundConstants::fields() const {
  return {{"alpha", alpha},     {"dx", dx},           {"rho_bar", rho_bar},
          {"rho0_min", rho0_min}, {"rho0_max", rho0_max}, {"drho0_inf", drho0_inf},
          {"F0_inf", F0_inf},   {"k_abs", k_abs},     {"kreg_dd", kreg_dd},
          {"kappa", kappa},     {"psi_m", psi_m},     {"psiL_sup", psiL_sup},
          {"eps_star", eps_star}, {"eps", eps},       {"A_m", A_m},
          {"C_m", C_m},         {"A_M", A_M},         {"C_M", C_M},
          {"C1", C1}};
}

BoundConstants BoundConstants::from_fields(const std::map<std::string, double>& values) {
  BoundConstants bc;
  const auto names = bc.fields();
  double* slots[] = {&bc.alpha, &bc.dx,       &bc.rho_bar,  &bc.rho0_min, &bc.rho0_max,
                     &bc.drho0_inf, &bc.F0_inf, &bc.k_abs,  &bc.kreg_dd,  &bc.kappa,
                     &bc.psi_m, &bc.psiL_sup, &bc.eps_star, &bc.eps,      &bc.A_m,
                     &bc.C_m,   &bc.A_M,      &bc.C_M,      &bc.C1};
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = values.find(names[i].first);
    if (it == values.end()) throw IoError("bound constants: missing '" + names[i].first + "'");
    *slots[i] = it->second;
  }
  return bc;
}

BoundConstants bound_constants(const SimState& state0, double eps_fraction, double C1) {
  if (!(eps_fraction > 0.0 && eps_fraction < 1.0)) {
    throw DomainError("eps_fraction must lie in (0, 1)");
  }
  if (!(C1 > 0.0)) throw DomainError("C1 must be positive");
  const DerivedFields d = recover_velocity(state0);

  BoundConstants bc;
  bc.alpha = state0.kernel.alpha;
  bc.dx = state0.grid().dx();
  bc.rho_bar = state0.rho_bar;
  bc.rho0_min = min_value(state0.rho);
  bc.rho0_max = max_value(state0.rho);
  bc.drho0_inf = max_abs(derivative(state0.rho));
  bc.F0_inf = max_abs(d.F);
  bc.k_abs = std::abs(state0.potential.k);
  bc.kreg_dd = state0.potential.regular_second_derivative_sup();
  bc.kappa = bc.k_abs + bc.kreg_dd;
  bc.psiL_sup = state0.kernel.has_lipschitz_part() ? state0.kernel.lipschitz_sup() : 0.0;
  bc.psi_m = state0.kernel.min_on_grid(state0.grid());
  if (!(bc.psi_m > 0.0)) {
    throw DomainError("bound constants need a positive kernel minimum, got " +
                      std::to_string(bc.psi_m));
  }
  bc.C1 = C1;

  const double e = std::numbers::e;
  bc.eps_star = 0.5 * (std::sqrt(1.0 + 4.0 * bc.psi_m /
                                           (e * (bc.psi_m + bc.psiL_sup + bc.F0_inf))) -
                       1.0);
  bc.eps = eps_fraction * bc.eps_star;
  bc.A_m = bc.kappa * (1.0 + bc.eps) / bc.psi_m;
  bc.C_m = std::min(bc.rho0_min, bc.eps * e * bc.rho_bar);
  bc.A_M = bc.A_m / bc.alpha;

  const double f = bc.psiL_sup > 0.0 ? 2.0 : 1.0;
  double third = bc.F0_inf;
  if (bc.kappa > 0.0) {
    third += bc.k_abs / (e * bc.A_m) + bc.kappa * bc.rho_bar / (bc.A_m * bc.C_m);
  }
  bc.C_M = std::max({bc.rho0_max, 3.0 * bc.rho_bar, std::pow(f * third / C1, 1.0 / bc.alpha)});
  if (bc.psiL_sup > 0.0) {
    bc.C_M = std::max(bc.C_M, std::pow(2.0 * bc.psiL_sup * bc.rho_bar / C1, 1.0 / (1.0 + bc.alpha)));
  }
  return bc;
}

// ---------------------------------------------------------------------------

BoundCheck check_lower_envelope(const DiagnosticsLog& log, const BoundConstants& bc) {
  BoundCheck out;
  for (const auto& row : log.rows) {
    const double envelope = bc.rho_lower(row.t);
    out.margin = std::min(out.margin, row.rho_min / envelope);
    if (row.rho_min * bc.tolerance() < envelope && out.pass) {
      out.pass = false;
      out.first_violation = row.t;
    }
  }
  return out;
}

UpperCheck check_upper_envelope(const DiagnosticsLog& log, const BoundConstants& bc) {
  UpperCheck out;
  const double tol = bc.tolerance();
  for (const auto& row : log.rows) {
    const double bound = bc.rho_upper(row.t);
    out.margin = std::min(out.margin, bound / row.rho_max);
    if (row.rho_max > bound * tol && out.pass) {
      out.pass = false;
      out.first_violation = row.t;
    }
    // Largest C1 keeping this row inside the envelope.
    const double target = row.rho_max / tol;
    if (target > std::max(bc.rho0_max, 3.0 * bc.rho_bar)) {
      const double f = bc.psiL_sup > 0.0 ? 2.0 : 1.0;
      double c1 = f * bc.F_M(row.t) / std::pow(target, bc.alpha);
      if (bc.psiL_sup > 0.0) {
        c1 = std::max(c1, 2.0 * bc.psiL_sup * bc.rho_bar / std::pow(target, 1.0 + bc.alpha));
      }
      out.fitted_C1 = std::min(out.fitted_C1, c1);
    }
  }
  return out;
}

FCheck check_F_bound(const DiagnosticsLog& log, const BoundConstants& bc) {
  FCheck out;
  out.monotone_required = bc.kappa == 0.0;
  const double tol = bc.tolerance();
  double running_min = kInf;
  for (const auto& row : log.rows) {
    const double bound = bc.F_M(row.t);
    if (row.F_inf > 0.0) out.margin = std::min(out.margin, bound / row.F_inf);
    bool ok = row.F_inf <= bound * tol + kAbsSlack;
    if (out.monotone_required && row.F_inf > running_min * tol + kAbsSlack) {
      out.monotone = false;
      ok = false;
    }
    running_min = std::min(running_min, row.F_inf);
    if (!ok && out.pass) {
      out.pass = false;
      out.first_violation = row.t;
    }
  }
  return out;
}

double bkm_accumulate(const DiagnosticsLog& log) {
  double sum = 0.0;
  for (std::size_t i = 1; i < log.rows.size(); ++i) {
    const auto& a = log.rows[i - 1];
    const auto& b = log.rows[i];
    sum += 0.5 * (b.t - a.t) * (a.drho_inf * a.drho_inf + b.drho_inf * b.drho_inf);
  }
  return sum;
}

// ---------------------------------------------------------------------------

void ModulusParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("modulus: alpha must lie in (0, 2]");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("modulus: delta must lie in (0, 1)");
  if (!(gamma > 0.0)) throw DomainError("modulus: gamma must be positive");
  if (!(log_B >= 0.0)) throw DomainError("modulus: B must be >= 1");
  const double jump = junction_value(*this);
  if (gamma > jump / (2.0 * std::numbers::ln2)) {
    throw DomainError("modulus: gamma exceeds (delta - delta^(1+alpha/2)) / (2 ln 2)");
  }
  const double q = 1.0 + 0.5 * alpha;
  if (!(q * std::pow(delta, 0.5 * alpha) < 1.0)) {
    throw DomainError("modulus: power branch not increasing up to delta");
  }
  if (gamma > delta - q * std::pow(delta, q)) {
    throw DomainError("modulus: omega_B not concave at the branch junction");
  }
}

double ModulusParams::B() const noexcept { return std::exp(log_B); }

double omega_B(double xi, const ModulusParams& p) {
  if (!(xi > 0.0 && xi <= 0.5)) throw DomainError("omega_B: xi must lie in (0, 1/2]");
  const double log_ratio = p.log_B + std::log(xi) - std::log(p.delta);
  if (log_ratio < 0.0) {
    const double bx = std::exp(p.log_B + std::log(xi));
    return bx - std::pow(bx, 1.0 + 0.5 * p.alpha);
  }
  return p.gamma * log_ratio + junction_value(p);
}

MocResult moc_check(const Field& rho, const ModulusParams& p) {
  p.validate();
  const std::size_t n = rho.size();
  const PairTable t = pair_table(rho);
  MocResult out;
  for (std::size_t m = 1; m < t.deviation.size(); ++m) {
    const double d = static_cast<double>(m) / static_cast<double>(n);
    const double slack = omega_B(d, p) - t.deviation[m];
    if (slack < out.margin) {
      out.margin = slack;
      out.i = t.arg[m];
      out.j = (t.arg[m] + m) % n;
      out.distance = d;
    }
  }
  out.pass = out.margin > 0.0;
  return out;
}

double moc_min_log_B(const Field& rho, double delta, double gamma, double alpha,
                     double log_B_cap) {
  ModulusParams p{delta, gamma, 0.0, alpha};
  p.validate();
  const PairTable t = pair_table(rho);
  const std::size_t n = rho.size();
  if (table_passes(t, n, p)) return 0.0;
  p.log_B = log_B_cap;
  if (!table_passes(t, n, p)) return kInf;
  double lo = 0.0;
  double hi = log_B_cap;
  const double tol = std::log(1.01);
  while (hi - lo > tol) {
    p.log_B = 0.5 * (lo + hi);
    // Stop when the midpoint no longer separates the bracket in double precision.
    if (p.log_B <= lo || p.log_B >= hi) break;
    (table_passes(t, n, p) ? hi : lo) = p.log_B;
  }
  return hi;
}

double moc_min_B(const Field& rho, double delta, double gamma, double alpha) {
  return std::exp(moc_min_log_B(rho, delta, gamma, alpha));
}

ModulusParams certified_modulus_params(const SimState& state0, const BoundConstants& bc,
                                       double T, double C2, double C3, double C_F) {
  if (!(T >= 0.0)) throw DomainError("certified modulus: T must be >= 0");
  if (!(C2 > 0.0 && C3 > 0.0 && C_F > 0.0)) {
    throw DomainError("certified modulus: C2, C3, C_F must be positive");
  }
  const double alpha = bc.alpha;
  const double rho_inf = max_abs(state0.rho);
  const double slope = max_abs(derivative(state0.rho));
  const double rm = bc.rho_lower(T);
  const double rM = bc.rho_M(T);
  const double FM = bc.F_M(T);

  double delta = 1.0;
  if (slope > 0.0) delta = std::min(delta, 2.0 * rho_inf / slope);
  const double denom = std::max({4.0 * C2, 12.0 * rM * FM, 6.0 * rM * rM * C_F});
  delta = 0.5 * std::min(delta, std::pow(C3 * rm / denom, 2.0 / alpha));
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError("certified modulus: delta = " + std::to_string(delta) + " outside (0, 1)");
  }
  const double jump = delta - std::pow(delta, 1.0 + 0.5 * alpha);
  const double gamma =
      0.5 * std::min(C3 * rm / (4.0 * C2),
                     std::min(1.0 / (2.0 * std::numbers::ln2), alpha) * jump);
  if (!(gamma > 0.0)) {
    throw DomainError("certified modulus: gamma = " + std::to_string(gamma) + " not positive");
  }
  double log_bound = 0.0;
  if (slope > 0.0) {
    log_bound = std::max(log_bound,
                         std::log(delta * slope / (2.0 * rho_inf)) + 2.0 * rho_inf / gamma);
  }
  log_bound = std::max(log_bound,
                       std::log(2.0 * delta) + 6.0 * rM * rM * FM / (C3 * gamma * rm));
  return ModulusParams{delta, gamma, std::numbers::ln2 + log_bound, alpha};
}

// ---------------------------------------------------------------------------

DiagnosticsMonitor::DiagnosticsMonitor(std::optional<BoundConstants> bc,
                                       std::optional<MocSettings> moc)
    : bc_(std::move(bc)), moc_(std::move(moc)) {
  if (moc_) {
    ModulusParams{moc_->delta, moc_->gamma, moc_->log_B.value_or(0.0), moc_->alpha}.validate();
  }
}

void DiagnosticsMonitor::observe(const StepSnapshot& s) {
  DiagnosticsRow row;
  row.t = s.state.t;
  row.rho_min = min_value(s.state.rho);
  row.rho_max = max_value(s.state.rho);
  row.F_inf = max_abs(s.derived.F);
  row.drho_inf = s.drho_inf;
  row.bkm = s.bkm;
  row.mass = mean(s.state.rho);
  row.momentum = inner(s.state.rho, s.derived.u);
  if (bc_) {
    row.env_lower_margin = row.rho_min / bc_->rho_lower(row.t);
    row.env_upper_margin = bc_->rho_upper(row.t) / row.rho_max;
  }
  if (moc_ && (s.final || s.step % std::max<std::size_t>(1, moc_->every) == 0)) {
    const double alpha = moc_->alpha;
    row.moc_log_B = moc_min_log_B(s.state.rho, moc_->delta, moc_->gamma, alpha);
    if (moc_->log_B) {
      row.moc_pass =
          moc_check(s.state.rho, ModulusParams{moc_->delta, moc_->gamma, *moc_->log_B, alpha}).pass
              ? 1
              : 0;
    }
  }
  if (!log_.rows.empty() && log_.rows.back().t == row.t) {
    log_.rows.back() = row;
  } else {
    log_.rows.push_back(row);
  }
}

}  // namespace epa
