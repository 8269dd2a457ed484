#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "epa/diagnostics.hpp"
#include "epa/error.hpp"
#include "epa/spectral.hpp"
#include "support.hpp"

using namespace epa;
using epa::testing::kTwoPi;

namespace {

constexpr double kE = std::numbers::e;

SimState uniform_state(double k, const KernelSpec& kernel = {1.0, 0.5, LipschitzZero{}}) {
  const Grid g(64);
  return make_state(Field(g, 1.0), Field(g, 0.0), kernel, PotentialSpec{k, {}});
}

DiagnosticsRow row(double t, double rho_min, double rho_max, double F) {
  DiagnosticsRow r;
  r.t = t;
  r.rho_min = rho_min;
  r.rho_max = rho_max;
  r.F_inf = F;
  return r;
}

// Every grid pair checked directly against omega_B.
bool brute_obeys(const Field& rho, const ModulusParams& p) {
  const std::size_t n = rho.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = rho.grid().distance(i, j);
      if (d == 0.0) continue;
      if (!(std::abs(rho[i] - rho[j]) < omega_B(d, p))) return false;
    }
  }
  return true;
}

Field cosine(const Grid& g, double a) {
  return Field::from_function(g, [a](double x) { return 1.0 + a * std::cos(kTwoPi * x); });
}

}  // namespace

TEST(BoundConstants, UniformStateByHand) {
  const SimState s = uniform_state(1.0);
  const BoundConstants bc = bound_constants(s);
  const double pm = psi_m(0.5);
  // F0 = 0 and psi_L = 0 reduce eps* to a pure number.
  const double eps_star = 0.5 * (std::sqrt(1.0 + 4.0 / kE) - 1.0);
  const double eps = 0.5 * eps_star;
  const double A_m = (1.0 + eps) / pm;
  const double C_m = std::min(1.0, eps * kE);
  EXPECT_NEAR(bc.psi_m, pm, 1e-14);
  EXPECT_NEAR(bc.eps_star, eps_star, 1e-15);
  EXPECT_NEAR(bc.A_m, A_m, 1e-15);
  EXPECT_NEAR(bc.C_m, C_m, 1e-15);
  EXPECT_NEAR(bc.A_M, 2.0 * A_m, 1e-15);
  EXPECT_DOUBLE_EQ(bc.F0_inf, 0.0);
  const double third = 1.0 / (kE * A_m) + 1.0 / (A_m * C_m);
  EXPECT_NEAR(bc.C_M, std::max(3.0, third * third), 1e-12);
  for (double t : {0.0, 0.5, 2.0}) {
    EXPECT_NEAR(bc.F_M(t), t + std::exp(A_m * t) / (A_m * C_m), 1e-12 * bc.F_M(t));
    EXPECT_NEAR(bc.rho_lower(t), C_m * std::exp(-A_m * t), 1e-15);
    const double fm = bc.F_M(t);
    EXPECT_NEAR(bc.rho_upper(t), std::max(3.0, fm * fm), 1e-12 * std::max(3.0, fm * fm));
  }
  EXPECT_DOUBLE_EQ(bc.tolerance(), 1.0 + 10.0 / 64.0);
  EXPECT_FALSE(bc.advisory());
}

TEST(BoundConstants, NoForcingGivesConstantEnvelope) {
  const Grid g(64);
  const SimState s = make_initial({"cosine", {{"a", 0.3}, {"b", 0.2}}}, g, {1.0, 0.5, {}}, {});
  const BoundConstants bc = bound_constants(s);
  EXPECT_EQ(bc.A_m, 0.0);
  EXPECT_EQ(bc.kappa, 0.0);
  EXPECT_EQ(bc.rho_lower(0.0), bc.rho_lower(5.0));
  EXPECT_EQ(bc.F_M(7.0), bc.F0_inf);
  EXPECT_NEAR(bc.F0_inf, max_abs(recover_velocity(s).F), 1e-15);
}

TEST(BoundConstants, LipschitzPartEntersEverywhere) {
  const KernelSpec k{1.0, 0.5, LipschitzCosine{0.5, 0.3}};
  const SimState s = uniform_state(-0.5, k);
  const BoundConstants bc = bound_constants(s, 0.25, 2.0);
  EXPECT_NEAR(bc.psiL_sup, 0.8, 1e-15);
  const double pm = psi_m(0.5) + 0.2;
  EXPECT_NEAR(bc.psi_m, pm, 1e-12);
  const double F0 = 0.5;  // G0 = psi_L * rho0 = 0.5, F0 = G0 / rho0
  EXPECT_NEAR(bc.F0_inf, F0, 1e-14);
  const double eps_star = 0.5 * (std::sqrt(1.0 + 4.0 * pm / (kE * (pm + 0.8 + F0))) - 1.0);
  EXPECT_NEAR(bc.eps_star, eps_star, 1e-14);
  EXPECT_NEAR(bc.eps, 0.25 * eps_star, 1e-15);
  const double branch = std::pow(2.0 * 0.8 / 2.0, 1.0 / 1.5);
  EXPECT_GE(bc.rho_upper(0.0), branch);
  EXPECT_GE(bc.rho_upper(1.0), std::pow(2.0 * bc.F_M(1.0) / 2.0, 2.0) * (1 - 1e-14));
}

TEST(BoundConstants, Rejections) {
  const SimState bad = uniform_state(0.0, {0.0, 0.5, LipschitzCosine{0.1, 0.2}});
  EXPECT_THROW(bound_constants(bad), DomainError);
  EXPECT_THROW(bound_constants(uniform_state(1.0), 1.0), DomainError);
  EXPECT_THROW(bound_constants(uniform_state(1.0), 0.5, 0.0), DomainError);
  EXPECT_TRUE(bound_constants(uniform_state(1.0, {1.0, 1.2, {}})).advisory());
}

TEST(BoundConstants, FieldRoundTrip) {
  const BoundConstants bc = bound_constants(uniform_state(1.0, {1.0, 0.5, LipschitzConstant{0.2}}));
  std::map<std::string, double> m;
  for (const auto& [k, v] : bc.fields()) m[k] = v;
  const BoundConstants back = BoundConstants::from_fields(m);
  EXPECT_EQ(back.fields(), bc.fields());
  m.erase("C_M");
  EXPECT_THROW(BoundConstants::from_fields(m), IoError);
}

TEST(Checks, LowerEnvelope) {
  const BoundConstants bc = bound_constants(uniform_state(1.0));
  DiagnosticsLog log;
  log.rows = {row(0.0, 1.0, 1.0, 0.0), row(1.0, bc.rho_lower(1.0), 1.0, 0.0)};
  BoundCheck c = check_lower_envelope(log, bc);
  EXPECT_TRUE(c.pass);
  EXPECT_NEAR(c.margin, 1.0, 1e-15);
  // Within the 1 + 10 dx tolerance still passes, below it fails.
  log.rows.push_back(row(2.0, bc.rho_lower(2.0) / (1.0 + 5.0 / 64.0), 1.0, 0.0));
  EXPECT_TRUE(check_lower_envelope(log, bc).pass);
  log.rows.push_back(row(3.0, bc.rho_lower(3.0) / (1.0 + 20.0 / 64.0), 1.0, 0.0));
  c = check_lower_envelope(log, bc);
  EXPECT_FALSE(c.pass);
  ASSERT_TRUE(c.first_violation);
  EXPECT_EQ(*c.first_violation, 3.0);
}

TEST(Checks, UpperEnvelopeAndFittedC1) {
  const BoundConstants bc = bound_constants(uniform_state(1.0));
  DiagnosticsLog log;
  log.rows = {row(0.0, 1.0, 1.0, 0.0), row(0.5, 0.9, 2.0, 0.0)};
  UpperCheck c = check_upper_envelope(log, bc);
  EXPECT_TRUE(c.pass);
  EXPECT_TRUE(std::isinf(c.fitted_C1));
  const double big = 10.0 * bc.rho_upper(1.0);
  log.rows.push_back(row(1.0, 0.9, big, 0.0));
  c = check_upper_envelope(log, bc);
  EXPECT_FALSE(c.pass);
  EXPECT_EQ(*c.first_violation, 1.0);
  ASSERT_TRUE(std::isfinite(c.fitted_C1));
  // The fitted constant is the largest admissible C1.
  BoundConstants fitted = bc;
  fitted.C1 = c.fitted_C1 * (1.0 - 1e-9);
  EXPECT_TRUE(check_upper_envelope(log, fitted).pass);
  fitted.C1 = c.fitted_C1 * 1.01;
  EXPECT_FALSE(check_upper_envelope(log, fitted).pass);
}

TEST(Checks, FBoundAndMonotonicity) {
  const BoundConstants forced = bound_constants(uniform_state(1.0));
  DiagnosticsLog log;
  log.rows = {row(0.0, 1, 1, 0.1), row(1.0, 1, 1, 0.5 * forced.F_M(1.0)), row(2.0, 1, 1, 0.3)};
  FCheck c = check_F_bound(log, forced);
  EXPECT_TRUE(c.pass);
  EXPECT_FALSE(c.monotone_required);
  log.rows.push_back(row(3.0, 1, 1, 2.0 * forced.F_M(3.0)));
  EXPECT_FALSE(check_F_bound(log, forced).pass);

  const Grid g(64);
  const SimState s = make_initial({"cosine", {{"a", 0.3}, {"b", 0.2}}}, g, {1.0, 0.5, {}}, {});
  const BoundConstants free = bound_constants(s);
  const double F0 = free.F0_inf;
  log.rows = {row(0.0, 1, 1, F0), row(1.0, 1, 1, 0.5 * F0), row(2.0, 1, 1, 0.6 * F0)};
  c = check_F_bound(log, free);
  EXPECT_TRUE(c.monotone_required);
  EXPECT_FALSE(c.monotone);
  EXPECT_FALSE(c.pass);
  EXPECT_EQ(*c.first_violation, 2.0);
  log.rows.back().F_inf = 0.5 * F0 * (1.0 + 1.0 / 64.0);
  EXPECT_TRUE(check_F_bound(log, free).pass);
}

TEST(Bkm, TrapezoidRule) {
  DiagnosticsLog log;
  for (int i = 0; i <= 1000; ++i) {
    DiagnosticsRow r;
    r.t = i / 1000.0;
    r.drho_inf = r.t;
    log.rows.push_back(r);
  }
  // int_0^1 t^2 dt = 1/3; the trapezoid rule adds h^2 / 6.
  EXPECT_NEAR(bkm_accumulate(log), 1.0 / 3.0 + 1e-6 / 6.0, 1e-14);
  EXPECT_EQ(bkm_accumulate(DiagnosticsLog{}), 0.0);
}

TEST(OmegaB, ShapeProperties) {
  const ModulusParams p{0.1, 0.02, std::log(50.0), 0.5};
  ASSERT_NO_THROW(p.validate());
  const double junction = p.delta / p.B();
  // Continuous at the junction.
  EXPECT_NEAR(omega_B(junction * (1 - 1e-12), p), omega_B(junction * (1 + 1e-12), p), 1e-10);
  // Slope B at the origin; the correction decays like (B xi)^(alpha / 2).
  EXPECT_NEAR(omega_B(1e-20, p) / 1e-20, p.B(), 1e-4 * p.B());
  EXPECT_LT(omega_B(1e-9, p) / 1e-9, p.B());
  double prev = 0.0, prev_slope = std::numeric_limits<double>::infinity();
  const double h = 1e-4;
  for (double xi = h; xi <= 0.5; xi += h) {
    const double w = omega_B(xi, p);
    EXPECT_GT(w, prev) << xi;
    const double slope = (w - prev) / h;
    if (xi > h) EXPECT_LE(slope, prev_slope * (1 + 1e-9)) << xi;
    prev = w;
    prev_slope = slope;
  }
  EXPECT_THROW(omega_B(0.0, p), DomainError);
  EXPECT_THROW(omega_B(0.6, p), DomainError);
}

TEST(OmegaB, ParameterValidation) {
  EXPECT_THROW((ModulusParams{1.0, 0.01, 0.0, 0.5}).validate(), DomainError);
  EXPECT_THROW((ModulusParams{0.1, 0.0, 0.0, 0.5}).validate(), DomainError);
  EXPECT_THROW((ModulusParams{0.1, 0.04, 0.0, 0.5}).validate(), DomainError);
  EXPECT_THROW((ModulusParams{0.1, 0.01, -1.0, 0.5}).validate(), DomainError);
  // gamma admissible for the jump but not for concavity.
  EXPECT_THROW((ModulusParams{0.1, 0.0305, 0.0, 0.5}).validate(), DomainError);
  // Power branch not increasing up to delta.
  EXPECT_THROW((ModulusParams{0.7, 0.001, 0.0, 1.0}).validate(), DomainError);
  EXPECT_NO_THROW((ModulusParams{0.1, 0.02, 1e12, 0.5}).validate());
}

TEST(Moc, ConstantDensityObeysEveryModulus) {
  const Field rho(Grid(64), 2.0);
  EXPECT_TRUE(moc_check(rho, {0.1, 0.02, 0.0, 0.5}).pass);
  EXPECT_EQ(moc_min_log_B(rho, 0.1, 0.02, 0.5), 0.0);
}

TEST(Moc, MinimalBMatchesBruteForceScan) {
  const Grid g(48);
  for (double a : {0.02, 0.1, 0.2}) {
    const Field rho = cosine(g, a);
    const double found = moc_min_log_B(rho, 0.1, 0.02, 0.5);
    // Fine scan in ln B with the all-pairs oracle.
    double brute = std::numeric_limits<double>::infinity();
    for (double lb = 0.0; lb < 20.0; lb += 1e-3) {
      if (brute_obeys(rho, {0.1, 0.02, lb, 0.5})) {
        brute = lb;
        break;
      }
    }
    ASSERT_TRUE(std::isfinite(brute)) << a;
    EXPECT_GE(found, brute - 1e-3) << a;
    EXPECT_LE(found, brute + std::log(1.01) + 1e-3) << a;
    EXPECT_TRUE(moc_check(rho, {0.1, 0.02, found, 0.5}).pass);
    if (found > 0.1) {
      const MocResult fail = moc_check(rho, {0.1, 0.02, found - 0.1, 0.5});
      EXPECT_FALSE(fail.pass);
      EXPECT_LE(fail.margin, 0.0);
      EXPECT_NEAR(std::abs(rho[fail.i] - rho[fail.j]) + fail.margin,
                  omega_B(fail.distance, {0.1, 0.02, found - 0.1, 0.5}), 1e-12);
    }
  }
}

TEST(Moc, MinimalBGrowsWithAmplitudeAndBoundsSlope) {
  std::mt19937_64 rng(61);
  const Grid g(64);
  double prev = 0.0;
  for (double a = 0.02; a < 0.3; a += 0.04) {
    const Field rho = cosine(g, a);
    const double lb = moc_min_log_B(rho, 0.1, 0.02, 0.5);
    EXPECT_GE(lb, prev);
    prev = lb;
  }
  for (int trial = 0; trial < 5; ++trial) {
    const Field rho = epa::testing::random_smooth(g, rng, 5, 0.2, 1.0);
    const double lb = moc_min_log_B(rho, 0.1, 0.02, 0.5);
    double quotient = 0.0;
    for (std::size_t i = 0; i < 64; ++i) quotient = std::max(quotient, std::abs(rho[(i + 1) % 64] - rho[i]) * 64.0);
    // omega_B(xi) < B xi, so an obeyed modulus bounds discrete slopes by B.
    EXPECT_LE(quotient, std::exp(lb));
  }
  EXPECT_TRUE(std::isinf(moc_min_log_B(cosine(g, 0.3), 0.1, 0.02, 0.5, 1.0)));
}

TEST(CertifiedModulus, FormulaAndInitialObedience) {
  const Grid g(64);
  const SimState s = make_initial({"cosine", {{"a", 0.3}, {"b", 0.2}, {"u_mean", 0.1}}}, g,
                                  {1.0, 0.5, {}}, PotentialSpec{1.0, {}});
  const BoundConstants bc = bound_constants(s);
  const double T = 2.0;
  const ModulusParams p = certified_modulus_params(s, bc, T);
  ASSERT_NO_THROW(p.validate());

  const double rinf = max_abs(s.rho), slope = max_abs(derivative(s.rho));
  const double rm = bc.rho_lower(T), rM = bc.rho_M(T), FM = bc.F_M(T);
  const double denom = std::max({4.0, 12.0 * rM * FM, 6.0 * rM * rM});
  const double delta = 0.5 * std::min({1.0, 2.0 * rinf / slope, std::pow(rm / denom, 4.0)});
  EXPECT_NEAR(p.delta, delta, 1e-12 * delta);
  const double jump = delta - std::pow(delta, 1.25);
  const double gamma = 0.5 * std::min(rm / 4.0, 0.5 * jump);
  EXPECT_NEAR(p.gamma, gamma, 1e-12 * gamma);
  const double lb = std::max({0.0, std::log(delta * slope / (2 * rinf)) + 2 * rinf / gamma,
                              std::log(2 * delta) + 6 * rM * rM * FM / (gamma * rm)});
  EXPECT_NEAR(p.log_B, lb + std::log(2.0), 1e-12 * lb);
  // The initial density obeys the certified modulus.
  EXPECT_TRUE(moc_check(s.rho, p).pass);
}

TEST(CertifiedModulus, DependenceOnHorizon) {
  const Grid g(64);
  const SimState free = make_initial({"cosine", {{"a", 0.3}}}, g, {1.0, 0.5, {}}, {});
  const BoundConstants bf = bound_constants(free);
  const ModulusParams a = certified_modulus_params(free, bf, 0.5);
  const ModulusParams b = certified_modulus_params(free, bf, 5.0);
  EXPECT_EQ(a.delta, b.delta);
  EXPECT_EQ(a.log_B, b.log_B);

  const SimState forced = make_initial({"cosine", {{"a", 0.3}}}, g, {1.0, 0.5, {}}, PotentialSpec{1.0, {}});
  const BoundConstants bc = bound_constants(forced);
  double prev_delta = 1.0, prev_lb = 0.0;
  for (double T : {0.0, 0.5, 1.0, 2.0}) {
    const ModulusParams p = certified_modulus_params(forced, bc, T);
    EXPECT_LE(p.delta, prev_delta);
    EXPECT_GE(p.log_B, prev_lb);
    prev_delta = p.delta;
    prev_lb = p.log_B;
  }
  EXPECT_THROW(certified_modulus_params(forced, bc, -1.0), DomainError);
  EXPECT_THROW(certified_modulus_params(forced, bc, 1.0, 0.0), DomainError);
}

TEST(DiagnosticsMonitor, LogsEveryStepAndModulusOnCadence) {
  const Grid g(64);
  const SimState s = make_initial({"cosine", {{"a", 0.3}, {"b", 0.2}, {"u_mean", 0.1}}}, g,
                                  {1.0, 0.5, {}}, {});
  const BoundConstants bc = bound_constants(s);
  const double lb = moc_min_log_B(s.rho, 0.1, 0.02, 0.5);
  DiagnosticsMonitor mon(bc, MocSettings{0.1, 0.02, 0.5, lb + std::log(1.05), 4});
  StepControl c;
  c.t_end = 0.1;
  const RunOutcome out = run(s, c, {&mon});
  ASSERT_EQ(out.status, RunStatus::completed);
  const auto& rows = mon.log().rows;
  ASSERT_EQ(rows.size(), out.steps + 1);
  EXPECT_EQ(rows.front().t, 0.0);
  EXPECT_EQ(rows.back().t, 0.1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool expect_moc = i % 4 == 0 || i + 1 == rows.size();
    EXPECT_EQ(rows[i].moc_pass >= 0, expect_moc) << i;
    EXPECT_EQ(!std::isnan(rows[i].moc_log_B), expect_moc) << i;
    EXPECT_NEAR(rows[i].env_lower_margin, rows[i].rho_min / bc.rho_lower(rows[i].t), 1e-15);
    EXPECT_NEAR(rows[i].mass, 1.0, 1e-13);
  }
  EXPECT_EQ(rows.front().moc_pass, 1);
  EXPECT_NEAR(bkm_accumulate(mon.log()), out.bkm, 1e-12 * out.bkm);
  EXPECT_THROW(DiagnosticsMonitor(bc, MocSettings{2.0, 0.02, 0.5, 0.0, 1}), DomainError);
}
