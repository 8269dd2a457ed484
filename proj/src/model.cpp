#include "epa/model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "epa/error.hpp"
#include "epa/parallel.hpp"
#include "epa/spectral.hpp"

namespace epa {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// -d_x of the dealiased flux in a single transform pair.
Field dealiased_divergence(const Field& flux) {
  const double cutoff = static_cast<double>(flux.grid().dealias_cutoff());
  return apply_multiplier(
      flux, [cutoff](double k) -> Complex {
        return k > cutoff ? 0.0 : Complex(0.0, -kTwoPi * k);
      },
      Parity::odd);
}

void require_finite_rate(const Field& f, const char* what) {
  if (!f.is_finite()) throw NonFiniteError(std::string("rhs: non-finite ") + what);
}

// Velocity whose G-transform is the constant mean(psi_L * rho).
Field relaxed_velocity(const Field& rho, const KernelSpec& kernel) {
  Field u(rho.grid());
  if (kernel.has_singular_part()) u = kernel.c * lambda_alpha_inv_dx(rho, kernel.alpha);
  if (kernel.has_lipschitz_part()) {
    Field conv = lipschitz_convolution(kernel, rho);
    conv += -mean(conv);
    u -= antiderivative(conv);
  }
  return u;
}

class PresetParams {
 public:
  PresetParams(const InitialPreset& preset, std::map<std::string, double> defaults)
      : name_(preset.name), values_(std::move(defaults)) {
    for (const auto& [key, value] : preset.params) {
      if (!values_.contains(key)) {
        throw ConfigError("preset '" + name_ + "' has no parameter '" + key + "'");
      }
      values_[key] = value;
    }
  }
  double operator()(const std::string& key) const { return values_.at(key); }

 private:
  std::string name_;
  std::map<std::string, double> values_;
};

double periodic_gaussian(double x, double sigma) {
  double s = 0.0;
  for (int m = -3; m <= 3; ++m) {
    const double z = x + m;
    s += std::exp(-0.5 * z * z / (sigma * sigma));
  }
  return s;
}

Field random_series(const Grid& grid, std::mt19937_64& rng, int modes, double amp) {
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::vector<double> a(static_cast<std::size_t>(modes));
  std::vector<double> b(static_cast<std::size_t>(modes));
  for (int m = 0; m < modes; ++m) {
    a[m] = coeff(rng) / (1.0 + m);
    b[m] = coeff(rng) / (1.0 + m);
  }
  Field f = Field::from_function(grid, [&](double x) {
    double v = 0.0;
    for (int m = 0; m < modes; ++m) {
      v += a[m] * std::cos(kTwoPi * (m + 1) * x) + b[m] * std::sin(kTwoPi * (m + 1) * x);
    }
    return v;
  });
  const double scale = max_abs(f);
  if (scale > 0.0) f *= amp / scale;
  return f;
}

}  // namespace

Field compute_G(const Field& rho, const Field& u, const KernelSpec& kernel) {
  require_same_grid(rho, u, "compute_G");
  rho.require_finite("compute_G");
  u.require_finite("compute_G");
  Field G = derivative(u);
  if (kernel.has_singular_part()) G -= kernel.c * lambda_alpha(rho, kernel.alpha);
  if (kernel.has_lipschitz_part()) G += lipschitz_convolution(kernel, rho);
  return G;
}

DerivedFields recover_velocity(const SimState& state) {
  const Field& rho = state.rho;
  const Field& G = state.G;
  require_same_grid(rho, G, "recover_velocity");
  rho.require_finite("recover_velocity");
  G.require_finite("recover_velocity");
  if (!(min_value(rho) > 0.0)) {
    throw VacuumError("recover_velocity: min rho = " + std::to_string(min_value(rho)));
  }
  const KernelSpec& kernel = state.kernel;

  Field singular(rho.grid());
  if (kernel.has_singular_part()) {
    singular = kernel.c * lambda_alpha_inv_dx(rho, kernel.alpha);
  }
  Field G_centered = G;
  G_centered += -mean(G);
  Field prim_G = antiderivative(G_centered);

  Field prim_total = prim_G;
  if (kernel.has_lipschitz_part()) {
    prim_total = antiderivative(G - lipschitz_convolution(kernel, rho));
  } else {
    // Validates mean(G) = 0 for the pure singular case.
    (void)antiderivative(G);
  }

  DerivedFields out{singular + prim_total, G / rho, rho, singular + prim_G,
                    Field(rho.grid()), 0.0};
  const double mass = mean(rho);
  out.I0 = (state.M0 - inner(rho, out.u)) / mass;
  out.u += out.I0;
  out.u_L = out.u - out.u_S;
  out.theta += -state.rho_bar;
  return out;
}

StateRate rhs(const SimState& state) {
  const DerivedFields d = recover_velocity(state);
  StateRate rate{dealiased_divergence(state.rho * d.u),
                 dealiased_divergence(state.G * d.u)};
  if (state.potential.k != 0.0 || state.potential.has_regular_part()) {
    rate.dG += dealias(potential_forcing(state.rho, state.potential));
  }
  require_finite_rate(rate.drho, "d rho/dt");
  require_finite_rate(rate.dG, "dG/dt");
  return rate;
}

Field alignment_direct(const Field& rho, const Field& u, const KernelSpec& kernel,
                       std::size_t refinement) {
  require_same_grid(rho, u, "alignment_direct");
  const std::size_t n = rho.size();
  if (refinement < n || refinement % n != 0) {
    throw DomainError("alignment_direct: refinement must be a multiple of n");
  }
  Field out(rho.grid());
  if (kernel.is_inactive()) return out;

  const std::size_t half = refinement / 2;
  const double h = 1.0 / static_cast<double>(refinement);
  std::vector<double> psi(half, 0.0);
  if (kernel.has_singular_part()) {
    const auto table = offset_kernel_table(kernel.alpha, refinement);
    for (std::size_t j = 0; j < half; ++j) psi[j] = kernel.c * (*table)[j];
  }
  if (kernel.has_lipschitz_part()) {
    for (std::size_t j = 0; j < half; ++j) {
      const double y = -0.5 + (static_cast<double>(j) + 0.5) * h;
      // psi_L is even: one value serves the pair (y, -y).
      psi[j] += 0.5 * (kernel.lipschitz_value(y) + kernel.lipschitz_value(-y));
    }
  }
  const std::vector<double> rz = trig_interpolate(rho, refinement, 0.5);
  const std::vector<double> uz = trig_interpolate(u, refinement, 0.5);
  const std::size_t ratio = refinement / n;

  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t base = (i * ratio + half) % refinement;
      double sum = 0.0;
      for (std::size_t j = 0; j < half; ++j) {
        const std::size_t lp = (base + j) % refinement;
        const std::size_t lm = (base + refinement - 1 - j) % refinement;
        sum += psi[j] * ((uz[lp] - u[i]) * rz[lp] + (uz[lm] - u[i]) * rz[lm]);
      }
      out[i] = h * sum;
    }
  });
  return out;
}

Field alignment_spectral(const Field& rho, const Field& u, const KernelSpec& kernel) {
  require_same_grid(rho, u, "alignment_spectral");
  Field out(rho.grid());
  const Field momentum = rho * u;
  if (kernel.has_singular_part()) {
    out += kernel.c * (u * lambda_alpha(rho, kernel.alpha) -
                       lambda_alpha(momentum, kernel.alpha));
  }
  if (kernel.has_lipschitz_part()) {
    out += lipschitz_convolution(kernel, momentum) - u * lipschitz_convolution(kernel, rho);
  }
  return out;
}

SimState make_state(const Field& rho0, const Field& u0, const KernelSpec& kernel,
                    const PotentialSpec& potential) {
  require_same_grid(rho0, u0, "make_state");
  rho0.require_finite("make_state");
  u0.require_finite("make_state");
  if (!(min_value(rho0) > 0.0)) {
    throw ConfigError("initial density must be positive, min rho0 = " +
                      std::to_string(min_value(rho0)));
  }
  SimState s{rho0, compute_G(rho0, u0, kernel), 0.0, mean(rho0), inner(rho0, u0),
             kernel, potential};
  return s;
}

SimState make_initial(const InitialPreset& preset, const Grid& grid,
                      const KernelSpec& kernel, const PotentialSpec& potential) {
  Field rho(grid);
  Field u(grid);
  double relax = 0.0;
  const std::string& name = preset.name;

  if (name == "uniform") {
    const PresetParams p(preset, {{"rho_bar", 1.0}, {"u_mean", 0.0}});
    rho = Field(grid, p("rho_bar"));
    u = Field(grid, p("u_mean"));
  } else if (name == "cosine") {
    const PresetParams p(preset, {{"rho_bar", 1.0}, {"a", 0.5}, {"b", 0.0},
                                  {"mode", 1.0}, {"relax", 0.0}, {"u_mean", 0.0}});
    const double m = p("mode");
    if (m < 1.0 || m != std::floor(m)) throw ConfigError("cosine: mode must be a positive integer");
    rho = Field::from_function(grid, [&](double x) {
      return p("rho_bar") + p("a") * std::cos(kTwoPi * m * x);
    });
    u = Field::from_function(grid, [&](double x) {
      return p("u_mean") + p("b") * std::sin(kTwoPi * m * x);
    });
    relax = p("relax");
  } else if (name == "gaussian-bump" || name == "near-vacuum") {
    const bool vacuum = name == "near-vacuum";
    const PresetParams p(
        preset, vacuum ? std::map<std::string, double>{{"eps", 0.01}, {"amp", 1.0},
                                                       {"sigma", 0.15}, {"b", 0.0},
                                                       {"relax", 0.0}, {"u_mean", 0.0}}
                       : std::map<std::string, double>{{"base", 1.0}, {"amp", 1.0},
                                                       {"sigma", 0.1}, {"b", 0.0},
                                                       {"relax", 0.0}, {"u_mean", 0.0}});
    const double floor = vacuum ? p("eps") : p("base");
    const double sigma = p("sigma");
    if (!(sigma > 0.0)) throw ConfigError(name + ": sigma must be positive");
    rho = Field::from_function(grid, [&](double x) {
      return floor + p("amp") * periodic_gaussian(x, sigma);
    });
    u = Field::from_function(grid, [&](double x) {
      return p("u_mean") + p("b") * std::sin(kTwoPi * x);
    });
    relax = p("relax");
  } else if (name == "burgers-shock") {
    const PresetParams p(preset, {{"rho_bar", 1.0}, {"amp", 1.0}});
    rho = Field(grid, p("rho_bar"));
    u = Field::from_function(grid, [&](double x) { return -p("amp") * std::sin(kTwoPi * x); });
  } else if (name == "random-smooth") {
    const PresetParams p(preset, {{"seed", 1.0}, {"modes", 4.0}, {"rho_amp", 0.3},
                                  {"u_amp", 0.3}, {"rho_bar", 1.0}});
    const int modes = static_cast<int>(p("modes"));
    if (modes < 1) throw ConfigError("random-smooth: modes must be >= 1");
    std::mt19937_64 rng(static_cast<std::uint64_t>(p("seed")));
    rho = random_series(grid, rng, modes, p("rho_amp"));
    rho += p("rho_bar");
    u = random_series(grid, rng, modes, p("u_amp"));
  } else {
    throw ConfigError("unknown initial preset '" + name + "'");
  }

  rho = dealias(rho);
  if (!(min_value(rho) > 0.0)) {
    throw ConfigError("preset '" + name + "' gives min rho0 = " +
                      std::to_string(min_value(rho)) + " <= 0");
  }
  if (relax != 0.0) u += relax * relaxed_velocity(rho, kernel);
  u = dealias(u);
  return make_state(rho, u, kernel, potential);
}

void check_state_invariants(const SimState& state) {
  require_same_grid(state.rho, state.G, "check_state_invariants");
  state.rho.require_finite("state rho");
  state.G.require_finite("state G");
  const double m = mean(state.rho);
  if (std::abs(m - state.rho_bar) > 1e-10 * std::abs(state.rho_bar)) {
    throw MeanViolationError("mass drift: mean rho = " + std::to_string(m) +
                             " vs rho_bar = " + std::to_string(state.rho_bar));
  }
  const Field excess = state.G - lipschitz_convolution(state.kernel, state.rho);
  if (std::abs(mean(excess)) > 1e-10 * std::max(1.0, max_abs(state.G))) {
    throw MeanViolationError("mean(G - psi_L * rho) = " + std::to_string(mean(excess)));
  }
  if (!(min_value(state.rho) > 0.0)) {
    throw VacuumError("min rho = " + std::to_string(min_value(state.rho)));
  }
}

}  // namespace epa
