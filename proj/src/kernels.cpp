#include "epa/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>

#include "epa/error.hpp"
#include "epa/spectral.hpp"

namespace epa {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// B_{2j} / (2j)! for j = 1..8.
constexpr std::array<double, 8> kBernoulliRatio = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
};

// Euler-Maclaurin tail of sum_{m >= 0} (a + m)^{-s}: the integral, the
// half endpoint term and seven Bernoulli corrections. Returns the
// first omitted correction as an error estimate.
double euler_maclaurin_tail(double s, double a, double& error_estimate) {
  double tail = std::pow(a, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(a, -s);
  // rising = s (s+1) ... (s+2j-2), power = a^{-s-2j+1}
  double rising = s;
  double power = std::pow(a, -s - 1.0);
  const double inv_a2 = 1.0 / (a * a);
  for (std::size_t j = 0; j < 7; ++j) {
    tail += kBernoulliRatio[j] * rising * power;
    rising *= (s + 2.0 * j + 1.0) * (s + 2.0 * j + 2.0);
    power *= inv_a2;
  }
  error_estimate = std::abs(kBernoulliRatio[7] * rising * power);
  return tail;
}

// sum_{m >= 0} (q + m)^{-s}, s > 1, q > 0.
double hurwitz_zeta(double s, double q, double tol) {
  std::size_t terms = 8;
  for (;;) {
    double head = 0.0;
    for (std::size_t m = terms; m-- > 0;) {
      head += std::pow(q + static_cast<double>(m), -s);
    }
    double err = 0.0;
    const double tail =
        euler_maclaurin_tail(s, q + static_cast<double>(terms), err);
    if (err <= tol || terms >= (std::size_t{1} << 20)) return head + tail;
    terms *= 2;
  }
}

void require_open_alpha(double alpha, const char* what) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw DomainError(std::string(what) + ": alpha must lie in (0, 2), got " +
                      std::to_string(alpha));
  }
}

double reduce_to_torus(double x) { return x - std::round(x); }

}  // namespace

double c_alpha(double alpha) {
  require_open_alpha(alpha, "c_alpha");
  return std::pow(2.0, alpha) * std::tgamma(0.5 * (1.0 + alpha)) /
         (std::sqrt(std::numbers::pi) * std::abs(std::tgamma(-0.5 * alpha)));
}

double psi_alpha_eval(double x, double alpha, double tol) {
  require_open_alpha(alpha, "psi_alpha_eval");
  if (!(tol > 0.0)) throw DomainError("psi_alpha_eval: tol must be positive");
  const double r = std::abs(reduce_to_torus(x));
  if (r == 0.0) {
    throw SingularityError("psi_alpha is singular at x = 0 (mod 1)");
  }
  const double c = c_alpha(alpha);
  const double s = 1.0 + alpha;
  const double per_sum_tol = 0.5 * tol / c;
  return c * (hurwitz_zeta(s, r, per_sum_tol) +
              hurwitz_zeta(s, 1.0 - r, per_sum_tol));
}

double psi_m(double alpha) { return psi_alpha_eval(0.5, alpha); }

std::shared_ptr<const std::vector<double>> offset_kernel_table(
    double alpha, std::size_t refinement) {
  if (refinement < 2 || refinement % 2 != 0) {
    throw DomainError("kernel table refinement must be even");
  }
  static std::mutex mutex;
  static std::map<std::pair<double, std::size_t>,
                  std::shared_ptr<const std::vector<double>>>
      cache;
  const auto key = std::make_pair(alpha, refinement);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto table = std::make_shared<std::vector<double>>(refinement);
  const double h = 1.0 / static_cast<double>(refinement);
  // Nodes are symmetric about y = 0: y_{R-1-j} = -y_j.
  for (std::size_t j = 0; j < refinement / 2; ++j) {
    const double y = -0.5 + (static_cast<double>(j) + 0.5) * h;
    const double v = psi_alpha_eval(y, alpha);
    (*table)[j] = v;
    (*table)[refinement - 1 - j] = v;
  }
  std::lock_guard lock(mutex);
  auto [it, inserted] = cache.emplace(key, std::move(table));
  return it->second;
}

// ---------------------------------------------------------------------------

SampledTable::SampledTable(std::vector<double> x, std::vector<double> values)
    : x_(std::move(x)), values_(std::move(values)) {
  if (x_.size() != values_.size() || x_.size() < 3) {
    throw ConfigError("sampled table needs at least 3 (x, value) rows");
  }
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (!std::isfinite(x_[i]) || !std::isfinite(values_[i])) {
      throw ConfigError("sampled table has non-finite entries");
    }
    if (x_[i] < -0.5 || x_[i] >= 0.5) {
      throw ConfigError("sampled table x must lie in [-1/2, 1/2)");
    }
    if (i > 0 && !(x_[i] > x_[i - 1])) {
      throw ConfigError("sampled table x must be strictly increasing");
    }
  }
  const std::size_t m = x_.size();
  auto gap = [&](std::size_t i) {  // spacing from node i to node i+1 (periodic)
    return i + 1 < m ? x_[i + 1] - x_[i] : x_[0] + 1.0 - x_[m - 1];
  };
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t next = (i + 1) % m;
    const std::size_t prev = (i + m - 1) % m;
    sup_ = std::max(sup_, std::abs(values_[i]));
    lipschitz_ = std::max(lipschitz_, std::abs(values_[next] - values_[i]) / gap(i));
    const double hl = gap(prev);
    const double hr = gap(i);
    const double second = 2.0 *
                          (hl * values_[next] - (hl + hr) * values_[i] +
                           hr * values_[prev]) /
                          (hl * hr * (hl + hr));
    second_ = std::max(second_, std::abs(second));
  }
}

SampledTable SampledTable::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open table " + path.string());
  std::vector<double> xs;
  std::vector<double> vs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x = 0.0;
    double v = 0.0;
    if (!(row >> x >> v)) {
      // A non-numeric first row is a header.
      if (xs.empty() && lineno == 1) continue;
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected two numeric columns");
    }
    xs.push_back(x);
    vs.push_back(v);
  }
  return SampledTable(std::move(xs), std::move(vs));
}

double SampledTable::operator()(double x) const {
  const double r = reduce_to_torus(x);
  const double t = r >= 0.5 ? r - 1.0 : r;  // into [-1/2, 1/2)
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  std::size_t right = static_cast<std::size_t>(it - x_.begin());
  double xl = 0.0;
  double xr = 0.0;
  double vl = 0.0;
  double vr = 0.0;
  if (right == 0 || right == x_.size()) {
    // Wrap segment between the last node and the first node + 1.
    xl = x_.back();
    xr = x_.front() + 1.0;
    vl = values_.back();
    vr = values_.front();
    const double tt = t < xl ? t + 1.0 : t;
    return vl + (vr - vl) * (tt - xl) / (xr - xl);
  }
  xl = x_[right - 1];
  xr = x_[right];
  vl = values_[right - 1];
  vr = values_[right];
  return vl + (vr - vl) * (t - xl) / (xr - xl);
}

// ---------------------------------------------------------------------------

bool KernelSpec::has_lipschitz_part() const noexcept {
  return std::visit(
      [](const auto& p) -> bool {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LipschitzZero>) {
          return false;
        } else if constexpr (std::is_same_v<T, LipschitzConstant>) {
          return p.a != 0.0;
        } else if constexpr (std::is_same_v<T, LipschitzCosine>) {
          return p.a != 0.0 || p.b != 0.0;
        } else {
          return p.table != nullptr;
        }
      },
      psi_L);
}

double KernelSpec::lipschitz_value(double x) const {
  return std::visit(
      [x](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LipschitzZero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, LipschitzConstant>) {
          return p.a;
        } else if constexpr (std::is_same_v<T, LipschitzCosine>) {
          return p.a + p.b * std::cos(kTwoPi * x);
        } else {
          return (*p.table)(x);
        }
      },
      psi_L);
}

double KernelSpec::lipschitz_sup() const {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LipschitzZero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, LipschitzConstant>) {
          return std::abs(p.a);
        } else if constexpr (std::is_same_v<T, LipschitzCosine>) {
          return std::abs(p.a) + std::abs(p.b);
        } else {
          return p.table->sup_norm();
        }
      },
      psi_L);
}

double KernelSpec::lipschitz_slope() const {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LipschitzCosine>) {
          return kTwoPi * std::abs(p.b);
        } else if constexpr (std::is_same_v<T, LipschitzTable>) {
          return p.table->lipschitz();
        } else {
          return 0.0;
        }
      },
      psi_L);
}

Field KernelSpec::lipschitz_field(const Grid& grid) const {
  return Field::from_function(grid, [this](double x) { return lipschitz_value(x); });
}

double KernelSpec::eval(double x) const {
  double v = lipschitz_value(x);
  if (has_singular_part()) v += c * psi_alpha_eval(x, alpha);
  return v;
}

double KernelSpec::min_on_grid(const Grid& grid) const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid.x(j);
    if (x == 0.0) continue;
    m = std::min(m, eval(x));
  }
  return m;
}

void KernelSpec::require_positive(const Grid& grid) const {
  const double m = min_on_grid(grid);
  if (!(m > 0.0)) {
    throw ConfigError("kernel positivity gate failed: min psi on grid = " +
                      std::to_string(m));
  }
}

Field lipschitz_convolution(const KernelSpec& kernel, const Field& rho) {
  if (!kernel.has_lipschitz_part()) return Field(rho.grid());
  if (const auto* constant = std::get_if<LipschitzConstant>(&kernel.psi_L)) {
    return Field(rho.grid(), constant->a * mean(rho));
  }
  return convolve(kernel.lipschitz_field(rho.grid()), rho);
}

// ---------------------------------------------------------------------------

namespace {

struct GaussianSum {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

GaussianSum periodized_gaussian(double x, double a, double sigma) {
  const int images = static_cast<int>(std::ceil(10.0 * sigma)) + 1;
  const double inv_s2 = 1.0 / (sigma * sigma);
  GaussianSum out;
  for (int m = -images; m <= images; ++m) {
    const double z = x + m;
    const double g = a * std::exp(-0.5 * z * z * inv_s2);
    out.value += g;
    out.first += -z * inv_s2 * g;
    out.second += (z * z * inv_s2 - 1.0) * inv_s2 * g;
  }
  return out;
}

template <class F>
double dense_sup(F&& f) {
  constexpr std::size_t kSamples = 8192;
  double m = 0.0;
  for (std::size_t j = 0; j < kSamples; ++j) {
    const double x = -0.5 + static_cast<double>(j) / kSamples;
    m = std::max(m, std::abs(f(x)));
  }
  return m;
}

}  // namespace

bool PotentialSpec::has_regular_part() const noexcept {
  return std::visit(
      [](const auto& p) -> bool {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RegularZero>) {
          return false;
        } else if constexpr (std::is_same_v<T, RegularTable>) {
          return p.table != nullptr;
        } else {
          return p.a != 0.0;
        }
      },
      regular);
}

double PotentialSpec::regular_value(double x) const {
  return std::visit(
      [x](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RegularZero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, RegularCosine>) {
          return p.a * std::cos(kTwoPi * x);
        } else if constexpr (std::is_same_v<T, RegularGaussian>) {
          return periodized_gaussian(x, p.a, p.sigma).value;
        } else {
          return (*p.table)(x);
        }
      },
      regular);
}

Field PotentialSpec::regular_field(const Grid& grid) const {
  return Field::from_function(grid, [this](double x) { return regular_value(x); });
}

double PotentialSpec::regular_sup() const {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RegularZero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, RegularCosine>) {
          return std::abs(p.a);
        } else if constexpr (std::is_same_v<T, RegularGaussian>) {
          return dense_sup([&](double x) {
            return periodized_gaussian(x, p.a, p.sigma).value;
          });
        } else {
          return p.table->sup_norm();
        }
      },
      regular);
}

double PotentialSpec::regular_slope_sup() const {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RegularZero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, RegularCosine>) {
          return kTwoPi * std::abs(p.a);
        } else if constexpr (std::is_same_v<T, RegularGaussian>) {
          return dense_sup([&](double x) {
            return periodized_gaussian(x, p.a, p.sigma).first;
          });
        } else {
          return p.table->lipschitz();
        }
      },
      regular);
}

double PotentialSpec::regular_second_derivative_sup() const {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RegularZero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, RegularCosine>) {
          return kTwoPi * kTwoPi * std::abs(p.a);
        } else if constexpr (std::is_same_v<T, RegularGaussian>) {
          return dense_sup([&](double x) {
            return periodized_gaussian(x, p.a, p.sigma).second;
          });
        } else {
          return p.table->second_derivative_sup();
        }
      },
      regular);
}

Field newtonian_force(const Field& rho, double k) {
  rho.require_finite("newtonian_force");
  if (k == 0.0) return Field(rho.grid());
  return apply_multiplier(
      rho, [k](double m) -> Complex {
        return m == 0.0 ? 0.0 : -k / Complex(0.0, kTwoPi * m);
      },
      Parity::odd);
}

Field regular_force(const Field& rho, const PotentialSpec& spec) {
  rho.require_finite("regular_force");
  if (!spec.has_regular_part()) return Field(rho.grid());
  Field f = derivative(convolve(spec.regular_field(rho.grid()), rho));
  f *= -1.0;
  return f;
}

Field total_force(const Field& rho, const PotentialSpec& spec) {
  return newtonian_force(rho, spec.k) + regular_force(rho, spec);
}

Field potential_forcing(const Field& rho, const PotentialSpec& spec) {
  Field out(rho.grid());
  if (spec.k != 0.0) {
    const double m = mean(rho);
    for (std::size_t j = 0; j < rho.size(); ++j) out[j] = -spec.k * (rho[j] - m);
  }
  if (spec.has_regular_part()) out += derivative(regular_force(rho, spec));
  return out;
}

Field lambda_alpha_quadrature(const Field& f, double alpha,
                              std::size_t refinement) {
  const std::size_t n = f.size();
  if (refinement % n != 0) {
    throw DomainError("quadrature refinement must be a multiple of n");
  }
  f.require_finite("lambda_alpha_quadrature");
  const auto table = offset_kernel_table(alpha, refinement);
  const std::vector<double> fz = trig_interpolate(f, refinement, 0.5);
  const std::size_t ratio = refinement / n;
  const double w = 1.0 / static_cast<double>(refinement);
  Field out(f.grid());
  for (std::size_t i = 0; i < n; ++i) {
    // Node x_i + y_j sits at fine index i*ratio + j - R/2 (mod R).
    const std::size_t base = (i * ratio + refinement / 2) % refinement;
    // Pair y_j with -y_j = y_{R-1-j}; the odd part cancels inside each pair.
    double sum = 0.0;
    for (std::size_t j = 0; j < refinement / 2; ++j) {
      const std::size_t lp = (base + j) % refinement;
      const std::size_t lm = (base + refinement - 1 - j) % refinement;
      sum += (*table)[j] * (2.0 * f[i] - fz[lp] - fz[lm]);
    }
    out[i] = w * sum;
  }
  return out;
}

}  // namespace epa
