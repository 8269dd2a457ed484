#include "epa/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epa/error.hpp"

namespace epa {

Grid::Grid(std::size_t n) : n_(n) {
  if (n < 8 || n % 2 != 0) {
    throw DomainError("grid size must be even and at least 8, got " +
                      std::to_string(n));
  }
}

double Grid::distance(std::size_t i, std::size_t j) const noexcept {
  const std::size_t d = i > j ? i - j : j - i;
  const std::size_t wrapped = std::min(d, n_ - d);
  return static_cast<double>(wrapped) / static_cast<double>(n_);
}

Field::Field(Grid grid, double value)
    : grid_(grid), values_(grid.size(), value) {}

Field::Field(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw GridMismatchError("field has " + std::to_string(values_.size()) +
                            " samples for a grid of " +
                            std::to_string(grid_.size()));
  }
}

Field Field::from_function(const Grid& grid,
                           const std::function<double(double)>& f) {
  Field out(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) out[j] = f(grid.x(j));
  return out;
}

bool Field::is_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

void Field::require_finite(const char* what) const {
  if (!is_finite()) {
    throw InvalidFieldError(std::string(what) + ": field has non-finite samples");
  }
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other, "operator+=");
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other[j];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other, "operator-=");
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= other[j];
  return *this;
}

Field& Field::operator*=(const Field& other) {
  require_same_grid(*this, other, "operator*=");
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] *= other[j];
  return *this;
}

Field& Field::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

Field& Field::operator+=(double s) noexcept {
  for (double& v : values_) v += s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(Field a, const Field& b) { return a *= b; }
Field operator*(double s, Field a) { return a *= s; }
Field operator*(Field a, double s) { return a *= s; }

Field operator/(const Field& a, const Field& b) {
  require_same_grid(a, b, "operator/");
  Field out(a.grid());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] / b[j];
  return out;
}

void require_same_grid(const Field& a, const Field& b, const char* what) {
  if (!(a.grid() == b.grid())) {
    throw GridMismatchError(std::string(what) + ": grid mismatch (" +
                            std::to_string(a.grid().size()) + " vs " +
                            std::to_string(b.grid().size()) + ")");
  }
}

double mean(const Field& f) {
  // Kahan summation.
  double sum = 0.0;
  double comp = 0.0;
  for (double v : f.values()) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(f.size());
}

double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double min_value(const Field& f) {
  return *std::min_element(f.values().begin(), f.values().end());
}

double max_value(const Field& f) {
  return *std::max_element(f.values().begin(), f.values().end());
}

double inner(const Field& a, const Field& b) { return mean(a * b); }

double l2_norm(const Field& f) { return std::sqrt(inner(f, f)); }

}  // namespace epa
