#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace epa {

/// Uniform discretization of the unit torus [-1/2, 1/2): x_j = -1/2 + j/n.
class Grid {
 public:
  /// Throws DomainError unless n >= 8 and n is even.
  explicit Grid(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double dx() const noexcept { return 1.0 / static_cast<double>(n_); }
  double x(std::size_t j) const noexcept {
    return -0.5 + static_cast<double>(j) / static_cast<double>(n_);
  }

  /// Periodic distance between grid points i and j, in [0, 1/2].
  double distance(std::size_t i, std::size_t j) const noexcept;

  /// Highest mode kept by the 2/3 dealiasing rule.
  std::size_t dealias_cutoff() const noexcept { return n_ / 3; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t n_;
};

/// Real samples of a periodic function on a Grid.
class Field {
 public:
  explicit Field(Grid grid, double value = 0.0);
  Field(Grid grid, std::vector<double> values);

  static Field from_function(const Grid& grid,
                             const std::function<double(double)>& f);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator[](std::size_t j) noexcept { return values_[j]; }
  double operator[](std::size_t j) const noexcept { return values_[j]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  bool is_finite() const noexcept;

  /// Throws InvalidFieldError naming `what` if any sample is NaN/inf.
  void require_finite(const char* what) const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(const Field& other);
  Field& operator*=(double s) noexcept;
  Field& operator+=(double s) noexcept;

 private:
  Grid grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(Field a, const Field& b);
Field operator*(double s, Field a);
Field operator*(Field a, double s);
Field operator/(const Field& a, const Field& b);

/// Throws GridMismatchError if the two fields are on different grids.
void require_same_grid(const Field& a, const Field& b, const char* what);

/// Average over the torus; equals the integral since |T| = 1.
double mean(const Field& f);
double max_abs(const Field& f);
double min_value(const Field& f);
double max_value(const Field& f);
/// Integral of the pointwise product (trapezoid = spectrally exact rule).
double inner(const Field& a, const Field& b);
/// Physical-space L2 norm over the torus.
double l2_norm(const Field& f);

}  // namespace epa
