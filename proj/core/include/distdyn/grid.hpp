#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace distdyn {

/// Uniformly spaced evaluation points on [lower, upper]. Every density in the
/// library lives on one of these, and all quadrature is the trapezoid rule
/// over it.
class Grid {
 public:
  static constexpr std::size_t kMinCount = 16;

  /// Throws DegenerateGrid when count < kMinCount or the interval is empty.
  static Grid uniform(double lower, double upper, std::size_t count);

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  std::size_t count() const noexcept { return points_.size(); }
  double spacing() const noexcept { return spacing_; }
  std::span<const double> points() const noexcept { return points_; }
  double operator[](std::size_t i) const { return points_[i]; }

  /// Trapezoid weights: spacing/2 at the ends, spacing elsewhere.
  std::span<const double> weights() const noexcept { return weights_; }

  bool operator==(const Grid& other) const noexcept {
    return lower_ == other.lower_ && upper_ == other.upper_ && points_.size() == other.points_.size();
  }

 private:
  Grid(double lower, double upper, std::size_t count);

  double lower_;
  double upper_;
  double spacing_;
  std::vector<double> points_;
  std::vector<double> weights_;
};

double integrate(const Grid& grid, std::span<const double> values);

/// Trapezoid integral of |a - b|.
double l1_distance(const Grid& grid, std::span<const double> a, std::span<const double> b);

}  // namespace distdyn
