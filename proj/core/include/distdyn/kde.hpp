#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "distdyn/grid.hpp"
#include "distdyn/panel.hpp"

namespace distdyn {

struct Bandwidths {
  double x = 0.0;
  double y = 0.0;
};

/// A probability density sampled on a grid, renormalized on construction so
/// its trapezoid integral is 1.
class DensityCurve {
 public:
  /// Throws InvalidArgument on negative values or zero total mass.
  DensityCurve(Grid grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Joint density on grid_x x grid_y, stored x-major: value(i, j) = values[i * ny + j].
class DensitySurface {
 public:
  DensitySurface(Grid grid_x, Grid grid_y, std::vector<double> values);

  const Grid& grid_x() const noexcept { return grid_x_; }
  const Grid& grid_y() const noexcept { return grid_y_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * grid_y_.count() + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * grid_y_.count(), grid_y_.count());
  }

 private:
  Grid grid_x_;
  Grid grid_y_;
  std::vector<double> values_;
};

/// Discretized conditional density g(y | x). Supported rows integrate to 1
/// over grid_y; unsupported rows are all zero and skipped by the dynamics.
class StochasticKernel {
 public:
  /// Rows listed x-major. Rows flagged unsupported, or carrying no mass, are
  /// zeroed; the rest are renormalized.
  StochasticKernel(Grid grid_x, Grid grid_y, std::vector<double> rows, std::vector<bool> supported);
  StochasticKernel(Grid grid_x, Grid grid_y, std::vector<double> rows);

  /// Marginal density at each x relative to its peak, as seen by
  /// conditional_density; 1 for kernels built from explicit rows.
  StochasticKernel with_row_weights(std::vector<double> weights) &&;
  double row_weight(std::size_t i) const { return row_weights_[i]; }

  const Grid& grid_x() const noexcept { return grid_x_; }
  const Grid& grid_y() const noexcept { return grid_y_; }
  std::span<const double> values() const noexcept { return rows_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(rows_).subspan(i * grid_y_.count(), grid_y_.count());
  }
  double operator()(std::size_t i, std::size_t j) const { return rows_[i * grid_y_.count() + j]; }
  bool supported(std::size_t i) const { return supported_[i]; }
  std::size_t supported_count() const;

 private:
  Grid grid_x_;
  Grid grid_y_;
  std::vector<double> rows_;
  std::vector<bool> supported_;
  std::vector<double> row_weights_;
};

/// Type-7 sample quantile (linear interpolation between order statistics).
double quantile(std::span<const double> samples, double p);

/// 0.9 * min(sd, IQR / 1.34) * n^(-1 / (4 + dimensions)).
double silverman_bandwidth(std::span<const double> samples, int dimensions = 1);

/// Per-axis rule for the two-dimensional product kernel.
Bandwidths silverman_bandwidths(const TransitionPairs& pairs);

/// Unnormalized Gaussian estimate (1 / (n h)) sum K((g - x_i) / h) at every grid point.
std::vector<double> raw_density_1d(std::span<const double> samples, double h, const Grid& grid, unsigned threads = 1);

/// Gaussian-product estimate on grid_x x grid_y, before renormalization.
std::vector<double> raw_density_2d(const TransitionPairs& pairs, Bandwidths bandwidths, const Grid& grid_x,
                                   const Grid& grid_y, unsigned threads = 1);

DensityCurve density_1d(std::span<const double> samples, double h, const Grid& grid, unsigned threads = 1);

DensitySurface density_2d(const TransitionPairs& pairs, Bandwidths bandwidths, const Grid& grid_x,
                          const Grid& grid_y, unsigned threads = 1);

/// Rows whose marginal value falls below floor * peak(marginal) are unsupported.
inline constexpr double kDefaultDensityFloor = 1e-4;

StochasticKernel conditional_density(const DensitySurface& joint, const DensityCurve& marginal,
                                     double floor = kDefaultDensityFloor);

/// [0, upper_factor * max_value] with `count` points.
Grid default_grid(double max_value, std::size_t count = 256, double upper_factor = 1.1);

struct KernelEstimate {
  Bandwidths bandwidths;
  DensitySurface joint;
  DensityCurve marginal;
  StochasticKernel kernel;
};

/// Joint KDE, x-marginal with the same h_x, and their ratio, all on one square grid.
KernelEstimate estimate_kernel(const TransitionPairs& pairs, const Grid& grid, std::optional<Bandwidths> override_bw = std::nullopt,
                               double floor = kDefaultDensityFloor, unsigned threads = 1);

}  // namespace distdyn
