#include "distdyn/grid.hpp"

#include <cmath>
#include <string>

#include "distdyn/error.hpp"

namespace distdyn {

Grid::Grid(double lower, double upper, std::size_t count)
    : lower_(lower), upper_(upper), spacing_((upper - lower) / static_cast<double>(count - 1)) {
  points_.resize(count);
  weights_.assign(count, spacing_);
  for (std::size_t i = 0; i < count; ++i) points_[i] = lower_ + static_cast<double>(i) * spacing_;
  points_.back() = upper_;
  weights_.front() = weights_.back() = spacing_ / 2.0;
}

Grid Grid::uniform(double lower, double upper, std::size_t count) {
  if (count < kMinCount)
    throw Error(ErrorCode::DegenerateGrid, "grid needs at least " + std::to_string(kMinCount) + " points");
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(upper > lower))
    throw Error(ErrorCode::DegenerateGrid, "grid bounds must be finite with upper > lower");
  return Grid(lower, upper, count);
}

double integrate(const Grid& grid, std::span<const double> values) {
  if (values.size() != grid.count()) throw Error(ErrorCode::GridMismatch, "value count differs from grid size");
  auto w = grid.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += w[i] * values[i];
  return sum;
}

double l1_distance(const Grid& grid, std::span<const double> a, std::span<const double> b) {
  if (a.size() != grid.count() || b.size() != grid.count())
    throw Error(ErrorCode::GridMismatch, "value count differs from grid size");
  auto w = grid.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += w[i] * std::abs(a[i] - b[i]);
  return sum;
}

}  // namespace distdyn
