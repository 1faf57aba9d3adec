#include "distdyn/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "distdyn/error.hpp"
#include "distdyn/parallel.hpp"

namespace distdyn {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1 / sqrt(2 pi)

double gaussian(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

std::vector<double> renormalized(const Grid& grid, std::vector<double> values, std::string_view what) {
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw Error(ErrorCode::InvalidArgument, std::string(what) + " values must be finite and nonnegative");
  const double mass = integrate(grid, values);
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " carries no mass on its grid");
  for (double& v : values) v /= mass;
  return values;
}

void check_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
}

}  // namespace

DensityCurve::DensityCurve(Grid grid, std::vector<double> values) : grid_(std::move(grid)) {
  if (values.size() != grid_.count()) throw Error(ErrorCode::GridMismatch, "density values do not match grid");
  values_ = renormalized(grid_, std::move(values), "density");
}

DensitySurface::DensitySurface(Grid grid_x, Grid grid_y, std::vector<double> values)
    : grid_x_(std::move(grid_x)), grid_y_(std::move(grid_y)), values_(std::move(values)) {
  if (values_.size() != grid_x_.count() * grid_y_.count())
    throw Error(ErrorCode::GridMismatch, "surface values do not match grid pair");
  double mass = 0.0;
  auto wx = grid_x_.weights();
  auto wy = grid_y_.weights();
  for (std::size_t i = 0; i < grid_x_.count(); ++i) {
    double row_mass = 0.0;
    for (std::size_t j = 0; j < grid_y_.count(); ++j) {
      double v = values_[i * grid_y_.count() + j];
      if (!(v >= 0.0) || !std::isfinite(v))
        throw Error(ErrorCode::InvalidArgument, "surface values must be finite and nonnegative");
      row_mass += wy[j] * v;
    }
    mass += wx[i] * row_mass;
  }
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "surface carries no mass on its grid");
  for (double& v : values_) v /= mass;
}

StochasticKernel::StochasticKernel(Grid grid_x, Grid grid_y, std::vector<double> rows, std::vector<bool> supported)
    : grid_x_(std::move(grid_x)),
      grid_y_(std::move(grid_y)),
      rows_(std::move(rows)),
      supported_(std::move(supported)),
      row_weights_(grid_x_.count(), 1.0) {
  const std::size_t nx = grid_x_.count();
  const std::size_t ny = grid_y_.count();
  if (rows_.size() != nx * ny || supported_.size() != nx)
    throw Error(ErrorCode::GridMismatch, "kernel rows do not match grid pair");
  for (std::size_t i = 0; i < nx; ++i) {
    auto row = std::span<double>(rows_).subspan(i * ny, ny);
    for (double v : row)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw Error(ErrorCode::InvalidArgument, "kernel values must be finite and nonnegative");
    const double mass = supported_[i] ? integrate(grid_y_, row) : 0.0;
    if (!(mass > 0.0)) {
      supported_[i] = false;
      std::fill(row.begin(), row.end(), 0.0);
      continue;
    }
    for (double& v : row) v /= mass;
  }
}

StochasticKernel::StochasticKernel(Grid grid_x, Grid grid_y, std::vector<double> rows)
    : StochasticKernel(grid_x, grid_y, std::move(rows), std::vector<bool>(grid_x.count(), true)) {}

StochasticKernel StochasticKernel::with_row_weights(std::vector<double> weights) && {
  if (weights.size() != grid_x_.count()) throw Error(ErrorCode::GridMismatch, "row weights do not match grid");
  row_weights_ = std::move(weights);
  return std::move(*this);
}

std::size_t StochasticKernel::supported_count() const {
  return static_cast<std::size_t>(std::count(supported_.begin(), supported_.end(), true));
}

double quantile(std::span<const double> samples, double p) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "quantile of no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double silverman_bandwidth(std::span<const double> samples, int dimensions) {
  if (dimensions != 1 && dimensions != 2) throw Error(ErrorCode::InvalidArgument, "dimensions must be 1 or 2");
  const std::size_t n = samples.size();
  if (n < 2) throw Error(ErrorCode::InsufficientData, "bandwidth needs at least two samples");
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw Error(ErrorCode::ZeroSpread, "all samples are equal");
  const double iqr = quantile(samples, 0.75) - quantile(samples, 0.25);
  // A zero IQR with positive sd (heavy ties) falls back to the sd alone.
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -1.0 / (4.0 + dimensions));
}

Bandwidths silverman_bandwidths(const TransitionPairs& pairs) {
  return {silverman_bandwidth(pairs.xs(), 2), silverman_bandwidth(pairs.ys(), 2)};
}

std::vector<double> raw_density_1d(std::span<const double> samples, double h, const Grid& grid, unsigned threads) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "density of no samples");
  check_bandwidth(h);
  const double scale = 1.0 / (static_cast<double>(samples.size()) * h);
  std::vector<double> out(grid.count());
  parallel_for(grid.count(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t g = begin; g < end; ++g) {
      // Naive summation in sample order.
      double sum = 0.0;
      for (double x : samples) sum += gaussian((grid[g] - x) / h);
      out[g] = sum * scale;
    }
  });
  return out;
}

std::vector<double> raw_density_2d(const TransitionPairs& pairs, Bandwidths bw, const Grid& grid_x, const Grid& grid_y,
                                   unsigned threads) {
  const std::size_t n = pairs.size();
  if (n == 0) throw Error(ErrorCode::EmptySamples, "density of no pairs");
  check_bandwidth(bw.x);
  check_bandwidth(bw.y);
  const std::size_t nx = grid_x.count();
  const std::size_t ny = grid_y.count();

  // kx[a * n + i] = K((gx_a - x_i) / h_x), ky[i * ny + b] = K((gy_b - y_i) / h_y).
  std::vector<double> kx(nx * n);
  std::vector<double> ky(n * ny);
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t i = 0; i < n; ++i) kx[a * n + i] = gaussian((grid_x[a] - pairs.pairs[i].x) / bw.x);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t b = 0; b < ny; ++b) ky[i * ny + b] = gaussian((grid_y[b] - pairs.pairs[i].y) / bw.y);

  const double scale = 1.0 / (static_cast<double>(n) * bw.x * bw.y);
  std::vector<double> out(nx * ny, 0.0);
  parallel_for(nx, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      double* row = out.data() + a * ny;
      for (std::size_t i = 0; i < n; ++i) {
        const double wx = kx[a * n + i];
        if (wx == 0.0) continue;  // adding +0 would not change the sum
        const double* kyi = ky.data() + i * ny;
        for (std::size_t b = 0; b < ny; ++b) row[b] += wx * kyi[b];
      }
      for (std::size_t b = 0; b < ny; ++b) row[b] *= scale;
    }
  });
  return out;
}

DensityCurve density_1d(std::span<const double> samples, double h, const Grid& grid, unsigned threads) {
  return DensityCurve(grid, raw_density_1d(samples, h, grid, threads));
}

DensitySurface density_2d(const TransitionPairs& pairs, Bandwidths bandwidths, const Grid& grid_x, const Grid& grid_y,
                          unsigned threads) {
  return DensitySurface(grid_x, grid_y, raw_density_2d(pairs, bandwidths, grid_x, grid_y, threads));
}

StochasticKernel conditional_density(const DensitySurface& joint, const DensityCurve& marginal, double floor) {
  if (!(joint.grid_x() == marginal.grid()))
    throw Error(ErrorCode::GridMismatch, "marginal grid differs from the joint's x grid");
  if (!(floor >= 0.0)) throw Error(ErrorCode::InvalidArgument, "density floor must be nonnegative");
  const std::size_t nx = joint.grid_x().count();
  const std::size_t ny = joint.grid_y().count();
  auto m = marginal.values();
  const double peak = *std::max_element(m.begin(), m.end());
  const double cutoff = floor * peak;
  std::vector<double> rows(nx * ny, 0.0);
  std::vector<bool> supported(nx, false);
  std::vector<double> weights(nx, 0.0);
  for (std::size_t i = 0; i < nx; ++i) {
    weights[i] = m[i] / peak;
    if (!(m[i] >= cutoff) || !(m[i] > 0.0)) continue;
    supported[i] = true;
    for (std::size_t j = 0; j < ny; ++j) rows[i * ny + j] = joint(i, j) / m[i];
  }
  return StochasticKernel(joint.grid_x(), joint.grid_y(), std::move(rows), std::move(supported))
      .with_row_weights(std::move(weights));
}

Grid default_grid(double max_value, std::size_t count, double upper_factor) {
  if (!(max_value > 0.0) || !(upper_factor > 0.0))
    throw Error(ErrorCode::DegenerateGrid, "grid upper bound must be positive");
  return Grid::uniform(0.0, upper_factor * max_value, count);
}

KernelEstimate estimate_kernel(const TransitionPairs& pairs, const Grid& grid, std::optional<Bandwidths> override_bw,
                               double floor, unsigned threads) {
  if (pairs.size() < 2) throw Error(ErrorCode::InsufficientData, "kernel estimation needs at least two pairs");
  Bandwidths bw = override_bw ? *override_bw : silverman_bandwidths(pairs);
  auto joint = density_2d(pairs, bw, grid, grid, threads);
  auto marginal = density_1d(pairs.xs(), bw.x, grid, threads);
  auto kernel = conditional_density(joint, marginal, floor);
  return {bw, std::move(joint), std::move(marginal), std::move(kernel)};
}

}  // namespace distdyn
