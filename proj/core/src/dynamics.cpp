#include "distdyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "distdyn/parallel.hpp"

namespace distdyn {

namespace {

struct CellSplit {
  double below;  // mass from grid lower bound up to x
  double above;  // mass from x to the grid upper bound
};

// Locates x among the y grid cells: returns k with y_k <= x < y_{k+1} and the
// fraction of that cell lying below x.
std::pair<std::size_t, double> locate(const Grid& grid, double x) {
  const double pos = (x - grid.lower()) / grid.spacing();
  auto k = static_cast<std::size_t>(std::floor(pos));
  k = std::min(k, grid.count() - 2);
  double frac = std::clamp(pos - static_cast<double>(k), 0.0, 1.0);
  return {k, frac};
}

double cell_area(std::span<const double> row, double spacing, std::size_t k) {
  return 0.5 * spacing * (row[k] + row[k + 1]);
}

double mass_below(std::span<const double> row, const Grid& grid, double x) {
  if (x <= grid.lower()) return 0.0;
  if (x >= grid.upper()) return integrate(grid, row);
  auto [k, frac] = locate(grid, x);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) sum += cell_area(row, grid.spacing(), j);
  return sum + frac * cell_area(row, grid.spacing(), k);
}

double mass_above(std::span<const double> row, const Grid& grid, double x) {
  if (x >= grid.upper()) return 0.0;
  if (x <= grid.lower()) return integrate(grid, row);
  auto [k, frac] = locate(grid, x);
  double sum = (1.0 - frac) * cell_area(row, grid.spacing(), k);
  for (std::size_t j = k + 1; j + 1 < grid.count(); ++j) sum += cell_area(row, grid.spacing(), j);
  return sum;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

NotConvergedError::NotConvergedError(DensityCurve last, double previous_delta, double last_delta, int iterations)
    : Error(ErrorCode::NotConverged,
            fmt::format("no fixed point after {} iterations; last two L1 changes {:.3e}, {:.3e}", iterations,
                        previous_delta, last_delta)),
      last_(std::move(last)),
      previous_delta_(previous_delta),
      last_delta_(last_delta),
      iterations_(iterations) {}

DensityCurve evolve(const StochasticKernel& kernel, const DensityCurve& f, unsigned threads) {
  if (!(f.grid() == kernel.grid_x())) throw Error(ErrorCode::GridMismatch, "density grid differs from kernel x grid");
  const std::size_t nx = kernel.grid_x().count();
  const std::size_t ny = kernel.grid_y().count();
  auto wx = kernel.grid_x().weights();

  std::vector<double> coeff(nx, 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    if (!kernel.supported(i)) continue;
    coeff[i] = wx[i] * f[i];
    mass += coeff[i];
  }
  if (!(mass > 0.0)) throw Error(ErrorCode::NoSupportedRows, "input density has no mass on supported rows");
  for (double& c : coeff) c /= mass;

  std::vector<double> out(ny, 0.0);
  parallel_for(ny, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double c = coeff[i];
      if (c == 0.0) continue;
      auto row = kernel.row(i);
      for (std::size_t j = begin; j < end; ++j) out[j] += c * row[j];
    }
  });
  return DensityCurve(kernel.grid_y(), std::move(out));
}

ErgodicSolution ergodic_distribution(const StochasticKernel& kernel, const DensityCurve& init,
                                     const ErgodicOptions& options) {
  if (!(kernel.grid_x() == kernel.grid_y()))
    throw Error(ErrorCode::GridMismatch, "ergodic distribution needs a square kernel");
  if (!(init.grid() == kernel.grid_x())) throw Error(ErrorCode::GridMismatch, "initial density grid differs");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (options.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be at least 1");

  const Grid& grid = kernel.grid_x();
  DensityCurve current = init;
  double previous_delta = std::numeric_limits<double>::infinity();
  double delta = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iter; ++it) {
    DensityCurve next = evolve(kernel, current, options.threads);
    previous_delta = delta;
    delta = l1_distance(grid, next.values(), current.values());
    current = std::move(next);
    if (delta <= options.tol) {
      DensityCurve again = evolve(kernel, current, options.threads);
      const double residual = l1_distance(grid, current.values(), again.values());
      return {std::move(current), residual, it, support_components(kernel)};
    }
  }
  throw NotConvergedError(std::move(current), previous_delta, delta, options.max_iter);
}

std::size_t support_components(const StochasticKernel& kernel) {
  if (!(kernel.grid_x() == kernel.grid_y())) return 0;
  const std::size_t n = kernel.grid_x().count();
  DisjointSets sets(n);
  double peak = 0.0;
  for (double v : kernel.values()) peak = std::max(peak, v);
  const double threshold = 1e-12 * peak;
  for (std::size_t i = 0; i < n; ++i) {
    if (!kernel.supported(i)) continue;
    auto row = kernel.row(i);
    for (std::size_t j = 0; j < n; ++j)
      if (row[j] > threshold && kernel.supported(j)) sets.unite(i, j);
  }
  std::vector<bool> root(n, false);
  std::size_t components = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!kernel.supported(i)) continue;
    auto r = sets.find(i);
    if (!root[r]) {
      root[r] = true;
      ++components;
    }
  }
  return components;
}

NTPCurve net_transition_probability(const StochasticKernel& kernel, double min_row_weight) {
  const Grid& gx = kernel.grid_x();
  NTPCurve ntp{gx, std::vector<double>(gx.count(), 0.0), std::vector<bool>(gx.count(), false)};
  for (std::size_t i = 0; i < gx.count(); ++i) {
    if (!kernel.supported(i) || kernel.row_weight(i) < min_row_weight) continue;
    ntp.supported[i] = true;
    ntp.values[i] = std::clamp(1.0 - 2.0 * mass_below(kernel.row(i), kernel.grid_y(), gx[i]), -1.0, 1.0);
  }
  return ntp;
}

NTPCurve net_transition_probability_two_sided(const StochasticKernel& kernel, double min_row_weight) {
  const Grid& gx = kernel.grid_x();
  NTPCurve ntp{gx, std::vector<double>(gx.count(), 0.0), std::vector<bool>(gx.count(), false)};
  for (std::size_t i = 0; i < gx.count(); ++i) {
    if (!kernel.supported(i) || kernel.row_weight(i) < min_row_weight) continue;
    auto row = kernel.row(i);
    ntp.supported[i] = true;
    ntp.values[i] = mass_above(row, kernel.grid_y(), gx[i]) - mass_below(row, kernel.grid_y(), gx[i]);
  }
  return ntp;
}

std::vector<double> ntp_crossings(const NTPCurve& ntp) {
  std::vector<double> out;
  bool have_prev = false;
  double prev_x = 0.0;
  double prev_v = 0.0;
  for (std::size_t i = 0; i < ntp.values.size(); ++i) {
    if (!ntp.supported[i]) continue;
    const double x = ntp.grid[i];
    const double v = ntp.values[i];
    if (v == 0.0) {
      out.push_back(x);
    } else if (have_prev && prev_v != 0.0 && (v < 0.0) != (prev_v < 0.0)) {
      out.push_back(prev_x + (0.0 - prev_v) * (x - prev_x) / (v - prev_v));
    }
    have_prev = true;
    prev_x = x;
    prev_v = v;
  }
  return out;
}

}  // namespace distdyn
