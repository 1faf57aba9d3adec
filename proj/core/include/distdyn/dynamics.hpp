#pragma once

#include <cstddef>
#include <vector>

#include "distdyn/error.hpp"
#include "distdyn/kde.hpp"

namespace distdyn {

/// Net transition probability per x grid point. Points whose kernel row is
/// unsupported carry no value.
struct NTPCurve {
  Grid grid;
  std::vector<double> values;
  std::vector<bool> supported;
};

struct ErgodicOptions {
  double tol = 1e-10;
  int max_iter = 10000;
  unsigned threads = 1;
};

struct ErgodicSolution {
  DensityCurve density;
  double residual = 0.0;  // L1 norm of density - evolve(density)
  int iterations = 0;
  /// Connected components of the kernel's support graph; more than one means
  /// the fixed point depends on the initial density.
  std::size_t support_components = 0;
};

/// Raised when the fixed-point iteration exhausts max_iter. Keeps the last
/// iterate and the last two L1 changes so callers can inspect oscillation.
class NotConvergedError : public Error {
 public:
  NotConvergedError(DensityCurve last, double previous_delta, double last_delta, int iterations);

  const DensityCurve& last_iterate() const noexcept { return last_; }
  double previous_delta() const noexcept { return previous_delta_; }
  double last_delta() const noexcept { return last_delta_; }
  int iterations() const noexcept { return iterations_; }

 private:
  DensityCurve last_;
  double previous_delta_;
  double last_delta_;
  int iterations_;
};

/// One step of the distribution: y -> integral of g(y|x) f(x) dx over the
/// supported rows, with f renormalized over them.
DensityCurve evolve(const StochasticKernel& kernel, const DensityCurve& f, unsigned threads = 1);

/// Iterates evolve from init until the L1 change between iterates is <= tol.
ErgodicSolution ergodic_distribution(const StochasticKernel& kernel, const DensityCurve& init,
                                     const ErgodicOptions& options = {});

std::size_t support_components(const StochasticKernel& kernel);

/// Rows estimated from very few observations produce sign changes that are
/// pure noise, so NTP reporting uses its own floor on the relative marginal.
inline constexpr double kDefaultNtpFloor = 1e-2;

/// p(x) = 1 - 2 C(x), C the trapezoid CDF of row g(.|x) at x. The cell holding
/// x is split in proportion to the position of x inside it. Rows that are
/// unsupported or whose row_weight is below min_row_weight become gaps.
NTPCurve net_transition_probability(const StochasticKernel& kernel, double min_row_weight = 0.0);

/// Same quantity from the two one-sided integrals: mass above x minus mass
/// from the lower grid bound up to x.
NTPCurve net_transition_probability_two_sided(const StochasticKernel& kernel, double min_row_weight = 0.0);

/// Sign changes between consecutive supported values, linearly interpolated;
/// exact zeros are reported at their grid point.
std::vector<double> ntp_crossings(const NTPCurve& ntp);

}  // namespace distdyn
