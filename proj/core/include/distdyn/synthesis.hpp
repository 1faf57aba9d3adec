#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "distdyn/kde.hpp"
#include "distdyn/panel.hpp"

namespace distdyn {

/// xoshiro256** seeded through splitmix64. Fixed, documented algorithm so a
/// reimplementation in another language reproduces the same streams:
///   state[k] = splitmix64 output k (k = 0..3) starting from `seed`;
///   uniform() = (next() >> 11) * 2^-53;
///   normal()  = sqrt(-2 ln u1) * cos(2 pi u2), u1 = ((next() >> 11) + 1) * 2^-53,
///               u2 = uniform(), one normal per two draws.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();
  double uniform();
  double normal();

  /// Seed of the substream for unit `index`: splitmix64 applied once to
  /// seed + (index + 1) * 0x9E3779B97F4A7C15.
  static std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

 private:
  std::array<std::uint64_t, 4> s_{};
};

enum class ProcessKind { IidLognormal, Ar1Log, TwoClub };

std::string_view to_string(ProcessKind kind);
std::optional<ProcessKind> parse_process_kind(std::string_view text);

struct ProcessSpec {
  ProcessKind kind = ProcessKind::Ar1Log;
  double rho = 0.9;
  double sigma = 0.2;
  std::array<double, 2> club_centers{0.48, 1.1};
  double club_pull = 0.3;
  /// Fraction of units assigned to the first club.
  double club_share = 0.5;
  int units = 400;
  int years = 15;
  int first_year = 1999;
  std::uint64_t seed = 1;
};

/// Throws InvalidSpec when a field is out of range.
void validate(const ProcessSpec& spec);

/// Log-scale standard deviation of the stationary law of the simulated process
/// (per club for two_club).
double stationary_log_sd(const ProcessSpec& spec);

/// club_share for which the long-run cross-sectional mean income equals 1, so
/// the club centers are also the clubs' relative-income medians.
double mean_preserving_club_share(const ProcessSpec& spec);

/// Deterministic in spec.seed. Units are urban, region other, ids U0001...
Panel simulate(const ProcessSpec& spec);

/// Lognormal stationary density (log-mean 0) renormalized on the grid.
DensityCurve stationary_density(const ProcessSpec& spec, const Grid& grid);

/// The same law expressed in relative-income units (divided by its mean).
DensityCurve stationary_relative_density(const ProcessSpec& spec, const Grid& grid);

/// Bundled demonstration panel: a two-club process with clubs at relative
/// incomes 0.48 (rural series) and 1.1 (urban series), 1999-2013, with
/// deterministic east/central/west membership.
ProcessSpec demo_spec(std::uint64_t seed = 20161);
Panel demo_panel(std::uint64_t seed = 20161);

}  // namespace distdyn
