#include "distdyn/synthesis.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "distdyn/error.hpp"

namespace distdyn {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::string unit_name(char prefix, int index, int total) {
  const int width = std::max(4, static_cast<int>(std::to_string(total).size()));
  return fmt::format("{}{:0{}d}", prefix, index + 1, width);
}

// Log-income path of one unit. Club index is ignored unless kind is two_club.
std::vector<double> simulate_unit(const ProcessSpec& spec, int unit, int club) {
  Xoshiro256 rng(Xoshiro256::substream_seed(spec.seed, static_cast<std::uint64_t>(unit)));
  std::vector<double> path(static_cast<std::size_t>(spec.years));
  const double sd0 = stationary_log_sd(spec);
  switch (spec.kind) {
    case ProcessKind::IidLognormal:
      for (auto& v : path) v = spec.sigma * rng.normal();
      break;
    case ProcessKind::Ar1Log:
      path[0] = sd0 * rng.normal();
      for (std::size_t t = 1; t < path.size(); ++t) path[t] = spec.rho * path[t - 1] + spec.sigma * rng.normal();
      break;
    case ProcessKind::TwoClub: {
      const double centre = std::log(spec.club_centers[static_cast<std::size_t>(club)]);
      path[0] = centre + sd0 * rng.normal();
      for (std::size_t t = 1; t < path.size(); ++t)
        path[t] = path[t - 1] + spec.club_pull * (centre - path[t - 1]) + spec.sigma * rng.normal();
      break;
    }
  }
  return path;
}

int first_club_units(const ProcessSpec& spec) {
  return static_cast<int>(std::lround(spec.club_share * spec.units));
}

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  std::uint64_t state = seed;
  for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t Xoshiro256::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Xoshiro256::normal() {
  const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Xoshiro256::substream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  return splitmix64(state);
}

std::string_view to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::IidLognormal: return "iid_lognormal";
    case ProcessKind::Ar1Log: return "ar1_log";
    case ProcessKind::TwoClub: return "two_club";
  }
  return "ar1_log";
}

std::optional<ProcessKind> parse_process_kind(std::string_view text) {
  if (text == "iid_lognormal") return ProcessKind::IidLognormal;
  if (text == "ar1_log") return ProcessKind::Ar1Log;
  if (text == "two_club") return ProcessKind::TwoClub;
  return std::nullopt;
}

void validate(const ProcessSpec& spec) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (spec.kind == ProcessKind::Ar1Log && !(spec.rho >= 0.0 && spec.rho < 1.0)) fail("rho must lie in [0, 1)");
  if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) fail("sigma must be positive");
  if (spec.kind == ProcessKind::TwoClub) {
    if (!(spec.club_centers[0] > 0.0) || !(spec.club_centers[1] > 0.0)) fail("club centers must be positive");
    if (!(spec.club_pull > 0.0 && spec.club_pull <= 1.0)) fail("club_pull must lie in (0, 1]");
    if (!(spec.club_share >= 0.0 && spec.club_share <= 1.0)) fail("club_share must lie in [0, 1]");
  }
  if (spec.units < 1) fail("units must be positive");
  if (spec.years < 1) fail("years must be positive");
}

double stationary_log_sd(const ProcessSpec& spec) {
  switch (spec.kind) {
    case ProcessKind::IidLognormal: return spec.sigma;
    case ProcessKind::Ar1Log: return spec.sigma / std::sqrt(1.0 - spec.rho * spec.rho);
    case ProcessKind::TwoClub: {
      const double keep = 1.0 - spec.club_pull;
      return spec.sigma / std::sqrt(1.0 - keep * keep);
    }
  }
  return spec.sigma;
}

double mean_preserving_club_share(const ProcessSpec& spec) {
  const double s = stationary_log_sd(spec);
  const double m = std::exp(0.5 * s * s);
  const auto [low, high] = spec.club_centers;
  if (low == high) throw Error(ErrorCode::InvalidSpec, "club centers coincide");
  const double share = (high * m - 1.0) / ((high - low) * m);
  if (!(share >= 0.0 && share <= 1.0))
    throw Error(ErrorCode::InvalidSpec, "no club share puts the mean income at 1 for these centers");
  return share;
}

Panel simulate(const ProcessSpec& spec) {
  validate(spec);
  const int first_club = first_club_units(spec);
  std::vector<Observation> rows;
  rows.reserve(static_cast<std::size_t>(spec.units) * static_cast<std::size_t>(spec.years));
  for (int u = 0; u < spec.units; ++u) {
    const auto path = simulate_unit(spec, u, u < first_club ? 0 : 1);
    const std::string id = unit_name('U', u, spec.units);
    for (int t = 0; t < spec.years; ++t)
      rows.push_back({id, Sector::Urban, Region::Other, spec.first_year + t, std::exp(path[static_cast<std::size_t>(t)]),
                      std::nullopt});
  }
  return Panel(std::move(rows));
}

namespace {

DensityCurve lognormal_on_grid(double log_mean, double log_sd, const Grid& grid) {
  std::vector<double> values(grid.count(), 0.0);
  const double norm = 1.0 / (log_sd * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < grid.count(); ++i) {
    const double x = grid[i];
    if (x <= 0.0) continue;
    const double z = (std::log(x) - log_mean) / log_sd;
    values[i] = norm / x * std::exp(-0.5 * z * z);
  }
  return DensityCurve(grid, std::move(values));
}

}  // namespace

DensityCurve stationary_density(const ProcessSpec& spec, const Grid& grid) {
  validate(spec);
  if (spec.kind == ProcessKind::TwoClub) throw Error(ErrorCode::NoClosedForm, "two_club has no closed-form law");
  return lognormal_on_grid(0.0, stationary_log_sd(spec), grid);
}

DensityCurve stationary_relative_density(const ProcessSpec& spec, const Grid& grid) {
  validate(spec);
  if (spec.kind == ProcessKind::TwoClub) throw Error(ErrorCode::NoClosedForm, "two_club has no closed-form law");
  const double s = stationary_log_sd(spec);
  return lognormal_on_grid(-0.5 * s * s, s, grid);
}

ProcessSpec demo_spec(std::uint64_t seed) {
  ProcessSpec spec;
  spec.kind = ProcessKind::TwoClub;
  spec.sigma = 0.1;
  spec.club_pull = 0.3;
  spec.club_centers = {0.48, 1.1};
  spec.units = 390;
  spec.years = 15;
  spec.first_year = 1999;
  spec.seed = seed;
  spec.club_share = mean_preserving_club_share(spec);
  return spec;
}

Panel demo_panel(std::uint64_t seed) {
  const ProcessSpec spec = demo_spec(seed);
  const Panel raw = simulate(spec);
  const int first_club = first_club_units(spec);
  // Poor series lean west/central, rich series lean east.
  static constexpr std::array<Region, 5> kPoor{Region::West, Region::Central, Region::West, Region::Central,
                                               Region::East};
  static constexpr std::array<Region, 5> kRich{Region::East, Region::Central, Region::East, Region::West,
                                               Region::Central};
  std::vector<Observation> rows;
  rows.reserve(raw.size());
  for (const auto& obs : raw.observations()) {
    const int index = std::stoi(obs.unit_id.substr(1)) - 1;
    Observation out = obs;
    out.unit_id = unit_name('P', index, spec.units);
    if (index < first_club) {
      out.sector = Sector::Rural;
      out.region = kPoor[static_cast<std::size_t>(index) % kPoor.size()];
    } else {
      out.sector = Sector::Urban;
      out.region = kRich[static_cast<std::size_t>(index) % kRich.size()];
    }
    rows.push_back(std::move(out));
  }
  return Panel(std::move(rows));
}

}  // namespace distdyn
