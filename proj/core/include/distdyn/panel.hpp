#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace distdyn {

enum class Sector { Urban, Rural };
enum class Region { East, Central, West, Other };
enum class RelativeScope { Pooled, PerSector };

std::string_view to_string(Sector sector);
std::string_view to_string(Region region);
std::string_view to_string(RelativeScope scope);
std::optional<Sector> parse_sector(std::string_view text);
std::optional<Region> parse_region(std::string_view text);
std::optional<RelativeScope> parse_scope(std::string_view text);

struct Observation {
  std::string unit_id;
  Sector sector = Sector::Urban;
  Region region = Region::Other;
  int year = 0;
  double income = 0.0;
  std::optional<double> cpi;

  bool operator==(const Observation&) const = default;
};

/// Long-format income panel. Construction validates positivity of income and
/// cpi and uniqueness of (unit_id, sector, year); the value is immutable.
class Panel {
 public:
  Panel() = default;
  explicit Panel(std::vector<Observation> observations, bool is_relative = false);

  const std::vector<Observation>& observations() const noexcept { return observations_; }
  bool is_relative() const noexcept { return is_relative_; }
  bool empty() const noexcept { return observations_.empty(); }
  std::size_t size() const noexcept { return observations_.size(); }

  /// Distinct calendar years, ascending.
  std::vector<int> years() const;
  /// Number of distinct (unit_id, sector) series.
  std::size_t unit_count() const;
  /// True when at least one observation carries a cpi value.
  bool has_cpi() const;

  bool operator==(const Panel&) const = default;

 private:
  std::vector<Observation> observations_;
  bool is_relative_ = false;
};

struct TransitionPair {
  double x;  // relative income at t
  double y;  // relative income at t + tau
};

struct TransitionPairs {
  std::vector<TransitionPair> pairs;
  int tau = 1;

  std::vector<double> xs() const;
  std::vector<double> ys() const;
  std::size_t size() const noexcept { return pairs.size(); }
};

/// Parses `unit_id,sector,region,year,income[,cpi]` CSV. Errors name the
/// offending line.
Panel load_panel(std::istream& in);

/// Writes the same format load_panel reads, 17 significant digits.
void write_panel(const Panel& panel, std::ostream& out);

/// income * 100 / cpi; the cpi column is dropped.
Panel deflate(const Panel& panel);

/// Divides each income by its year's mean, either across all sectors or
/// within the observation's sector.
Panel to_relative(const Panel& panel, RelativeScope scope = RelativeScope::Pooled);

/// Keeps only series observed in every year of the panel's year range.
Panel balance(const Panel& panel);

Panel filter_group(const Panel& panel, std::optional<Sector> sector, std::optional<Region> region);

/// The ceil(fraction * U) series with the lowest base-year income, ranked per
/// sector; ties go to the smaller unit_id. All years of retained series kept.
Panel poorest_fraction(const Panel& panel, int base_year, double fraction);

TransitionPairs build_transition_pairs(const Panel& panel, int tau = 1);

/// Share of distinct (unit_id, sector) series in each region.
std::map<Region, double> group_shares(const Panel& panel);

}  // namespace distdyn
