#include "distdyn/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <string>
#include <tuple>
#include <utility>

#include <fmt/format.h>

#include "distdyn/error.hpp"

namespace distdyn {

namespace {

using SeriesKey = std::pair<std::string, Sector>;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no); }

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

}  // namespace

std::string_view to_string(Sector sector) { return sector == Sector::Urban ? "urban" : "rural"; }

std::string_view to_string(Region region) {
  switch (region) {
    case Region::East: return "east";
    case Region::Central: return "central";
    case Region::West: return "west";
    case Region::Other: return "other";
  }
  return "other";
}

std::string_view to_string(RelativeScope scope) {
  return scope == RelativeScope::Pooled ? "pooled" : "per_sector";
}

std::optional<Sector> parse_sector(std::string_view text) {
  if (text == "urban") return Sector::Urban;
  if (text == "rural") return Sector::Rural;
  return std::nullopt;
}

std::optional<Region> parse_region(std::string_view text) {
  if (text == "east") return Region::East;
  if (text == "central") return Region::Central;
  if (text == "west") return Region::West;
  if (text == "other") return Region::Other;
  return std::nullopt;
}

std::optional<RelativeScope> parse_scope(std::string_view text) {
  if (text == "pooled") return RelativeScope::Pooled;
  if (text == "per_sector" || text == "per-sector") return RelativeScope::PerSector;
  return std::nullopt;
}

Panel::Panel(std::vector<Observation> observations, bool is_relative)
    : observations_(std::move(observations)), is_relative_(is_relative) {
  std::set<std::tuple<std::string, Sector, int>> seen;
  for (const auto& obs : observations_) {
    if (!(obs.income > 0.0) || !std::isfinite(obs.income))
      throw Error(ErrorCode::NonPositiveIncome, "unit " + obs.unit_id + " year " + std::to_string(obs.year));
    if (obs.cpi && (!(*obs.cpi > 0.0) || !std::isfinite(*obs.cpi)))
      throw Error(ErrorCode::InvalidArgument, "non-positive cpi for unit " + obs.unit_id);
    if (!seen.emplace(obs.unit_id, obs.sector, obs.year).second)
      throw Error(ErrorCode::DuplicateKey, "unit " + obs.unit_id + " sector " + std::string(to_string(obs.sector)) +
                                               " year " + std::to_string(obs.year));
  }
}

std::vector<int> Panel::years() const {
  std::set<int> years;
  for (const auto& obs : observations_) years.insert(obs.year);
  return {years.begin(), years.end()};
}

std::size_t Panel::unit_count() const {
  std::set<SeriesKey> keys;
  for (const auto& obs : observations_) keys.emplace(obs.unit_id, obs.sector);
  return keys.size();
}

bool Panel::has_cpi() const {
  return std::any_of(observations_.begin(), observations_.end(), [](const auto& o) { return o.cpi.has_value(); });
}

std::vector<double> TransitionPairs::xs() const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.x);
  return out;
}

std::vector<double> TransitionPairs::ys() const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.y);
  return out;
}

Panel load_panel(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool with_cpi = false;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line.empty()) continue;
    if (line == "unit_id,sector,region,year,income") {
      have_header = true;
    } else if (line == "unit_id,sector,region,year,income,cpi") {
      have_header = true;
      with_cpi = true;
    } else {
      throw Error(ErrorCode::MalformedRow, where(line_no) + ": expected header unit_id,sector,region,year,income[,cpi]");
    }
    break;
  }
  if (!have_header) throw Error(ErrorCode::MalformedRow, "input is empty (no header row)");

  std::vector<Observation> rows;
  std::set<std::tuple<std::string, Sector, int>> seen;
  const std::size_t expected = with_cpi ? 6 : 5;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != expected)
      throw Error(ErrorCode::MalformedRow,
                  where(line_no) + ": expected " + std::to_string(expected) + " columns, got " +
                      std::to_string(fields.size()));
    Observation obs;
    if (fields[0].empty()) throw Error(ErrorCode::MalformedRow, where(line_no) + ": empty unit_id");
    obs.unit_id = std::string(fields[0]);
    auto sector = parse_sector(fields[1]);
    if (!sector) throw Error(ErrorCode::MalformedRow, where(line_no) + ": bad sector '" + std::string(fields[1]) + "'");
    obs.sector = *sector;
    auto region = parse_region(fields[2]);
    if (!region) throw Error(ErrorCode::MalformedRow, where(line_no) + ": bad region '" + std::string(fields[2]) + "'");
    obs.region = *region;
    auto year = parse_number<int>(fields[3]);
    if (!year) throw Error(ErrorCode::MalformedRow, where(line_no) + ": bad year '" + std::string(fields[3]) + "'");
    obs.year = *year;
    auto income = parse_number<double>(fields[4]);
    if (!income || !std::isfinite(*income))
      throw Error(ErrorCode::MalformedRow, where(line_no) + ": bad income '" + std::string(fields[4]) + "'");
    if (!(*income > 0.0)) throw Error(ErrorCode::NonPositiveIncome, where(line_no) + ": income must be positive");
    obs.income = *income;
    if (with_cpi && !fields[5].empty()) {
      auto cpi = parse_number<double>(fields[5]);
      if (!cpi || !std::isfinite(*cpi))
        throw Error(ErrorCode::MalformedRow, where(line_no) + ": bad cpi '" + std::string(fields[5]) + "'");
      if (!(*cpi > 0.0)) throw Error(ErrorCode::MalformedRow, where(line_no) + ": cpi must be positive");
      obs.cpi = *cpi;
    }
    if (!seen.emplace(obs.unit_id, obs.sector, obs.year).second)
      throw Error(ErrorCode::DuplicateKey, where(line_no) + ": repeated (unit_id, sector, year) " + obs.unit_id);
    rows.push_back(std::move(obs));
  }
  return Panel(std::move(rows));
}

void write_panel(const Panel& panel, std::ostream& out) {
  const bool with_cpi = panel.has_cpi();
  out << "unit_id,sector,region,year,income" << (with_cpi ? ",cpi" : "") << '\n';
  for (const auto& obs : panel.observations()) {
    out << obs.unit_id << ',' << to_string(obs.sector) << ',' << to_string(obs.region) << ',' << obs.year << ','
        << fmt::format("{:.17g}", obs.income);
    if (with_cpi) {
      out << ',';
      if (obs.cpi) out << fmt::format("{:.17g}", *obs.cpi);
    }
    out << '\n';
  }
}

Panel deflate(const Panel& panel) {
  if (panel.is_relative()) throw Error(ErrorCode::AlreadyRelative, "deflate expects nominal incomes");
  std::vector<Observation> rows = panel.observations();
  for (auto& obs : rows) {
    if (!obs.cpi) throw Error(ErrorCode::MissingCpi, "unit " + obs.unit_id + " year " + std::to_string(obs.year));
    obs.income = obs.income * 100.0 / *obs.cpi;
    obs.cpi.reset();
  }
  return Panel(std::move(rows));
}

Panel to_relative(const Panel& panel, RelativeScope scope) {
  if (panel.is_relative()) throw Error(ErrorCode::AlreadyRelative, "panel is already in relative units");
  if (panel.empty()) throw Error(ErrorCode::EmptyPanel, "nothing to normalize");
  // Key: (year, sector) where sector is ignored under pooled scope.
  auto key = [scope](const Observation& o) {
    return std::pair<int, int>(o.year, scope == RelativeScope::Pooled ? -1 : static_cast<int>(o.sector));
  };
  std::map<std::pair<int, int>, std::pair<double, std::size_t>> sums;
  for (const auto& obs : panel.observations()) {
    auto& [sum, count] = sums[key(obs)];
    sum += obs.income;
    ++count;
  }
  std::vector<Observation> rows = panel.observations();
  for (auto& obs : rows) {
    const auto& [sum, count] = sums.at(key(obs));
    if (count == 0 || !(sum > 0.0)) throw Error(ErrorCode::EmptyYear, "year " + std::to_string(obs.year));
    obs.income /= sum / static_cast<double>(count);
  }
  return Panel(std::move(rows), true);
}

Panel balance(const Panel& panel) {
  const auto years = panel.years();
  std::map<SeriesKey, std::size_t> counts;
  for (const auto& obs : panel.observations()) ++counts[{obs.unit_id, obs.sector}];
  std::vector<Observation> rows;
  for (const auto& obs : panel.observations())
    if (counts[{obs.unit_id, obs.sector}] == years.size()) rows.push_back(obs);
  if (rows.empty() && !panel.empty()) throw Error(ErrorCode::EmptySelection, "no series spans every year");
  return Panel(std::move(rows), panel.is_relative());
}

Panel filter_group(const Panel& panel, std::optional<Sector> sector, std::optional<Region> region) {
  std::vector<Observation> rows;
  for (const auto& obs : panel.observations()) {
    if (sector && obs.sector != *sector) continue;
    if (region && obs.region != *region) continue;
    rows.push_back(obs);
  }
  if (rows.empty()) {
    std::string what = "no observations for";
    if (sector) what += " sector=" + std::string(to_string(*sector));
    if (region) what += " region=" + std::string(to_string(*region));
    throw Error(ErrorCode::EmptySelection, what);
  }
  return Panel(std::move(rows), panel.is_relative());
}

Panel poorest_fraction(const Panel& panel, int base_year, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw Error(ErrorCode::InvalidArgument, "fraction must lie in (0, 1]");
  const auto years = panel.years();
  if (!std::binary_search(years.begin(), years.end(), base_year))
    throw Error(ErrorCode::MissingBaseYear, "base year " + std::to_string(base_year) + " not in panel");
  if (fraction == 1.0) return panel;

  std::map<Sector, std::vector<std::pair<double, std::string>>> ranking;
  for (const auto& obs : panel.observations())
    if (obs.year == base_year) ranking[obs.sector].emplace_back(obs.income, obs.unit_id);

  std::set<SeriesKey> keep;
  for (auto& [sector, units] : ranking) {
    std::sort(units.begin(), units.end());
    const double wanted = fraction * static_cast<double>(units.size());
    // Guard against 1/3 * 6 landing a hair above 2.
    auto retain = static_cast<std::size_t>(std::ceil(wanted - 1e-9 * std::max(1.0, wanted)));
    retain = std::clamp<std::size_t>(retain, 1, units.size());
    for (std::size_t i = 0; i < retain; ++i) keep.emplace(units[i].second, sector);
  }
  std::vector<Observation> rows;
  for (const auto& obs : panel.observations())
    if (keep.contains({obs.unit_id, obs.sector})) rows.push_back(obs);
  return Panel(std::move(rows), panel.is_relative());
}

TransitionPairs build_transition_pairs(const Panel& panel, int tau) {
  if (tau < 1) throw Error(ErrorCode::InvalidArgument, "tau must be a positive integer");
  if (!panel.is_relative()) throw Error(ErrorCode::NotRelative, "transition pairs are built on relative incomes");

  std::vector<SeriesKey> order;
  std::map<SeriesKey, std::map<int, double>> series;
  for (const auto& obs : panel.observations()) {
    SeriesKey key{obs.unit_id, obs.sector};
    auto [it, inserted] = series.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second[obs.year] = obs.income;
  }

  TransitionPairs out;
  out.tau = tau;
  for (const auto& key : order) {
    const auto& by_year = series.at(key);
    for (const auto& [year, income] : by_year) {
      auto later = by_year.find(year + tau);
      if (later != by_year.end()) out.pairs.push_back({income, later->second});
    }
  }
  if (out.pairs.empty())
    throw Error(ErrorCode::NoPairs, "no series is observed at both t and t+" + std::to_string(tau));
  return out;
}

std::map<Region, double> group_shares(const Panel& panel) {
  if (panel.empty()) throw Error(ErrorCode::EmptyPanel, "group shares of an empty panel");
  std::map<Region, std::size_t> counts;
  std::set<SeriesKey> units;
  for (const auto& obs : panel.observations()) {
    SeriesKey key{obs.unit_id, obs.sector};
    if (units.insert(key).second) ++counts[obs.region];
  }
  std::map<Region, double> shares;
  const auto total = static_cast<double>(units.size());
  for (const auto& [region, count] : counts) shares[region] = static_cast<double>(count) / total;
  return shares;
}

}  // namespace distdyn
