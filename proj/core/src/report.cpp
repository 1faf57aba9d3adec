#include "distdyn/report.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "distdyn/error.hpp"

namespace distdyn {

std::vector<Mode> find_modes(const Grid& grid, std::span<const double> values, double min_prominence) {
  if (values.size() != grid.count()) throw Error(ErrorCode::GridMismatch, "value count differs from grid size");
  if (!(min_prominence >= 0.0)) throw Error(ErrorCode::InvalidArgument, "min_prominence must be nonnegative");
  const std::size_t n = values.size();
  std::vector<Mode> modes;
  if (n < 3) return modes;
  const double global_max = *std::max_element(values.begin(), values.end());
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double v = values[i];
    if (!(v > values[i - 1])) continue;
    // A run of equal values counts as one peak; a symmetric bump whose top
    // falls between two grid points samples as such a run.
    std::size_t j = i;
    while (j + 1 < n && values[j + 1] == v) ++j;
    if (j + 1 >= n || !(v > values[j + 1])) {
      i = j;
      continue;
    }
    // Lowest point on each side before terrain rises above the peak.
    double left_min = v;
    for (std::size_t k = i; k-- > 0;) {
      if (values[k] > v) break;
      left_min = std::min(left_min, values[k]);
    }
    double right_min = v;
    for (std::size_t k = j + 1; k < n; ++k) {
      if (values[k] > v) break;
      right_min = std::min(right_min, values[k]);
    }
    const double prominence = v - std::max(left_min, right_min);
    if (prominence >= min_prominence * global_max) {
      double location = 0.5 * (grid[i] + grid[j]);
      if (i == j) {
        const double l = values[i - 1];
        const double r = values[i + 1];
        const double curvature = l - 2.0 * v + r;
        location = grid[i] + 0.5 * (l - r) / curvature * grid.spacing();
      }
      modes.push_back({location, v, prominence});
    }
    i = j;
  }
  return modes;
}

std::vector<Mode> find_modes(const DensityCurve& density, double min_prominence) {
  return find_modes(density.grid(), density.values(), min_prominence);
}

std::vector<YearComparison> compare_years(const Panel& panel, int first_year, int last_year, const Grid& grid,
                                          unsigned threads) {
  if (!panel.is_relative()) throw Error(ErrorCode::NotRelative, "year comparison works on relative incomes");
  const auto years = panel.years();
  for (int y : {first_year, last_year})
    if (!std::binary_search(years.begin(), years.end(), y))
      throw Error(ErrorCode::MissingYear, "year " + std::to_string(y) + " not in panel");

  std::vector<YearComparison> out;
  for (Sector sector : {Sector::Urban, Sector::Rural}) {
    std::vector<double> first;
    std::vector<double> last;
    for (const auto& obs : panel.observations()) {
      if (obs.sector != sector) continue;
      if (obs.year == first_year) first.push_back(obs.income);
      if (obs.year == last_year) last.push_back(obs.income);
    }
    if (first.empty() && last.empty()) continue;
    if (first.empty() || last.empty())
      throw Error(ErrorCode::MissingYear, "sector " + std::string(to_string(sector)) + " lacks one of the years");
    out.push_back({sector, first_year, last_year,
                   density_1d(first, silverman_bandwidth(first, 1), grid, threads),
                   density_1d(last, silverman_bandwidth(last, 1), grid, threads)});
  }
  return out;
}

AnalysisReport build_report(const ReportInputs& in) {
  if (!(in.ergodic.grid() == in.ntp.grid))
    throw Error(ErrorCode::GridMismatch, "ergodic density and NTP curve use different grids");
  AnalysisReport report;
  report.group_label = in.group_label;
  report.sample_counts = {in.panel.size(), in.panel.unit_count(), in.pairs.size()};
  report.modes = find_modes(in.ergodic, in.min_prominence);
  report.ntp_crossings = ntp_crossings(in.ntp);
  report.ergodic_residual = in.ergodic_residual;
  if (!in.panel.empty()) report.region_shares = group_shares(in.panel);
  return report;
}

std::string json_number(double value) {
  if (!std::isfinite(value)) return "null";
  return fmt::format("{:.17g}", value);
}

std::string json_string(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20)
          out += fmt::format("\\u{:04x}", static_cast<unsigned>(c));
        else
          out += c;
    }
  }
  return out + "\"";
}

std::string to_json(const AnalysisReport& report) {
  std::string out = "{\n";
  out += "  \"group_label\": " + json_string(report.group_label) + ",\n";
  out += fmt::format("  \"sample_counts\": {{\"observations\": {}, \"units\": {}, \"pairs\": {}}},\n",
                     report.sample_counts.observations, report.sample_counts.units, report.sample_counts.pairs);
  out += "  \"modes\": [";
  for (std::size_t i = 0; i < report.modes.size(); ++i) {
    const auto& m = report.modes[i];
    out += (i ? ", " : "") + fmt::format("{{\"location\": {}, \"value\": {}, \"prominence\": {}}}",
                                        json_number(m.location), json_number(m.value), json_number(m.prominence));
  }
  out += "],\n  \"ntp_crossings\": [";
  for (std::size_t i = 0; i < report.ntp_crossings.size(); ++i)
    out += (i ? ", " : "") + json_number(report.ntp_crossings[i]);
  out += "],\n  \"ergodic_residual\": " + json_number(report.ergodic_residual) + ",\n";
  out += "  \"region_shares\": {";
  bool first = true;
  for (const auto& [region, share] : report.region_shares) {
    out += (first ? "" : ", ") + json_string(to_string(region)) + ": " + json_number(share);
    first = false;
  }
  out += "}\n}\n";
  return out;
}

}  // namespace distdyn
