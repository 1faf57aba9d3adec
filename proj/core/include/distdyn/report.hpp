#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "distdyn/dynamics.hpp"
#include "distdyn/kde.hpp"
#include "distdyn/panel.hpp"

namespace distdyn {

struct Mode {
  double location;
  double value;
  double prominence;
};

inline constexpr double kDefaultProminence = 0.05;

/// Strict interior local maxima with topographic prominence of at least
/// min_prominence * (global max). Locations are refined by a parabola through
/// the peak and its neighbours; results are sorted by location. A flat top
/// (equal neighbouring values, both flanks lower) is one peak at its centre.
std::vector<Mode> find_modes(const Grid& grid, std::span<const double> values, double min_prominence = kDefaultProminence);
std::vector<Mode> find_modes(const DensityCurve& density, double min_prominence = kDefaultProminence);

struct YearComparison {
  Sector sector;
  int first_year;
  int last_year;
  DensityCurve first;
  DensityCurve last;
};

/// Per-sector KDEs of relative income in two years on a common grid.
std::vector<YearComparison> compare_years(const Panel& panel, int first_year, int last_year, const Grid& grid,
                                          unsigned threads = 1);

struct SampleCounts {
  std::size_t observations = 0;
  std::size_t units = 0;
  std::size_t pairs = 0;
};

struct AnalysisReport {
  std::string group_label;
  SampleCounts sample_counts;
  std::vector<Mode> modes;
  std::vector<double> ntp_crossings;
  double ergodic_residual = 0.0;
  std::map<Region, double> region_shares;
};

struct ReportInputs {
  std::string group_label;
  const Panel& panel;
  const TransitionPairs& pairs;
  const DensityCurve& ergodic;
  double ergodic_residual;
  const NTPCurve& ntp;
  double min_prominence = kDefaultProminence;
};

/// Throws GridMismatch when the ergodic density and NTP curve disagree on grids.
AnalysisReport build_report(const ReportInputs& inputs);

/// {group_label, sample_counts, modes, ntp_crossings, ergodic_residual,
/// region_shares} in that order, numbers with 17 significant digits.
std::string to_json(const AnalysisReport& report);

std::string json_number(double value);
std::string json_string(std::string_view text);

}  // namespace distdyn
