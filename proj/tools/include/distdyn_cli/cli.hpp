#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "distdyn/panel.hpp"
#include "distdyn/synthesis.hpp"

namespace distdyn::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kNotConverged = 4,
};

/// Flat run configuration. JSON config keys and CLI flags share the
/// kebab-case field names (grid-count, max-iter, ...).
struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  int tau = 1;
  int grid_count = 256;
  double grid_upper_factor = 1.1;
  RelativeScope scope = RelativeScope::Pooled;
  std::vector<std::string> groups{"pooled"};
  double fraction = 1.0 / 3.0;
  std::optional<int> base_year;
  std::optional<double> bandwidth_x;
  std::optional<double> bandwidth_y;
  double tol = 1e-10;
  int max_iter = 10000;
  double prominence = 0.05;
  double density_floor = 1e-4;
  double ntp_floor = 1e-2;
  unsigned threads = 1;
  // compare-years
  std::optional<int> first_year;
  std::optional<int> last_year;
  // simulate
  ProcessSpec process;
  bool club_share_given = false;
  bool demo = false;
  std::filesystem::path output;
};

/// One analysis group resolved from a --groups token.
struct GroupSelection {
  std::string label;
  std::optional<Sector> sector;
  std::optional<Region> region;
  bool poorest = false;
};

/// Expands tokens such as pooled, per-sector, per-region, poorest, urban,
/// east-rural, poorest-urban. Throws std::invalid_argument on unknown tokens.
std::vector<GroupSelection> expand_groups(const std::vector<std::string>& tokens);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "DISTDYN_OUT_DIR";

int cmd_analyze(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_compare_years(const RunConfig& config, std::ostream& log);

/// Parses argv (without the program name) and dispatches to a subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace distdyn::cli
