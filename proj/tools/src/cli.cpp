#include "distdyn_cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "distdyn/dynamics.hpp"
#include "distdyn/error.hpp"
#include "distdyn/kde.hpp"
#include "distdyn/report.hpp"
#include "distdyn/viz.hpp"

namespace distdyn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Keys accepted both in the JSON config and as --flags.
// Flag names double as config-file keys.
const std::vector<std::pair<std::string, std::string>> kKeys{
    {"input", "Panel CSV"},
    {"out-dir", "Output directory (default: $DISTDYN_OUT_DIR, then ./distdyn_out)"},
    {"tau", "Transition horizon in years"},
    {"grid-count", "Evaluation grid points per axis"},
    {"grid-upper-factor", "Grid upper bound as a multiple of the largest relative income"},
    {"scope", "Relative-income normalization: pooled | per-sector"},
    {"groups", "Comma list: pooled, per-sector, per-region, poorest, urban, east, east-rural, poorest-rural, ..."},
    {"fraction", "Share of poorest units kept by poorest groups"},
    {"base-year", "Year ranking units for poorest groups (default: first year)"},
    {"bandwidth-x", "Override the x bandwidth (needs bandwidth-y)"},
    {"bandwidth-y", "Override the y bandwidth (needs bandwidth-x)"},
    {"tol", "Ergodic convergence tolerance on the L1 change"},
    {"max-iter", "Ergodic iteration limit"},
    {"prominence", "Minimum mode prominence relative to the highest peak"},
    {"density-floor", "Kernel rows below this share of the peak marginal are unsupported"},
    {"ntp-floor", "NTP rows below this share of the peak marginal are left as gaps"},
    {"threads", "Worker threads for density and evolve loops"},
    {"seed", "Random seed"},
    {"first-year", "First year (compare-years; simulate start year)"},
    {"last-year", "Last year (compare-years)"},
    {"kind", "Process: iid_lognormal | ar1_log | two_club"},
    {"rho", "Persistence in logs"},
    {"sigma", "Innovation standard deviation in logs"},
    {"club-centers", "Two club centres, e.g. 0.48,1.1"},
    {"club-pull", "Mean-reversion rate toward the club centre"},
    {"club-share", "Share of units in the first club (default: keeps the mean at 1)"},
    {"units", "Number of simulated units"},
    {"years", "Number of simulated years"},
    {"output", "Output file for simulate"},
};

double as_double(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      std::size_t used = 0;
      const auto& s = v.get_ref<const std::string&>();
      double d = std::stod(s, &used);
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("'" + key + "' must be a number");
}

long long as_integer(const json& v, const std::string& key) {
  const double d = as_double(v, key);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError("'" + key + "' must be an integer");
  return static_cast<long long>(d);
}

std::string as_string(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  throw ConfigError("'" + key + "' must be a string");
}

std::vector<std::string> as_list(const json& v, const std::string& key) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& item : v) out.push_back(as_string(item, key));
    return out;
  }
  std::stringstream ss(as_string(v, key));
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void apply(RunConfig& c, const std::string& key, const json& v) {
  if (key == "input") c.input = as_string(v, key);
  else if (key == "out-dir") c.out_dir = as_string(v, key);
  else if (key == "tau") c.tau = static_cast<int>(as_integer(v, key));
  else if (key == "grid-count") c.grid_count = static_cast<int>(as_integer(v, key));
  else if (key == "grid-upper-factor") c.grid_upper_factor = as_double(v, key);
  else if (key == "scope") {
    auto scope = parse_scope(as_string(v, key));
    if (!scope) throw ConfigError("'scope' must be pooled or per_sector");
    c.scope = *scope;
  } else if (key == "groups") c.groups = as_list(v, key);
  else if (key == "fraction") c.fraction = as_double(v, key);
  else if (key == "base-year") c.base_year = static_cast<int>(as_integer(v, key));
  else if (key == "bandwidth-x") c.bandwidth_x = as_double(v, key);
  else if (key == "bandwidth-y") c.bandwidth_y = as_double(v, key);
  else if (key == "tol") c.tol = as_double(v, key);
  else if (key == "max-iter") c.max_iter = static_cast<int>(as_integer(v, key));
  else if (key == "prominence") c.prominence = as_double(v, key);
  else if (key == "density-floor") c.density_floor = as_double(v, key);
  else if (key == "ntp-floor") c.ntp_floor = as_double(v, key);
  else if (key == "threads") {
    auto t = as_integer(v, key);
    if (t < 1 || t > 1024) throw ConfigError("'threads' must lie in [1, 1024]");
    c.threads = static_cast<unsigned>(t);
  } else if (key == "seed") {
    auto s = as_integer(v, key);
    if (s < 0) throw ConfigError("'seed' must be nonnegative");
    c.process.seed = static_cast<std::uint64_t>(s);
  } else if (key == "first-year") {
    c.first_year = static_cast<int>(as_integer(v, key));
    c.process.first_year = *c.first_year;
  } else if (key == "last-year") c.last_year = static_cast<int>(as_integer(v, key));
  else if (key == "kind") {
    auto kind = parse_process_kind(as_string(v, key));
    if (!kind) throw ConfigError("'kind' must be iid_lognormal, ar1_log or two_club");
    c.process.kind = *kind;
  } else if (key == "rho") c.process.rho = as_double(v, key);
  else if (key == "sigma") c.process.sigma = as_double(v, key);
  else if (key == "club-centers") {
    std::vector<double> centers;
    if (v.is_array())
      for (const auto& item : v) centers.push_back(as_double(item, key));
    else
      for (const auto& item : as_list(v, key)) centers.push_back(as_double(json(item), key));
    if (centers.size() != 2) throw ConfigError("'club-centers' needs exactly two values");
    c.process.club_centers = {centers[0], centers[1]};
  } else if (key == "club-pull") c.process.club_pull = as_double(v, key);
  else if (key == "club-share") {
    c.process.club_share = as_double(v, key);
    c.club_share_given = true;
  } else if (key == "units") c.process.units = static_cast<int>(as_integer(v, key));
  else if (key == "years") c.process.years = static_cast<int>(as_integer(v, key));
  else if (key == "output") c.output = as_string(v, key);
  else if (key == "demo") {
    if (!v.is_boolean()) throw ConfigError("'demo' must be true or false");
    c.demo = v.get<bool>();
  } else
    throw ConfigError("unknown configuration key '" + key + "'");
}

void check_ranges(const RunConfig& c) {
  if (c.tau < 1) throw ConfigError("tau must be a positive integer");
  if (c.grid_count < static_cast<int>(Grid::kMinCount)) throw ConfigError("grid-count must be at least 16");
  if (!(c.grid_upper_factor > 0.0)) throw ConfigError("grid-upper-factor must be positive");
  if (!(c.fraction > 0.0 && c.fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
  if (c.bandwidth_x && !(*c.bandwidth_x > 0.0)) throw ConfigError("bandwidth-x must be positive");
  if (c.bandwidth_y && !(*c.bandwidth_y > 0.0)) throw ConfigError("bandwidth-y must be positive");
  if (c.bandwidth_x.has_value() != c.bandwidth_y.has_value())
    throw ConfigError("bandwidth-x and bandwidth-y must be overridden together");
  if (!(c.tol > 0.0)) throw ConfigError("tol must be positive");
  if (c.max_iter < 1) throw ConfigError("max-iter must be at least 1");
  if (!(c.prominence >= 0.0)) throw ConfigError("prominence must be nonnegative");
  if (!(c.density_floor >= 0.0) || !(c.ntp_floor >= 0.0)) throw ConfigError("floors must be nonnegative");
}

// Writes through a sibling temp file so readers never see a truncated file.
void write_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

Panel read_panel(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open input '" + path.string() + "'");
  Panel panel = load_panel(in);
  if (panel.empty()) throw Error(ErrorCode::EmptyPanel, "input '" + path.string() + "' has no data rows");
  return panel;
}

Panel prepare(const Panel& raw, RelativeScope scope) {
  return to_relative(raw.has_cpi() ? deflate(raw) : raw, scope);
}

fs::path resolve_out_dir(const RunConfig& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "distdyn_out";
}

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::size_t bytes;
  bool partial;
};

struct GroupOutcome {
  std::string label;
  std::string status;  // ok | failed | not_converged
  std::string message;
  std::vector<OutputFile> files;
};

class OutputSink {
 public:
  explicit OutputSink(fs::path root) : root_(std::move(root)) {}

  void emit(GroupOutcome& group, const std::string& name, std::string_view bytes, bool partial = false) {
    const std::string rel = group.label + "/" + name;
    write_atomic(root_ / rel, bytes);
    group.files.push_back({rel, sha256_hex(bytes), bytes.size(), partial});
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
};

std::string manifest_json(const std::string& command, const std::vector<GroupOutcome>& groups) {
  std::string out = "{\n  \"tool\": \"distdyn\",\n  \"command\": " + json_string(command) + ",\n  \"groups\": [";
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    out += g ? ",\n    {" : "\n    {";
    out += "\"label\": " + json_string(group.label) + ", \"status\": " + json_string(group.status);
    out += ", \"message\": " + json_string(group.message) + ", \"files\": [";
    for (std::size_t f = 0; f < group.files.size(); ++f) {
      const auto& file = group.files[f];
      out += (f ? ",\n      " : "\n      ") +
             fmt::format("{{\"path\": {}, \"sha256\": \"{}\", \"bytes\": {}, \"partial\": {}}}", json_string(file.path),
                         file.sha256, file.bytes, file.partial ? "true" : "false");
    }
    out += group.files.empty() ? "]}" : "\n    ]}";
  }
  out += groups.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

double max_value(const TransitionPairs& pairs) {
  double m = 0.0;
  for (const auto& p : pairs.pairs) m = std::max({m, p.x, p.y});
  return m;
}

Panel select_group(const Panel& relative, const GroupSelection& group, const RunConfig& c) {
  Panel selected = (group.sector || group.region) ? filter_group(relative, group.sector, group.region) : relative;
  if (group.poorest) {
    const int base = c.base_year ? *c.base_year : relative.years().front();
    selected = poorest_fraction(selected, base, c.fraction);
  }
  return selected;
}

// Runs one group's pipeline, emitting files as they become available.
void analyze_group(const Panel& relative, const GroupSelection& selection, const RunConfig& c, OutputSink& sink,
                   GroupOutcome& outcome) {
  const Panel panel = select_group(relative, selection, c);
  const TransitionPairs pairs = build_transition_pairs(panel, c.tau);
  sink.emit(outcome, "transition_pairs.csv", export_csv(pairs));

  const Grid grid = default_grid(max_value(pairs), static_cast<std::size_t>(c.grid_count), c.grid_upper_factor);
  std::optional<Bandwidths> bw;
  if (c.bandwidth_x) bw = Bandwidths{*c.bandwidth_x, *c.bandwidth_y};
  const KernelEstimate est = estimate_kernel(pairs, grid, bw, c.density_floor, c.threads);
  sink.emit(outcome, "kernel.csv", export_csv(est.kernel));

  const SurfaceView view = SurfaceView::of(est.kernel);
  PlotStyle style;
  style.title = selection.label + ": stochastic kernel";
  sink.emit(outcome, "contour.svg", render_contour(view, style));
  sink.emit(outcome, "surface.svg", render_surface(view, style));

  const NTPCurve ntp = net_transition_probability(est.kernel, c.ntp_floor);
  sink.emit(outcome, "ntp.csv", export_csv(ntp));
  PlotStyle curve_style;
  curve_style.width = 640;
  curve_style.height = 420;
  curve_style.title = selection.label + ": net transition probability";
  sink.emit(outcome, "ntp.svg", render_curves({LabeledCurve::of(selection.label, ntp)}, curve_style));

  const auto xs = pairs.xs();
  const DensityCurve init = density_1d(xs, silverman_bandwidth(xs, 1), grid, c.threads);
  ErgodicOptions options{c.tol, c.max_iter, c.threads};
  std::optional<ErgodicSolution> solution;
  std::optional<DensityCurve> ergodic;
  double residual = 0.0;
  bool partial = false;
  try {
    solution = ergodic_distribution(est.kernel, init, options);
    ergodic = solution->density;
    residual = solution->residual;
  } catch (const NotConvergedError& e) {
    ergodic = e.last_iterate();
    residual = e.last_delta();
    partial = true;
    outcome.status = "not_converged";
    outcome.message = e.what();
  }
  curve_style.title = selection.label + ": ergodic distribution";
  sink.emit(outcome, "ergodic.csv", export_csv(*ergodic), partial);
  sink.emit(outcome, "ergodic.svg",
            render_curves({LabeledCurve::of("ergodic", *ergodic), LabeledCurve::of("initial", init)}, curve_style),
            partial);

  const AnalysisReport report =
      build_report({selection.label, panel, pairs, *ergodic, residual, ntp, c.prominence});
  sink.emit(outcome, "report.json", to_json(report), partial);
  if (solution && solution->support_components > 1)
    outcome.message = fmt::format("kernel support splits into {} components; ergodic density depends on the "
                                  "initial distribution",
                                  solution->support_components);
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::vector<GroupSelection> expand_groups(const std::vector<std::string>& tokens) {
  std::vector<GroupSelection> out;
  std::set<std::string> seen;
  auto add = [&](GroupSelection g) {
    if (seen.insert(g.label).second) out.push_back(std::move(g));
  };
  for (const auto& token : tokens) {
    if (token == "pooled") {
      add({"pooled", std::nullopt, std::nullopt, false});
    } else if (token == "per-sector") {
      add({"urban", Sector::Urban, std::nullopt, false});
      add({"rural", Sector::Rural, std::nullopt, false});
    } else if (token == "per-region") {
      for (Region r : {Region::East, Region::Central, Region::West})
        add({std::string(to_string(r)), std::nullopt, r, false});
    } else if (token == "poorest") {
      add({"poorest-urban", Sector::Urban, std::nullopt, true});
      add({"poorest-rural", Sector::Rural, std::nullopt, true});
    } else if (auto s = parse_sector(token)) {
      add({token, s, std::nullopt, false});
    } else if (auto r = parse_region(token)) {
      add({token, std::nullopt, r, false});
    } else if (token.starts_with("poorest-") && parse_sector(token.substr(8))) {
      add({token, parse_sector(token.substr(8)), std::nullopt, true});
    } else if (auto dash = token.find('-'); dash != std::string::npos && parse_region(token.substr(0, dash)) &&
                                            parse_sector(token.substr(dash + 1))) {
      add({token, parse_sector(token.substr(dash + 1)), parse_region(token.substr(0, dash)), false});
    } else {
      throw std::invalid_argument("unknown group '" + token + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("no groups requested");
  return out;
}

int cmd_analyze(const RunConfig& config, std::ostream& log) {
  std::vector<GroupSelection> groups;
  try {
    check_ranges(config);
    if (config.input.empty()) throw ConfigError("analyze needs --input");
    groups = expand_groups(config.groups);
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  Panel relative;
  try {
    relative = prepare(read_panel(config.input), config.scope);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    log << "data error: " << e.what() << '\n';
    return kDataError;
  }

  OutputSink sink(resolve_out_dir(config));
  std::vector<GroupOutcome> outcomes;
  for (const auto& group : groups) {
    GroupOutcome outcome{group.label, "ok", "", {}};
    try {
      analyze_group(relative, group, config, sink, outcome);
    } catch (const Error& e) {
      outcome.status = "failed";
      outcome.message = e.what();
    }
    log << group.label << ": " << outcome.status << (outcome.message.empty() ? "" : " (" + outcome.message + ")")
        << '\n';
    outcomes.push_back(std::move(outcome));
  }
  write_atomic(sink.root() / "manifest.json", manifest_json("analyze", outcomes));

  const bool any_ok = std::any_of(outcomes.begin(), outcomes.end(), [](auto& o) { return o.status == "ok"; });
  const bool any_nc =
      std::any_of(outcomes.begin(), outcomes.end(), [](auto& o) { return o.status == "not_converged"; });
  if (any_nc) return kNotConverged;
  return any_ok ? kOk : kDataError;
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
  Panel panel;
  try {
    if (config.demo) {
      panel = demo_panel(config.process.seed);
    } else {
      ProcessSpec spec = config.process;
      validate(spec);
      if (spec.kind == ProcessKind::TwoClub && !config.club_share_given)
        spec.club_share = mean_preserving_club_share(spec);
      panel = simulate(spec);
    }
  } catch (const Error& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  std::ostringstream csv;
  write_panel(panel, csv);
  const fs::path out = config.output.empty() ? resolve_out_dir(config) / "panel.csv" : config.output;
  write_atomic(out, csv.str());
  log << "wrote " << panel.size() << " rows to " << out.string() << '\n';
  return kOk;
}

int cmd_compare_years(const RunConfig& config, std::ostream& log) {
  try {
    check_ranges(config);
    if (config.input.empty()) throw ConfigError("compare-years needs --input");
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    const Panel relative = prepare(read_panel(config.input), config.scope);
    const auto years = relative.years();
    if (years.size() < 2) throw Error(ErrorCode::MissingYear, "panel spans a single year");
    const int first = config.first_year.value_or(years.front());
    const int last = config.last_year.value_or(years.back());
    double top = 0.0;
    for (const auto& obs : relative.observations()) top = std::max(top, obs.income);
    const Grid grid = default_grid(top, static_cast<std::size_t>(config.grid_count), config.grid_upper_factor);
    const auto comparisons = compare_years(relative, first, last, grid, config.threads);

    std::vector<LabeledCurve> curves;
    std::vector<std::pair<std::string, std::vector<double>>> columns;
    for (const auto& cmp : comparisons) {
      for (auto [year, curve] : {std::pair{cmp.first_year, &cmp.first}, std::pair{cmp.last_year, &cmp.last}}) {
        const std::string name = fmt::format("{}_{}", to_string(cmp.sector), year);
        curves.push_back(LabeledCurve::of(fmt::format("{} {}", to_string(cmp.sector), year), *curve));
        columns.emplace_back(name, std::vector<double>(curve->values().begin(), curve->values().end()));
      }
    }
    PlotStyle style;
    style.width = 640;
    style.height = 420;
    style.title = fmt::format("relative income, {} and {}", first, last);
    const fs::path dir = resolve_out_dir(config);
    write_atomic(dir / "compare_years.csv", export_csv(grid.points(), columns));
    write_atomic(dir / "compare_years.svg", render_curves(curves, style));
    log << "wrote " << curves.size() << " curves to " << dir.string() << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    log << "data error: " << e.what() << '\n';
    return kDataError;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distribution dynamics of regional income panels", "distdyn"};
  app.require_subcommand(1);
  std::map<std::string, std::optional<std::string>> flags;
  std::optional<std::string> config_path;
  bool demo = false;

  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override its values)");
    for (const auto& [key, help] : kKeys) sub->add_option("--" + key, flags[key], help);
  };
  auto* analyze = app.add_subcommand("analyze", "Estimate kernels, ergodic densities and NTP curves per group");
  auto* simulate_cmd = app.add_subcommand("simulate", "Write a synthetic panel CSV");
  auto* compare = app.add_subcommand("compare-years", "Overlay first- and last-year densities per sector");
  add_flags(analyze);
  add_flags(simulate_cmd);
  add_flags(compare);
  simulate_cmd->add_flag("--demo", demo, "Write the bundled two-club demonstration panel");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  RunConfig config;
  try {
    if (config_path) {
      std::ifstream in(*config_path);
      if (!in) throw ConfigError("cannot open config '" + *config_path + "'");
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      if (!doc.is_object()) throw ConfigError("config must be a flat JSON object");
      for (const auto& [key, value] : doc.items()) apply(config, key, value);
    }
    for (const auto& [key, value] : flags)
      if (value) apply(config, key, json(*value));
    if (demo) config.demo = true;
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(config, err);
    if (simulate_cmd->parsed()) return cmd_simulate(config, err);
    return cmd_compare_years(config, err);
  } catch (const std::exception& e) {
    // Output directory problems surface here (unwritable path and the like).
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace distdyn::cli
