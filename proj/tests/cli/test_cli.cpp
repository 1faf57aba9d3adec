#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "distdyn_cli/cli.hpp"

namespace fs = std::filesystem;
using distdyn::cli::run_cli;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "distdyn_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const fs::path& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// The demo panel is shared by several cases; write it once.
const fs::path& demo_csv() {
  static const fs::path path = [] {
    const fs::path p = scratch("demo") / "demo_panel.csv";
    REQUIRE(run({"simulate", "--demo", "--output", p.string()}).code == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("ar1_log 400 x 15 writes 6000 rows, deterministically") {
    auto dir = scratch("simulate");
    auto a = dir / "a.csv", b = dir / "b.csv";
    REQUIRE(run({"simulate", "--kind", "ar1_log", "--units", "400", "--years", "15", "--seed", "5", "--output", a.string()}).code == 0);
    REQUIRE(run({"simulate", "--kind", "ar1_log", "--units", "400", "--years", "15", "--seed", "5", "--output", b.string()}).code == 0);
    const auto text = slurp(a);
    CHECK(line_count(text) == 6001);
    CHECK(text.starts_with("unit_id,sector,region,year,income\n"));
    CHECK(text == slurp(b));
    REQUIRE(run({"simulate", "--seed", "6", "--output", b.string()}).code == 0);
    CHECK(text != slurp(b));
  }

  TEST_CASE("out-of-range specs exit 2") {
    auto dir = scratch("simulate_bad");
    CHECK(run({"simulate", "--rho", "1", "--output", (dir / "x.csv").string()}).code == 2);
    CHECK(run({"simulate", "--sigma", "-0.1", "--output", (dir / "x.csv").string()}).code == 2);
    CHECK(run({"simulate", "--kind", "garch", "--output", (dir / "x.csv").string()}).code == 2);
    CHECK(run({"simulate", "--units", "many", "--output", (dir / "x.csv").string()}).code == 2);
    CHECK_FALSE(fs::exists(dir / "x.csv"));
  }

  TEST_CASE("output defaults to panel.csv in the output directory") {
    auto dir = scratch("simulate_default");
    REQUIRE(run({"simulate", "--units", "3", "--years", "2", "--out-dir", dir.string()}).code == 0);
    CHECK(line_count(slurp(dir / "panel.csv")) == 7);
  }
}

TEST_SUITE("analyze") {
  TEST_CASE("demo pooled report lists two modes; reruns reproduce the manifest") {
    auto a = scratch("analyze_a"), b = scratch("analyze_b");
    REQUIRE(run({"analyze", "--input", demo_csv().string(), "--groups", "pooled", "--out-dir", a.string()}).code == 0);
    REQUIRE(run({"analyze", "--input", demo_csv().string(), "--groups", "pooled", "--out-dir", b.string()}).code == 0);
    auto report = json::parse(slurp(a / "pooled" / "report.json"));
    CHECK(report["modes"].size() == 2);
    CHECK(report["ntp_crossings"].size() >= 1);
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

    auto manifest = json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["command"] == "analyze");
    REQUIRE(manifest["groups"].size() == 1);
    const auto& group = manifest["groups"][0];
    CHECK(group["status"] == "ok");
    std::set<std::string> listed;
    for (const auto& f : group["files"]) {
      const std::string path = f["path"];
      listed.insert(path);
      const auto bytes = slurp(a / path);
      CHECK(f["bytes"] == bytes.size());
      CHECK(f["sha256"] == distdyn::cli::sha256_hex(bytes));
      CHECK(f["partial"] == false);
    }
    CHECK(listed == std::set<std::string>{"pooled/transition_pairs.csv", "pooled/kernel.csv", "pooled/contour.svg",
                                          "pooled/surface.svg", "pooled/ntp.csv", "pooled/ntp.svg",
                                          "pooled/ergodic.csv", "pooled/ergodic.svg", "pooled/report.json"});
    // No orphans: everything on disk besides the manifest is listed.
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), a).generic_string();
      if (rel != "manifest.json") CHECK(listed.count(rel) == 1);
    }
  }

  TEST_CASE("thread count does not change any output") {
    auto a = scratch("threads_1"), b = scratch("threads_3");
    REQUIRE(run({"analyze", "--input", demo_csv().string(), "--groups", "rural", "--threads", "1", "--out-dir", a.string()}).code == 0);
    REQUIRE(run({"analyze", "--input", demo_csv().string(), "--groups", "rural", "--threads", "3", "--out-dir", b.string()}).code == 0);
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  }

  TEST_CASE("data errors exit 3 and name the row") {
    auto dir = scratch("analyze_bad");
    spill(dir / "empty.csv", "");
    CHECK(run({"analyze", "--input", (dir / "empty.csv").string(), "--out-dir", dir.string()}).code == 3);
    spill(dir / "header_only.csv", "unit_id,sector,region,year,income\n");
    CHECK(run({"analyze", "--input", (dir / "header_only.csv").string(), "--out-dir", dir.string()}).code == 3);
    spill(dir / "bad.csv", "unit_id,sector,region,year,income\na,urban,east,2000,5\na,urban,east,2001,-2\n");
    auto r = run({"analyze", "--input", (dir / "bad.csv").string(), "--out-dir", dir.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("line 3") != std::string::npos);
    spill(dir / "short.csv", "unit_id,sector,region,year,income\na,urban,east\n");
    r = run({"analyze", "--input", (dir / "short.csv").string(), "--out-dir", dir.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("line 2") != std::string::npos);
  }

  TEST_CASE("configuration errors exit 2") {
    auto dir = scratch("analyze_config");
    CHECK(run({"analyze", "--input", (dir / "missing.csv").string(), "--out-dir", dir.string()}).code == 2);
    CHECK(run({"analyze", "--input", demo_csv().string(), "--groups", "atlantis", "--out-dir", dir.string()}).code == 2);
    CHECK(run({"analyze", "--input", demo_csv().string(), "--tau", "0", "--out-dir", dir.string()}).code == 2);
    CHECK(run({"analyze", "--input", demo_csv().string(), "--scope", "galactic", "--out-dir", dir.string()}).code == 2);
    CHECK(run({"analyze", "--input", demo_csv().string(), "--no-such-flag", "1"}).code == 2);
    spill(dir / "cfg.json", R"({"input": "x.csv", "colour": "blue"})");
    CHECK(run({"analyze", "--config", (dir / "cfg.json").string()}).code == 2);
    spill(dir / "broken.json", "{ not json");
    CHECK(run({"analyze", "--config", (dir / "broken.json").string()}).code == 2);
    CHECK(run({"analyze"}).code == 2);
    CHECK(run({}).code == 2);
  }

  TEST_CASE("config file values apply and flags override them") {
    auto dir = scratch("analyze_cfg");
    auto out_cfg = dir / "from_config", out_flag = dir / "from_flag";
    json cfg = {{"input", demo_csv().string()}, {"groups", {"urban"}}, {"out-dir", out_cfg.string()}, {"grid-count", 64}};
    spill(dir / "cfg.json", cfg.dump());
    REQUIRE(run({"analyze", "--config", (dir / "cfg.json").string()}).code == 0);
    CHECK(fs::exists(out_cfg / "urban" / "report.json"));
    CHECK(line_count(slurp(out_cfg / "urban" / "ergodic.csv")) == 65);

    REQUIRE(run({"analyze", "--config", (dir / "cfg.json").string(), "--out-dir", out_flag.string(), "--grid-count", "80"}).code == 0);
    CHECK(line_count(slurp(out_flag / "urban" / "ergodic.csv")) == 81);
  }

  TEST_CASE("the environment supplies the default output directory") {
    auto dir = scratch("analyze_env");
    ::setenv(distdyn::cli::kOutDirEnv, dir.string().c_str(), 1);
    auto r = run({"analyze", "--input", demo_csv().string(), "--groups", "pooled", "--grid-count", "48"});
    ::unsetenv(distdyn::cli::kOutDirEnv);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "manifest.json"));
  }

  TEST_CASE("non-convergence exits 4 and keeps flagged partial outputs") {
    auto dir = scratch("analyze_nc");
    auto r = run({"analyze", "--input", demo_csv().string(), "--groups", "pooled", "--max-iter", "1", "--out-dir", dir.string()});
    CHECK(r.code == 4);
    auto manifest = json::parse(slurp(dir / "manifest.json"));
    const auto& group = manifest["groups"][0];
    CHECK(group["status"] == "not_converged");
    std::size_t partial = 0;
    for (const auto& f : group["files"]) {
      CHECK(fs::exists(dir / f["path"].get<std::string>()));
      partial += f["partial"].get<bool>();
    }
    CHECK(partial == 3);  // ergodic.csv, ergodic.svg, report.json
    CHECK(fs::exists(dir / "pooled" / "kernel.csv"));
  }

  TEST_CASE("a failing group is recorded without stopping the others") {
    auto dir = scratch("analyze_partial");
    // Demo regions cover east, central and west only; the "other" selection is empty.
    auto r = run({"analyze", "--input", demo_csv().string(), "--groups", "urban,other", "--grid-count", "64",
                  "--out-dir", dir.string()});
    CHECK(r.code == 0);
    auto manifest = json::parse(slurp(dir / "manifest.json"));
    REQUIRE(manifest["groups"].size() == 2);
    CHECK(manifest["groups"][0]["status"] == "ok");
    CHECK(manifest["groups"][1]["status"] == "failed");
    CHECK(manifest["groups"][1]["message"].get<std::string>().find("EmptySelection") != std::string::npos);
    CHECK(manifest["groups"][1]["files"].empty());

    // Every group failing is a data error.
    CHECK(run({"analyze", "--input", demo_csv().string(), "--groups", "other", "--out-dir", dir.string()}).code == 3);
  }

  TEST_CASE("interrupted-write safety: no temporary files remain") {
    auto dir = scratch("analyze_tmp");
    REQUIRE(run({"analyze", "--input", demo_csv().string(), "--groups", "pooled", "--grid-count", "48", "--out-dir", dir.string()}).code == 0);
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);
  }
}

TEST_SUITE("compare-years") {
  TEST_CASE("demo 1999 and 2013 gives four curves") {
    auto dir = scratch("compare");
    REQUIRE(run({"compare-years", "--input", demo_csv().string(), "--first-year", "1999", "--last-year", "2013",
                 "--out-dir", dir.string()}).code == 0);
    const auto csv = slurp(dir / "compare_years.csv");
    CHECK(csv.starts_with("x,urban_1999,urban_2013,rural_1999,rural_2013\n"));
    CHECK(line_count(csv) == 257);
    const auto svg = slurp(dir / "compare_years.svg");
    std::size_t entries = 0;
    for (auto pos = svg.find("legend-entry"); pos != std::string::npos; pos = svg.find("legend-entry", pos + 1)) ++entries;
    CHECK(entries == 4);

    // CSV round trip: every field parses back to a finite number.
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string cell;
      int cells = 0;
      while (std::getline(ls, cell, ',')) {
        // strtod rather than stod: far-tail density values can be subnormal.
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        CHECK(end == cell.c_str() + cell.size());
        CHECK(std::isfinite(v));
        ++cells;
      }
      CHECK(cells == 5);
    }
  }

  TEST_CASE("absent year or single-year panel exits 3") {
    auto dir = scratch("compare_bad");
    CHECK(run({"compare-years", "--input", demo_csv().string(), "--first-year", "1990", "--out-dir", dir.string()}).code == 3);
    spill(dir / "one.csv", "unit_id,sector,region,year,income\na,urban,east,2000,5\nb,rural,west,2000,3\n");
    CHECK(run({"compare-years", "--input", (dir / "one.csv").string(), "--out-dir", dir.string()}).code == 3);
  }
}
