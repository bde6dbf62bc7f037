#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "commands.hpp"

namespace cms::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kSource = CMS_SOURCE_DIR;

fs::path data(const std::string& name) { return kSource / "data" / name; }

json schema() {
  std::ifstream in(kSource / "schema" / "cms-output.v1.json");
  return json::parse(in);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cms_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

Params with_graph(const std::string& name) {
  Params p;
  p.graph = data(name);
  return p;
}

// Cheap parameters for every subcommand.
std::vector<std::pair<std::string, Params>> quick_runs() {
  std::vector<std::pair<std::string, Params>> runs;
  Params p = with_graph("full2.json");
  runs.emplace_back("entropy", p);
  p = with_graph("golden.json");
  p.n_max = 40;
  runs.emplace_back("delta-inf", p);
  runs.emplace_back("classify", with_graph("renewal.json"));
  runs.emplace_back("spr", with_graph("golden.json"));
  runs.emplace_back("b-inf", with_graph("renewal.json"));
  p = with_graph("doubling.json");
  p.steps = 8;
  runs.emplace_back("h-inf", p);
  p = with_graph("full2.json");
  p.n_max = 8;
  runs.emplace_back("katok", p);
  runs.emplace_back("verify-main", with_graph("renewal.json"));
  runs.emplace_back("mass-bound", with_graph("renewal.json"));
  runs.emplace_back("dim-series", with_graph("renewal.json"));
  p = with_graph("full3.json");
  p.components = {data("coin12.json"), data("fixed3.json")};
  p.n = 8;
  p.M = {2};
  runs.emplace_back("density-demo", p);
  return runs;
}

std::vector<std::string> csv_header(const std::string& csv) {
  std::vector<std::string> cols;
  std::istringstream line(csv.substr(0, csv.find('\n')));
  for (std::string col; std::getline(line, col, ',');) cols.push_back(col);
  return cols;
}

TEST(Cli, ReportsMatchSchema) {
  const json s = schema();
  ASSERT_EQ(s["schema_version"], kSchemaVersion);
  for (const auto& [command, params] : quick_runs()) {
    const Outcome o = run_command(command, params);
    ASSERT_EQ(o.exit_code, kExitOk) << command << o.report.dump();
    for (const auto& key : s["envelope"]["required"]) EXPECT_TRUE(o.report.contains(key)) << command << key;
    for (const auto& key : s["envelope"]["success"]) EXPECT_TRUE(o.report.contains(key)) << command << key;
    for (const auto& key : s["envelope"]["parameters"]) {
      EXPECT_TRUE(o.report["parameters"].contains(key)) << command << key;
    }
    const json& spec = s["commands"][command];
    std::set<std::string> expected;
    for (const auto& key : spec["result"]) expected.insert(key.get<std::string>());
    std::set<std::string> actual;
    for (const auto& [key, _] : o.report["result"].items()) actual.insert(key);
    EXPECT_EQ(actual, expected) << command;
    if (spec.contains("csv") && command != "delta-inf") {
      EXPECT_EQ(csv_header(o.csv), spec["csv"].get<std::vector<std::string>>()) << command;
    } else if (command == "delta-inf") {
      EXPECT_EQ(csv_header(o.csv), (std::vector<std::string>{"M", "q=1", "q=2", "q=4"}));
    } else {
      EXPECT_TRUE(o.csv.empty()) << command;
    }
  }
}

TEST(Cli, Examples) {
  Params p = with_graph("full2.json");
  p.n_max = 24;
  const Outcome entropy = run_command("entropy", p);
  EXPECT_NEAR(entropy.report["result"]["h_top"].get<double>(), std::log(2.0), 1e-3);

  const Outcome spr = run_command("spr", with_graph("renewal.json"));
  EXPECT_EQ(spr.report["result"]["spr"], true);
  EXPECT_NEAR(spr.report["result"]["h_top"].get<double>(), std::log(2.0), 1e-9);
  EXPECT_NEAR(spr.report["result"]["exact_big_delta"].get<double>(), 0.0, 1e-9);

  p = with_graph("renewal.json");
  p.family = "half-mme-half-drift";
  p.steps = 20;
  const Outcome main = run_command("verify-main", p);
  EXPECT_EQ(main.report["result"]["pass"], true);
  EXPECT_LE(std::abs(main.report["result"]["slack"].get<double>()), 0.05);
}

TEST(Cli, Deterministic) {
  for (const auto& [command, params] : quick_runs()) {
    const Outcome a = run_command(command, params);
    const Outcome b = run_command(command, params);
    EXPECT_EQ(std::hash<std::string>{}(a.report.dump()), std::hash<std::string>{}(b.report.dump())) << command;
    EXPECT_EQ(a.csv, b.csv) << command;
  }
  // Thread count does not change results.
  Params p = with_graph("doubling.json");
  p.n_max = 60;
  p.M = {4, 8};
  p.q = {1, 2, 3};
  p.jobs = 1;
  const Outcome serial = run_command("delta-inf", p);
  p.jobs = 4;
  const Outcome parallel = run_command("delta-inf", p);
  EXPECT_EQ(serial.report["result"].dump(), parallel.report["result"].dump());
  EXPECT_EQ(serial.csv, parallel.csv);
}

TEST(Cli, ErrorsCarryCodesAndFields) {
  const fs::path dir = scratch("errors");
  fs::create_directories(dir);
  std::ofstream(dir / "bad_edge.json") << R"({"kind":"finite","symbols":2,"edges":[[1,3]]})";
  std::ofstream(dir / "bad_field.json") << R"({"kind":"finite","symbols":2,"edges":[[1,1]],"colour":1})";

  Params p;
  p.graph = dir / "bad_edge.json";
  Outcome o = run_command("entropy", p);
  EXPECT_EQ(o.exit_code, kExitValidation);
  EXPECT_EQ(o.report["error"]["code"], "ValidationError");
  EXPECT_EQ(o.report["error"]["field"], "/edges/0/1");

  p.graph = dir / "bad_field.json";
  o = run_command("entropy", p);
  EXPECT_EQ(o.exit_code, kExitValidation);
  EXPECT_EQ(o.report["error"]["code"], "SchemaError");
  EXPECT_EQ(o.report["error"]["field"], "/colour");

  o = run_command("entropy", Params{});
  EXPECT_EQ(o.exit_code, kExitValidation);
  EXPECT_EQ(o.report["error"]["field"], "--graph");

  p = with_graph("renewal.json");
  p.family = "sideways";
  o = run_command("verify-main", p);
  EXPECT_EQ(o.exit_code, kExitValidation);
  EXPECT_EQ(o.report["error"]["field"], "--family");

  // Module failures other than validation exit 1.
  o = run_command("mass-bound", with_graph("golden.json"));
  EXPECT_EQ(o.exit_code, kExitFailure);
  EXPECT_EQ(o.report["error"]["code"], "PreconditionFailed");
  o = run_command("h-inf", with_graph("golden.json"));
  EXPECT_EQ(o.exit_code, kExitFailure);
  EXPECT_EQ(o.report["error"]["code"], "NotDrifting");
}

TEST(Cli, StrictInconclusive) {
  // Tail terms of the renewal series at cap 16 still oscillate above 1e-6 at
  // length 50.
  Params p = with_graph("renewal.json");
  p.l_max = 50;
  Outcome o = run_command("dim-series", p);
  ASSERT_EQ(o.report["result"]["verdict"], "Inconclusive");
  EXPECT_EQ(o.exit_code, kExitOk);
  p.strict = true;
  o = run_command("dim-series", p);
  EXPECT_EQ(o.exit_code, kExitInconclusive);
  // Decided verdicts are unaffected by --strict.
  p = with_graph("greedy.json");
  p.strict = true;
  o = run_command("classify", p);
  EXPECT_EQ(o.report["result"]["class"], "NullRecurrent");
  EXPECT_EQ(o.exit_code, kExitOk);
}

TEST(Cli, ManifestRunsAndReproduces) {
  const fs::path dir = scratch("manifest");
  fs::create_directories(dir);
  json manifest = {{"version", 1},
                   {"seed", 3},
                   {"tolerances", {{"limit", 0.01}}},
                   {"commands",
                    {{{"id", "e"}, {"command", "entropy"}, {"graph", data("golden.json").string()}, {"n_max", 30}},
                     {{"id", "k"}, {"command", "katok"}, {"graph", data("full2.json").string()}, {"n_max", 10}},
                     {{"id", "d"},
                      {"command", "density-demo"},
                      {"graph", data("full3.json").string()},
                      {"components", {data("coin12.json").string(), data("fixed3.json").string()}},
                      {"n", 16},
                      {"M", {2}}},
                     {{"id", "bad"}, {"command", "classify"}, {"graph", "missing.json"}}}}};
  std::ofstream(dir / "m.json") << manifest.dump(2);

  const Outcome first = run_manifest(dir / "m.json", dir / "out1", 3);
  const Outcome second = run_manifest(dir / "m.json", dir / "out2", 1);
  // The missing graph fails its own entry only.
  EXPECT_EQ(first.exit_code, kExitValidation);
  ASSERT_EQ(first.report["entries"].size(), 4u);
  EXPECT_EQ(first.report["entries"][0]["exit_code"], 0);
  EXPECT_EQ(first.report["entries"][3]["exit_code"], kExitValidation);
  for (const char* file : {"e.json", "e.csv", "k.json", "k.csv", "d.json", "d.csv", "bad.json", "manifest.json"}) {
    ASSERT_TRUE(fs::exists(dir / "out1" / file)) << file;
    EXPECT_EQ(slurp(dir / "out1" / file), slurp(dir / "out2" / file)) << file;
  }
  const json d = json::parse(slurp(dir / "out1" / "d.json"));
  EXPECT_EQ(d["parameters"]["seed"], 3);
  EXPECT_EQ(d["parameters"]["limit_tolerance"], 0.01);
  for (const auto& entry : fs::directory_iterator(dir / "out1")) {
    EXPECT_NE(entry.path().extension(), ".tmp");
  }
}

TEST(Cli, ManifestErrors) {
  const fs::path dir = scratch("manifest_errors");
  fs::create_directories(dir);
  const auto run = [&](const json& doc) {
    std::ofstream(dir / "m.json") << doc.dump();
    return run_manifest(dir / "m.json", dir / "out", 1);
  };
  Outcome o = run({{"version", 1}, {"commands", {{{"command", "entropy"}, {"bogus", 1}}}}});
  EXPECT_EQ(o.exit_code, kExitValidation);
  EXPECT_EQ(o.report["error"]["field"], "/commands/0/bogus");
  o = run({{"version", 1}, {"commands", {{{"command", "teleport"}}}}});
  EXPECT_EQ(o.report["error"]["field"], "/commands/0/command");
  o = run({{"version", 2}, {"commands", json::array()}});
  EXPECT_EQ(o.report["error"]["field"], "/version");
  o = run({{"version", 1}, {"commands", {{{"command", "entropy"}, {"n_max", "many"}}}}});
  EXPECT_EQ(o.report["error"]["code"], "SchemaError");
  EXPECT_EQ(o.report["error"]["field"], "/commands/0/n_max");
  o = run({{"version", 1},
           {"commands", {{{"id", "x"}, {"command", "entropy"}}, {{"id", "x"}, {"command", "classify"}}}}});
  EXPECT_EQ(o.report["error"]["field"], "/commands/1/id");
}

}  // namespace
}  // namespace cms::cli
