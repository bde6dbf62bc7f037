#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cms/errors.hpp"
#include "cms/graph.hpp"

namespace cms::cli {

inline constexpr int kSchemaVersion = 1;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInconclusive = 3;

const std::vector<std::string>& command_names();

// Parameters shared by every subcommand; unset optionals take per-command
// defaults.
struct Params {
  std::filesystem::path graph;
  std::optional<std::size_t> n_max;
  Symbol vertex = 1;
  std::vector<std::uint64_t> M;
  std::vector<Symbol> q;
  std::optional<double> delta;
  std::optional<double> t;
  std::size_t depth = 6;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  bool strict = false;
  std::size_t steps = 20;
  std::string family = "half-mme-half-drift";
  std::vector<double> lambda;
  std::optional<double> c;
  std::size_t l_max = 60;
  std::size_t n = 64;
  std::vector<std::filesystem::path> components;
  std::filesystem::path measure;
  std::optional<double> limit_tolerance;
  std::optional<double> tolerance;

  nlohmann::json to_json() const;
};

// Reads manifest-style parameters; relative paths resolve against `base`.
Params params_from_json(const nlohmann::json& doc, const std::string& path,
                        const std::filesystem::path& base);

struct Outcome {
  int exit_code = kExitOk;
  nlohmann::json report;  // envelope with command, parameters and result
  std::string csv;        // empty when the command has no table
};

int exit_code_for(ErrorCode code);
nlohmann::json error_json(const CmsError& e);

// Runs one subcommand; module errors become an error report and exit code.
Outcome run_command(const std::string& command, const Params& params);

// Writes `content` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// Writes <out>/<stem>.json and, when present, <out>/<stem>.csv.
void write_outcome(const Outcome& outcome, const std::filesystem::path& out, const std::string& stem);

// Runs every manifest entry, at most `jobs` at a time, writing each entry's
// outputs under the output directory and a summary manifest.json.
Outcome run_manifest(const std::filesystem::path& manifest, std::optional<std::filesystem::path> out,
                     unsigned jobs);

}  // namespace cms::cli
