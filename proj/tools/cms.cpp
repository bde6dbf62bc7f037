#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using cms::cli::Params;

void add_flags(CLI::App& sub, Params& p, std::string& manifest, std::string& out) {
  sub.add_option("--graph", p.graph, "graph spec JSON");
  sub.add_option("--n-max", p.n_max, "largest path length");
  sub.add_option("--vertex", p.vertex, "base vertex");
  sub.add_option("--M", p.M, "visit caps, or rounds for density-demo")->delimiter(',');
  sub.add_option("--q", p.q, "symbol cutoffs")->delimiter(',');
  sub.add_option("--delta", p.delta, "uncovered mass for katok");
  sub.add_option("--t", p.t, "dimension series exponent");
  sub.add_option("--depth", p.depth, "rho cylinder depth");
  sub.add_option("--seed", p.seed, "sampling seed");
  sub.add_option("--jobs", p.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub.add_flag("--strict", p.strict, "exit 3 on an Inconclusive verdict");
  sub.add_option("--out", out, "output directory");
  sub.add_option("--steps", p.steps, "length of measure sequences");
  sub.add_option("--family", p.family, "constant, drift or half-mme-half-drift");
  sub.add_option("--lambda", p.lambda, "entropy constraints for b-inf")->delimiter(',');
  sub.add_option("--c", p.c, "entropy floor for mass-bound");
  sub.add_option("--l-max", p.l_max, "last series length for dim-series");
  sub.add_option("--n", p.n, "block length for density-demo");
  sub.add_option("--component", p.components, "ergodic component measure JSON");
  sub.add_option("--measure", p.measure, "Markov measure JSON for katok");
  sub.add_option("--limit-tolerance", p.limit_tolerance, "cylinder limit tolerance");
  sub.add_option("--tolerance", p.tolerance, "slack tolerance");
  if (sub.get_name() == "run") sub.add_option("manifest", manifest, "manifest JSON")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy quantities of countable Markov shifts"};
  app.require_subcommand(1);
  Params params;
  std::string manifest;
  std::string out;
  for (const std::string& name : cms::cli::command_names()) {
    add_flags(*app.add_subcommand(name), params, manifest, out);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const cms::CmsError error(cms::ErrorCode::kValidation, e.what(), "argv");
    std::cout << nlohmann::json{{"error", cms::cli::error_json(error)}}.dump(2) << "\n";
    return cms::cli::kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  cms::cli::Outcome outcome;
  if (command == "run") {
    outcome = cms::cli::run_manifest(manifest, out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out),
                                     params.jobs);
  } else {
    outcome = cms::cli::run_command(command, params);
    if (!out.empty()) {
      try {
        cms::cli::write_outcome(outcome, out, command);
      } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return cms::cli::kExitFailure;
      }
    }
  }
  std::cout << outcome.report.dump(2) << "\n";
  return outcome.exit_code;
}
