#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "cms/counting.hpp"
#include "cms/density.hpp"
#include "cms/infinity.hpp"
#include "cms/katok.hpp"
#include "cms/loop_gf.hpp"
#include "cms/measures.hpp"
#include "cms/spec_io.hpp"
#include "cms/thermo.hpp"

namespace cms::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void invalid(const std::string& message, const std::string& field = {}) {
  throw CmsError(ErrorCode::kValidation, message, field);
}

std::string csv_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

double h_top(const CmsGraph& g) {
  if (g.is_finite()) return log_spectral_radius(g.finite_graph());
  return LoopGF(g.loops()).log_spectral();
}

double delta_inf_exact(const CmsGraph& g) {
  return g.is_finite() ? kNegInf : loop_system_delta_inf(g.loops());
}

const LoopSystem& require_loops(const CmsGraph& g, const std::string& command) {
  if (!g.is_loop_system()) {
    throw CmsError(ErrorCode::kPreconditionFailed, command + " needs a loop-system graph", "/kind");
  }
  return g.loops();
}

MeasureSequence family_sequence(const CmsGraph& g, const Params& p) {
  if (p.family == "constant") {
    MeasurePtr mme = g.is_finite()
                         ? MeasurePtr(std::make_shared<MarkovMeasure>(parry_measure(g.finite_graph())))
                         : loop_mme(g.loops());
    return constant_sequence(mme, p.steps);
  }
  const LoopSystem& sys = require_loops(g, "the " + p.family + " family");
  const MeasureSequence drift = drift_sequence(sys, default_drift_schedule(p.steps));
  if (p.family == "drift") return drift;
  if (p.family == "half-mme-half-drift") return mixture_sequence(loop_mme(sys), drift, 0.5);
  invalid("unknown family \"" + p.family + "\"", "--family");
}

LimitOptions limit_options(const Params& p) {
  LimitOptions options;
  if (p.limit_tolerance) options.limit_tolerance = *p.limit_tolerance;
  if (p.tolerance) options.tolerance = *p.tolerance;
  return options;
}

std::string experiment_csv(const std::vector<double>& trace) {
  std::string out = "step,entropy\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out += std::to_string(i + 1) + "," + csv_double(trace[i]) + "\n";
  return out;
}

struct Result {
  json result;
  std::string csv;
  bool inconclusive = false;
};

Result cmd_entropy(const CmsGraph& g, const Params& p) {
  const EntropyReport r = gurevich_entropy(g, p.vertex, p.n_max.value_or(24));
  std::string csv = "n,rate\n";
  for (const auto& [n, rate] : r.estimate.per_n) csv += std::to_string(n) + "," + csv_double(rate) + "\n";
  return {r.to_json(), csv};
}

Result cmd_delta_inf(const CmsGraph& g, const Params& p) {
  const std::vector<std::uint64_t> Ms = p.M.empty() ? std::vector<std::uint64_t>{16, 32} : p.M;
  const std::vector<Symbol> qs = p.q.empty() ? std::vector<Symbol>{1, 2, 4} : p.q;
  const InfinityReport r = delta_inf(g, Ms, qs, p.n_max.value_or(200), p.jobs);
  return {r.to_json(), r.to_csv()};
}

Result cmd_classify(const CmsGraph& g, const Params& p) {
  const RecurrenceVerdict v = classify(g, p.vertex);
  return {v.to_json(), {}, v.cls == RecurrenceClass::kInconclusive};
}

Result cmd_spr(const CmsGraph& g, const Params& p) {
  SprOptions options;
  if (p.n_max) options.n_max = *p.n_max;
  if (!p.M.empty()) options.Ms = p.M;
  if (!p.q.empty()) options.qs = p.q;
  options.jobs = p.jobs;
  const SprVerdict v = is_spr(g, options);
  json out = v.to_json();
  out["spr"] = v.status == SprStatus::kInconclusive ? json(nullptr) : json(v.status == SprStatus::kSpr);
  return {out, {}, v.status == SprStatus::kInconclusive};
}

Result cmd_b_inf(const CmsGraph& g, const Params& p) {
  const std::vector<Symbol> qs = p.q.empty() ? std::vector<Symbol>{1, 2, 4} : p.q;
  const std::vector<double> lambdas = p.lambda.empty() ? std::vector<double>{0.1, 0.01, 0.001} : p.lambda;
  const BInfCurve r = b_inf_estimate(g, qs, lambdas, default_t_grid());
  std::string csv = "q,t,pressure\n";
  for (std::size_t i = 0; i < r.qs.size(); ++i) {
    for (std::size_t j = 0; j < r.ts.size(); ++j) {
      csv += std::to_string(r.qs[i]) + "," + csv_double(r.ts[j]) + "," + csv_double(r.pressure[i][j]) + "\n";
    }
  }
  return {r.to_json(), csv};
}

Result cmd_h_inf(const CmsGraph& g, const Params& p) {
  const HInfReport r = h_inf_lower_bound(g, default_drift_schedule(p.steps),
                                         p.limit_tolerance.value_or(1e-2));
  std::string csv = "step,cutoff,entropy\n";
  for (std::size_t i = 0; i < r.entropies.size(); ++i) {
    csv += std::to_string(i + 1) + "," + std::to_string(r.schedule[i]) + "," + csv_double(r.entropies[i]) + "\n";
  }
  return {r.to_json(), csv};
}

MarkovMeasure load_measure(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CmsError(ErrorCode::kSchema, "cannot open measure " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw CmsError(ErrorCode::kSchema, std::string("malformed JSON: ") + e.what());
  }
  return MarkovMeasure::from_json(doc);
}

Result cmd_katok(const Params& p) {
  std::optional<MarkovMeasure> m;
  if (!p.measure.empty()) {
    m = load_measure(p.measure);
  } else {
    const CmsGraph g = load_graph_file(p.graph);
    if (!g.is_finite()) {
      throw CmsError(ErrorCode::kPreconditionFailed, "katok needs a finite graph or --measure", "/kind");
    }
    m = parry_measure(g.finite_graph());
  }
  const KatokReport r = katok_estimate(*m, p.delta.value_or(0.1), 1, p.n_max.value_or(20));
  return {r.to_json(), r.profile.to_csv()};
}

Result cmd_verify_main(const CmsGraph& g, const Params& p) {
  const ExperimentReport r = verify_main_inequality(g, family_sequence(g, p), delta_inf_exact(g), limit_options(p));
  json out = r.to_json();
  out["family"] = p.family;
  return {out, experiment_csv(r.trace)};
}

Result cmd_mass_bound(const CmsGraph& g, const Params& p) {
  require_loops(g, "mass-bound");
  const double h = h_top(g);
  const double d = delta_inf_exact(g);
  const double c = p.c.value_or((h + d) / 2);
  const ExperimentReport r = mass_bound_check(g, family_sequence(g, p), c, d, h, limit_options(p));
  json out = r.to_json();
  out["family"] = p.family;
  return {out, experiment_csv(r.trace)};
}

Result cmd_dim_series(const CmsGraph& g, const Params& p) {
  const std::uint64_t m = p.M.empty() ? 16 : p.M.front();
  const Symbol q = p.q.empty() ? 1 : p.q.front();
  const DimensionSeries s = dimension_series(g, m, q, p.t.value_or(0.5), p.l_max);
  std::string csv = "l,term,partial_sum\n";
  for (std::size_t i = 0; i < s.terms.size(); ++i) {
    csv += std::to_string(i + 2) + "," + csv_double(s.terms[i]) + "," + csv_double(s.partial_sums[i]) + "\n";
  }
  return {s.to_json(), csv, s.verdict == SeriesVerdict::kInconclusive};
}

Result cmd_density(const CmsGraph& g, const Params& p) {
  if (!g.is_finite()) {
    throw CmsError(ErrorCode::kPreconditionFailed, "density-demo needs a finite ambient graph", "/kind");
  }
  if (p.components.empty()) invalid("density-demo needs at least one --component", "--component");
  std::vector<std::shared_ptr<const MarkovMeasure>> components;
  for (const fs::path& path : p.components) components.push_back(std::make_shared<MarkovMeasure>(load_measure(path)));
  DensityOptions options;
  options.n = p.n;
  options.rounds = p.M.empty() ? 4 : static_cast<std::size_t>(p.M.front());
  options.depth = p.depth;
  options.seed = p.seed;
  const DensityReport r = density_demo(g.finite_graph(), components, options);
  std::clog << "density-demo: " << r.seconds << " s\n";
  json out = r.to_json();
  out.erase("seconds");  // wall-clock time would break reproducibility
  std::string csv = "h_mu,h_nu,entropy_gap,rho,entropy_floor,max_connector,vertices\n";
  csv += csv_double(r.h_mu) + "," + csv_double(r.h_nu) + "," + csv_double(r.entropy_gap) + "," +
         csv_double(r.rho.value) + "," + csv_double(r.entropy_floor) + "," + std::to_string(r.max_connector) +
         "," + std::to_string(r.vertices) + "\n";
  return {out, csv};
}

Result dispatch(const std::string& command, const Params& p) {
  if (command == "katok") return cmd_katok(p);
  if (p.graph.empty()) invalid(command + " needs --graph", "--graph");
  const CmsGraph g = load_graph_file(p.graph);
  if (command == "entropy") return cmd_entropy(g, p);
  if (command == "delta-inf") return cmd_delta_inf(g, p);
  if (command == "classify") return cmd_classify(g, p);
  if (command == "spr") return cmd_spr(g, p);
  if (command == "b-inf") return cmd_b_inf(g, p);
  if (command == "h-inf") return cmd_h_inf(g, p);
  if (command == "verify-main") return cmd_verify_main(g, p);
  if (command == "mass-bound") return cmd_mass_bound(g, p);
  if (command == "dim-series") return cmd_dim_series(g, p);
  if (command == "density-demo") return cmd_density(g, p);
  invalid("unknown command \"" + command + "\"", "/command");
}

json envelope(const std::string& command, const Params& p) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"parameters", p.to_json()}};
}

// Manifest parsing helpers.
const json& field(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw CmsError(ErrorCode::kSchema, "missing field \"" + key + "\"", path + "/" + key);
  return *it;
}

template <typename T>
T get(const json& value, const std::string& path) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw CmsError(ErrorCode::kSchema, "wrong type", path);
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"entropy", "delta-inf",   "classify",   "spr",
                                              "b-inf",   "h-inf",       "katok",      "verify-main",
                                              "mass-bound", "dim-series", "density-demo", "run"};
  return names;
}

json Params::to_json() const {
  json out = {{"graph", graph.filename().string()},
              {"vertex", vertex},
              {"M", M},
              {"q", q},
              {"depth", depth},
              {"seed", seed},
              {"steps", steps},
              {"family", family},
              {"lambda", lambda},
              {"l_max", l_max},
              {"n", n}};
  out["n_max"] = n_max ? json(*n_max) : json(nullptr);
  out["delta"] = delta ? json(*delta) : json(nullptr);
  out["t"] = t ? json(*t) : json(nullptr);
  out["c"] = c ? json(*c) : json(nullptr);
  out["limit_tolerance"] = limit_tolerance ? json(*limit_tolerance) : json(nullptr);
  out["tolerance"] = tolerance ? json(*tolerance) : json(nullptr);
  json comps = json::array();
  for (const fs::path& c : components) comps.push_back(c.filename().string());
  out["components"] = comps;
  out["measure"] = measure.empty() ? json(nullptr) : json(measure.filename().string());
  return out;
}

Params params_from_json(const json& doc, const std::string& path, const fs::path& base) {
  static const std::set<std::string> allowed{
      "id",    "command", "graph", "n_max",  "vertex", "M",      "q",         "delta",
      "t",     "depth",   "seed",  "strict", "steps",  "family", "lambda",    "c",
      "l_max", "n",       "components", "measure", "limit_tolerance", "tolerance"};
  if (!doc.is_object()) throw CmsError(ErrorCode::kSchema, "expected an object", path);
  for (const auto& [key, _] : doc.items()) {
    if (!allowed.contains(key)) throw CmsError(ErrorCode::kSchema, "unknown field \"" + key + "\"", path + "/" + key);
  }
  auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : base / p; };
  Params p;
  const auto opt = [&](const char* key) -> const json* {
    const auto it = doc.find(key);
    return it == doc.end() ? nullptr : &*it;
  };
  if (auto v = opt("graph")) p.graph = resolve(get<std::string>(*v, path + "/graph"));
  if (auto v = opt("n_max")) p.n_max = get<std::size_t>(*v, path + "/n_max");
  if (auto v = opt("vertex")) p.vertex = get<Symbol>(*v, path + "/vertex");
  if (auto v = opt("M")) p.M = get<std::vector<std::uint64_t>>(*v, path + "/M");
  if (auto v = opt("q")) p.q = get<std::vector<Symbol>>(*v, path + "/q");
  if (auto v = opt("delta")) p.delta = get<double>(*v, path + "/delta");
  if (auto v = opt("t")) p.t = get<double>(*v, path + "/t");
  if (auto v = opt("depth")) p.depth = get<std::size_t>(*v, path + "/depth");
  if (auto v = opt("seed")) p.seed = get<std::uint64_t>(*v, path + "/seed");
  if (auto v = opt("strict")) p.strict = get<bool>(*v, path + "/strict");
  if (auto v = opt("steps")) p.steps = get<std::size_t>(*v, path + "/steps");
  if (auto v = opt("family")) p.family = get<std::string>(*v, path + "/family");
  if (auto v = opt("lambda")) p.lambda = get<std::vector<double>>(*v, path + "/lambda");
  if (auto v = opt("c")) p.c = get<double>(*v, path + "/c");
  if (auto v = opt("l_max")) p.l_max = get<std::size_t>(*v, path + "/l_max");
  if (auto v = opt("n")) p.n = get<std::size_t>(*v, path + "/n");
  if (auto v = opt("components")) {
    for (const std::string& c : get<std::vector<std::string>>(*v, path + "/components")) p.components.push_back(resolve(c));
  }
  if (auto v = opt("measure")) p.measure = resolve(get<std::string>(*v, path + "/measure"));
  if (auto v = opt("limit_tolerance")) p.limit_tolerance = get<double>(*v, path + "/limit_tolerance");
  if (auto v = opt("tolerance")) p.tolerance = get<double>(*v, path + "/tolerance");
  return p;
}

int exit_code_for(ErrorCode code) {
  return code == ErrorCode::kSchema || code == ErrorCode::kValidation ? kExitValidation : kExitFailure;
}

json error_json(const CmsError& e) {
  json out = {{"code", std::string(error_code_name(e.code()))}, {"message", e.what()}};
  out["field"] = e.field_path().empty() ? json(nullptr) : json(e.field_path());
  return out;
}

Outcome run_command(const std::string& command, const Params& params) {
  Outcome outcome;
  outcome.report = envelope(command, params);
  try {
    Result r = dispatch(command, params);
    outcome.report["result"] = std::move(r.result);
    outcome.report["inconclusive"] = r.inconclusive;
    outcome.csv = std::move(r.csv);
    if (r.inconclusive && params.strict) outcome.exit_code = kExitInconclusive;
  } catch (const CmsError& e) {
    outcome.report["error"] = error_json(e);
    outcome.exit_code = exit_code_for(e.code());
  } catch (const std::exception& e) {
    outcome.report["error"] = {{"code", "InternalError"}, {"message", e.what()}, {"field", nullptr}};
    outcome.exit_code = kExitFailure;
  }
  return outcome;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CmsError(ErrorCode::kValidation, "cannot write " + tmp.string(), "--out");
    out << content;
    if (!out) throw CmsError(ErrorCode::kValidation, "cannot write " + tmp.string(), "--out");
  }
  fs::rename(tmp, path);
}

void write_outcome(const Outcome& outcome, const fs::path& out, const std::string& stem) {
  fs::create_directories(out);
  write_atomic(out / (stem + ".json"), outcome.report.dump(2) + "\n");
  if (!outcome.csv.empty()) write_atomic(out / (stem + ".csv"), outcome.csv);
}

Outcome run_manifest(const fs::path& manifest, std::optional<fs::path> out, unsigned jobs) {
  Outcome summary;
  summary.report = {{"schema_version", kSchemaVersion}, {"command", "run"}, {"manifest", manifest.filename().string()}};
  try {
    std::ifstream in(manifest);
    if (!in) throw CmsError(ErrorCode::kSchema, "cannot open manifest " + manifest.string());
    json doc;
    try {
      in >> doc;
    } catch (const json::parse_error& e) {
      throw CmsError(ErrorCode::kSchema, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CmsError(ErrorCode::kSchema, "manifest must be an object", "");
    for (const auto& [key, _] : doc.items()) {
      if (key != "version" && key != "out" && key != "seed" && key != "tolerances" && key != "commands") {
        throw CmsError(ErrorCode::kSchema, "unknown field \"" + key + "\"", "/" + key);
      }
    }
    if (get<int>(field(doc, "version", ""), "/version") != kSchemaVersion) {
      throw CmsError(ErrorCode::kValidation, "unsupported manifest version", "/version");
    }
    const fs::path base = manifest.parent_path();
    if (!out) {
      if (!doc.contains("out")) throw CmsError(ErrorCode::kValidation, "no output directory", "/out");
      const fs::path p = get<std::string>(doc["out"], "/out");
      out = p.is_absolute() ? p : base / p;
    }
    std::optional<std::uint64_t> seed;
    if (doc.contains("seed")) seed = get<std::uint64_t>(doc["seed"], "/seed");
    std::optional<double> limit_tol;
    std::optional<double> slack_tol;
    if (doc.contains("tolerances")) {
      const json& t = doc["tolerances"];
      if (!t.is_object()) throw CmsError(ErrorCode::kSchema, "expected an object", "/tolerances");
      for (const auto& [key, value] : t.items()) {
        if (key == "limit") {
          limit_tol = get<double>(value, "/tolerances/limit");
        } else if (key == "slack") {
          slack_tol = get<double>(value, "/tolerances/slack");
        } else {
          throw CmsError(ErrorCode::kSchema, "unknown field \"" + key + "\"", "/tolerances/" + key);
        }
      }
    }
    const json& commands = field(doc, "commands", "");
    if (!commands.is_array()) throw CmsError(ErrorCode::kSchema, "expected an array", "/commands");

    struct Entry {
      std::string id;
      std::string command;
      Params params;
    };
    std::vector<Entry> entries;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < commands.size(); ++i) {
      const std::string path = "/commands/" + std::to_string(i);
      Entry e;
      e.params = params_from_json(commands[i], path, base);
      e.command = get<std::string>(field(commands[i], "command", path), path + "/command");
      const auto& names = command_names();
      if (e.command == "run" || std::find(names.begin(), names.end(), e.command) == names.end()) {
        throw CmsError(ErrorCode::kValidation, "unknown command \"" + e.command + "\"", path + "/command");
      }
      e.id = commands[i].contains("id") ? get<std::string>(commands[i]["id"], path + "/id")
                                        : std::to_string(i) + "-" + e.command;
      if (e.id.empty() || e.id.find_first_of("/\\") != std::string::npos || !ids.insert(e.id).second) {
        throw CmsError(ErrorCode::kValidation, "ids must be unique plain file names", path + "/id");
      }
      if (seed && !commands[i].contains("seed")) e.params.seed = *seed;
      if (limit_tol && !e.params.limit_tolerance) e.params.limit_tolerance = limit_tol;
      if (slack_tol && !e.params.tolerance) e.params.tolerance = slack_tol;
      entries.push_back(std::move(e));
    }

    fs::create_directories(*out);
    std::vector<int> codes(entries.size(), 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < entries.size(); i = next++) {
        const Outcome o = run_command(entries[i].command, entries[i].params);
        codes[i] = o.exit_code;
        write_outcome(o, *out, entries[i].id);
      }
    };
    std::vector<std::thread> pool;
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(entries.size())));
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    json list = json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      list.push_back({{"id", entries[i].id}, {"command", entries[i].command}, {"exit_code", codes[i]}});
      if (summary.exit_code == kExitOk) summary.exit_code = codes[i];
    }
    summary.report["entries"] = list;
    write_atomic(*out / "manifest.json", summary.report.dump(2) + "\n");
  } catch (const CmsError& e) {
    summary.report["error"] = error_json(e);
    summary.exit_code = exit_code_for(e.code());
  }
  return summary;
}

}  // namespace cms::cli
