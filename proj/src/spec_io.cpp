#include "cms/spec_io.hpp"

#include <fstream>
#include <set>

#include "cms/errors.hpp"

namespace cms {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& message, const std::string& path) {
  throw CmsError(ErrorCode::kSchema, message, path);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(std::string("missing field \"") + key + "\"", path);
  return *it;
}

std::int64_t require_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) schema_error("expected an integer", path);
  return value.get<std::int64_t>();
}

double require_number(const json& value, const std::string& path) {
  if (!value.is_number()) schema_error("expected a number", path);
  return value.get<double>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& path) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) schema_error("unknown field \"" + key + "\"", path + "/" + key);
  }
}

CmsGraph load_finite(const json& doc) {
  reject_unknown(doc, {"kind", "symbols", "edges", "name", "description"}, "");
  const std::int64_t count = require_int(require(doc, "symbols", "/symbols"), "/symbols");
  if (count < 1) throw CmsError(ErrorCode::kValidation, "symbols must be >= 1", "/symbols");
  const json& edges = require(doc, "edges", "/edges");
  if (!edges.is_array()) schema_error("expected an array", "/edges");
  if (edges.empty()) throw CmsError(ErrorCode::kValidation, "edge set is empty", "/edges");
  std::vector<Edge> parsed;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "/edges/" + std::to_string(i);
    const json& e = edges[i];
    if (!e.is_array() || e.size() != 2) schema_error("expected a pair [from,to]", path);
    const std::int64_t a = require_int(e[0], path + "/0");
    const std::int64_t b = require_int(e[1], path + "/1");
    if (a < 1 || a > count) {
      throw CmsError(ErrorCode::kValidation, "edge endpoint out of range 1..symbols", path + "/0");
    }
    if (b < 1 || b > count) {
      throw CmsError(ErrorCode::kValidation, "edge endpoint out of range 1..symbols", path + "/1");
    }
    parsed.push_back({static_cast<Symbol>(a), static_cast<Symbol>(b)});
  }
  std::vector<Symbol> symbols(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < symbols.size(); ++i) symbols[i] = i + 1;
  return CmsGraph::finite(FiniteGraph(std::move(symbols), std::move(parsed)));
}

BigInt parse_multiplicity(const json& value, const std::string& path) {
  if (value.is_number_integer()) return BigInt(value.get<std::int64_t>());
  if (value.is_string()) {
    try {
      return from_decimal(value.get<std::string>());
    } catch (const std::invalid_argument&) {
      schema_error("expected a decimal integer string", path);
    }
  }
  schema_error("expected an integer or decimal string", path);
}

CmsGraph load_loop_system(const json& doc) {
  reject_unknown(doc, {"kind", "loops", "tail", "name", "description"}, "");
  std::vector<LoopSpec> loops;
  if (const auto it = doc.find("loops"); it != doc.end()) {
    if (!it->is_array()) schema_error("expected an array", "/loops");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "/loops/" + std::to_string(i);
      const json& entry = (*it)[i];
      if (!entry.is_object()) schema_error("expected an object", path);
      reject_unknown(entry, {"length", "multiplicity"}, path);
      const std::int64_t length = require_int(require(entry, "length", path), path + "/length");
      if (length < 1 || length > (1LL << 31)) {
        throw CmsError(ErrorCode::kValidation, "loop length must be >= 1", path + "/length");
      }
      loops.push_back({static_cast<std::uint32_t>(length),
                       parse_multiplicity(require(entry, "multiplicity", path),
                                          path + "/multiplicity")});
    }
  }
  LoopTail tail;
  if (const auto it = doc.find("tail"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) schema_error("expected an object or null", "/tail");
    const std::string kind = it->value("kind", std::string("geometric"));
    if (kind == "greedy_critical") {
      reject_unknown(*it, {"kind", "growth"}, "/tail");
      const std::int64_t base = require_int(require(*it, "growth", "/tail"), "/tail/growth");
      if (base < 2 || base > 64) {
        throw CmsError(ErrorCode::kValidation, "greedy tail growth must be in [2, 64]",
                       "/tail/growth");
      }
      tail = GreedyCriticalTail{static_cast<std::uint32_t>(base)};
    } else if (kind == "geometric") {
      reject_unknown(*it, {"kind", "from_length", "coeff", "growth", "power"}, "/tail");
      GeometricTail geo;
      const std::int64_t from =
          require_int(require(*it, "from_length", "/tail"), "/tail/from_length");
      if (from < 1 || from > (1LL << 31)) {
        throw CmsError(ErrorCode::kValidation, "from_length must be >= 1", "/tail/from_length");
      }
      geo.from_length = static_cast<std::uint32_t>(from);
      geo.coeff = require_number(require(*it, "coeff", "/tail"), "/tail/coeff");
      geo.growth = require_number(require(*it, "growth", "/tail"), "/tail/growth");
      if (const auto p = it->find("power"); p != it->end()) {
        const std::int64_t power = require_int(*p, "/tail/power");
        if (power < 0 || power > 16) {
          throw CmsError(ErrorCode::kValidation, "power must be in [0, 16]", "/tail/power");
        }
        geo.power = static_cast<std::uint32_t>(power);
      }
      tail = geo;
    } else {
      schema_error("unknown tail kind \"" + kind + "\"", "/tail/kind");
    }
  }
  return CmsGraph::loop_system(LoopSystem(std::move(loops), std::move(tail)));
}

}  // namespace

CmsGraph load_graph(const json& doc) {
  if (!doc.is_object()) schema_error("graph spec must be a JSON object", "");
  const json& kind = require(doc, "kind", "/kind");
  if (!kind.is_string()) schema_error("expected a string", "/kind");
  const auto k = kind.get<std::string>();
  if (k == "finite") return load_finite(doc);
  if (k == "loop_system") return load_loop_system(doc);
  schema_error("kind must be \"finite\" or \"loop_system\"", "/kind");
}

CmsGraph load_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CmsError(ErrorCode::kSchema, "cannot open graph spec " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw CmsError(ErrorCode::kSchema, std::string("malformed JSON: ") + e.what());
  }
  return load_graph(doc);
}

json finite_graph_to_json(const FiniteGraph& g) {
  json edges = json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.from, e.to});
  return {{"kind", "finite"}, {"symbols", g.size()}, {"edges", edges}};
}

json graph_to_json(const CmsGraph& g) {
  if (g.is_finite()) return finite_graph_to_json(g.finite_graph());
  const LoopSystem& sys = g.loops();
  json loops = json::array();
  for (const LoopSpec& spec : sys.explicit_loops()) {
    json m;
    if (spec.multiplicity <= BigInt(std::numeric_limits<std::int64_t>::max())) {
      m = spec.multiplicity.convert_to<std::int64_t>();
    } else {
      m = spec.multiplicity.str();
    }
    loops.push_back({{"length", spec.length}, {"multiplicity", m}});
  }
  json tail = nullptr;
  if (const auto* geo = std::get_if<GeometricTail>(&sys.tail())) {
    tail = {{"from_length", geo->from_length}, {"coeff", geo->coeff}, {"growth", geo->growth}};
    if (geo->power != 0) tail["power"] = geo->power;
  } else if (const auto* greedy = std::get_if<GreedyCriticalTail>(&sys.tail())) {
    tail = {{"kind", "greedy_critical"}, {"growth", greedy->base}};
  }
  return {{"kind", "loop_system"}, {"loops", loops}, {"tail", tail}};
}

}  // namespace cms
