#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "cms/graph.hpp"

namespace cms {

// Graph spec documents. Top-level "kind" is "finite" or "loop_system":
//   {"kind":"finite","symbols":S,"edges":[[a,b],...]}
//   {"kind":"loop_system","loops":[{"length":l,"multiplicity":m},...],
//    "tail": null | {"from_length":L0,"coeff":c,"growth":g[,"power":p]}
//                 | {"kind":"greedy_critical","growth":b}}
// Multiplicities may be JSON integers or decimal strings.
CmsGraph load_graph(const nlohmann::json& doc);
CmsGraph load_graph_file(const std::filesystem::path& path);

nlohmann::json graph_to_json(const CmsGraph& g);
nlohmann::json finite_graph_to_json(const FiniteGraph& g);

}  // namespace cms
