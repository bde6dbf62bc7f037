#pragma once

#include <cmath>

#include <json.hpp>

namespace cms {

// JSON has no infinities or NaN; they are written as strings.
inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace cms
