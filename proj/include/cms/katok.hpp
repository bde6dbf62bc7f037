#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cms/counting.hpp"
#include "cms/measures.hpp"

namespace cms {

// Masses of the positive-mass cylinders [x_0 ... x_{n-1}] are enumerated up
// to this count.
inline constexpr std::size_t kCylinderCap = std::size_t{1} << 20;

// Masses of all positive-mass n-cylinders, in canonical word order.
std::vector<double> cylinder_masses(const MarkovMeasure& m, std::size_t n);

// Fewest n-cylinders covering mass strictly above 1 - delta. n-cylinders are
// the Bowen balls B_n(x, 1/2) (cylinders of length n), so this is N(n, 1, delta).
std::uint64_t covering_number(const MarkovMeasure& m, std::size_t n, double delta);

struct CoveringProfile {
  double delta = 0.0;
  std::vector<std::size_t> ns;
  std::vector<std::uint64_t> counts;
  std::vector<double> rates;  // log(N) / n

  std::string to_csv() const;  // n,N,rate
  nlohmann::json to_json() const;
};

CoveringProfile covering_profile(const MarkovMeasure& m, double delta, std::size_t n_lo,
                                 std::size_t n_hi);

struct KatokReport {
  CoveringProfile profile;
  AffineFit fit;  // log N against n over the upper half of the range
  double rate = 0.0;
  double entropy = 0.0;
  double gap = 0.0;  // |rate - entropy|

  nlohmann::json to_json() const;
};

KatokReport katok_estimate(const MarkovMeasure& m, double delta, std::size_t n_lo, std::size_t n_hi);

}  // namespace cms
