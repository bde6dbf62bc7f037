#include "cms/katok.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "cms/errors.hpp"
#include "cms/json_number.hpp"

namespace cms {

namespace {

// (label, state, mass), sorted by label then state with states merged.
using Frontier = std::vector<std::tuple<Symbol, std::size_t, double>>;

void normalize(Frontier& f) {
  std::sort(f.begin(), f.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  Frontier merged;
  for (const auto& item : f) {
    if (!merged.empty() && std::get<0>(merged.back()) == std::get<0>(item) &&
        std::get<1>(merged.back()) == std::get<1>(item)) {
      std::get<2>(merged.back()) += std::get<2>(item);
    } else {
      merged.push_back(item);
    }
  }
  f = std::move(merged);
}

}  // namespace

std::vector<double> cylinder_masses(const MarkovMeasure& m, std::size_t n) {
  if (n == 0) throw CmsError(ErrorCode::kValidation, "cylinder length must be >= 1");
  std::vector<double> out;
  // Depth-first over label words; `group` holds the states (with masses)
  // reachable along the current word, all carrying its last label.
  std::function<void(const Frontier&, std::size_t)> descend = [&](const Frontier& group,
                                                                   std::size_t length) {
    if (length == n) {
      double mass = 0.0;
      for (const auto& item : group) mass += std::get<2>(item);
      if (out.size() >= kCylinderCap) {
        throw CmsError(ErrorCode::kCapacity, "more positive-mass cylinders than the enumeration cap");
      }
      out.push_back(mass);
      return;
    }
    Frontier next;
    for (const auto& [label, i, mass] : group) {
      for (const auto& [j, p] : m.row(i)) next.emplace_back(m.label(j), j, mass * p);
    }
    normalize(next);
    for (std::size_t lo = 0; lo < next.size();) {
      std::size_t hi = lo;
      while (hi < next.size() && std::get<0>(next[hi]) == std::get<0>(next[lo])) ++hi;
      descend(Frontier(next.begin() + static_cast<std::ptrdiff_t>(lo),
                       next.begin() + static_cast<std::ptrdiff_t>(hi)),
              length + 1);
      lo = hi;
    }
  };
  Frontier start;
  for (std::size_t i = 0; i < m.stationary().size(); ++i) {
    if (m.stationary()[i] > 0.0) start.emplace_back(m.label(i), i, m.stationary()[i]);
  }
  normalize(start);
  for (std::size_t lo = 0; lo < start.size();) {
    std::size_t hi = lo;
    while (hi < start.size() && std::get<0>(start[hi]) == std::get<0>(start[lo])) ++hi;
    descend(Frontier(start.begin() + static_cast<std::ptrdiff_t>(lo),
                     start.begin() + static_cast<std::ptrdiff_t>(hi)),
            1);
    lo = hi;
  }
  return out;
}

std::uint64_t covering_number(const MarkovMeasure& m, std::size_t n, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw CmsError(ErrorCode::kValidation, "delta must lie in (0,1)");
  std::vector<double> masses = cylinder_masses(m, n);
  std::sort(masses.begin(), masses.end(), std::greater<>());
  // Cylinders are disjoint, so the heaviest ones give the smallest cover.
  const double target = 1.0 - delta;
  double covered = 0.0;
  std::uint64_t count = 0;
  for (double mass : masses) {
    if (covered > target + 1e-12) break;
    covered += mass;
    ++count;
  }
  return count;
}

std::string CoveringProfile::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "n,N,rate\n";
  for (std::size_t i = 0; i < ns.size(); ++i) out << ns[i] << ',' << counts[i] << ',' << rates[i] << '\n';
  return out.str();
}

nlohmann::json CoveringProfile::to_json() const {
  return {{"delta", delta}, {"n", ns}, {"N", counts}, {"rate", rates}};
}

CoveringProfile covering_profile(const MarkovMeasure& m, double delta, std::size_t n_lo,
                                 std::size_t n_hi) {
  if (n_lo == 0 || n_lo > n_hi) throw CmsError(ErrorCode::kEmptyWindow, "need 1 <= n_lo <= n_hi");
  CoveringProfile profile;
  profile.delta = delta;
  for (std::size_t n = n_lo; n <= n_hi; ++n) {
    const std::uint64_t count = covering_number(m, n, delta);
    profile.ns.push_back(n);
    profile.counts.push_back(count);
    profile.rates.push_back(std::log(static_cast<double>(count)) / static_cast<double>(n));
  }
  return profile;
}

nlohmann::json KatokReport::to_json() const {
  return {{"rate", json_number(rate)},
          {"entropy", entropy},
          {"gap", json_number(gap)},
          {"fit", {{"slope", fit.slope}, {"intercept", fit.intercept}, {"residual", fit.residual}}},
          {"profile", profile.to_json()}};
}

KatokReport katok_estimate(const MarkovMeasure& m, double delta, std::size_t n_lo, std::size_t n_hi) {
  KatokReport report;
  report.profile = covering_profile(m, delta, n_lo, n_hi);
  std::vector<std::pair<double, double>> points;
  const std::size_t from = std::max(n_lo, n_hi / 2);
  for (std::size_t i = 0; i < report.profile.ns.size(); ++i) {
    if (report.profile.ns[i] < from) continue;
    points.emplace_back(static_cast<double>(report.profile.ns[i]),
                        std::log(static_cast<double>(report.profile.counts[i])));
  }
  report.fit = affine_fit(points);
  report.rate = points.size() >= 2 ? report.fit.slope : report.profile.rates.back();
  report.entropy = m.entropy();
  report.gap = std::abs(report.rate - report.entropy);
  return report;
}

}  // namespace cms
