#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cms/bigint.hpp"
#include "cms/graph.hpp"

namespace cms {

enum class SeriesKind {
  kLoops,          // Z_n(0,a): closed paths of length n at a
  kFirstReturns,   // Z_n*(0,a): closed paths at a avoiding a in between
  kEscape,         // z_n(M,q)
  kEscapePinned,   // z_n(M,q,a,b)
};

std::string series_kind_name(SeriesKind kind);

// Exact integer sequence c_n for n = first_index .. first_index + size - 1.
struct CountSeries {
  SeriesKind kind = SeriesKind::kLoops;
  std::size_t first_index = 1;
  std::vector<BigInt> values;

  std::optional<Symbol> a;
  std::optional<Symbol> b;
  std::optional<std::uint64_t> M;
  std::optional<Symbol> q;
  // How completeness of the path counts was established.
  std::string certificate;

  std::size_t last_index() const { return first_index + values.size() - 1; }
  const BigInt& at(std::size_t n) const { return values.at(n - first_index); }

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Count table of the constrained-path engine: entry [N][s] is the number of
// admissible words x_0..x_N with x_0 in `starts`, x_N in `ends`, and exactly s
// positions i in 0..N with x_i in `marked`.
struct PathQuery {
  std::set<Symbol> starts;
  std::set<Symbol> ends;
  std::set<Symbol> marked;
  std::size_t max_steps = 0;
  // Words with more than this many marked positions are dropped.
  std::size_t mark_cap = 0;
};

using VisitTable = std::vector<std::vector<BigInt>>;

// Exact counts. Finite graphs use a vertex-level DP; loop systems a
// loop-level DP over returns to the base, which is exact at every length.
VisitTable count_paths(const CmsGraph& g, const PathQuery& query);

// Loop systems are handled exactly up to this many steps.
inline constexpr std::size_t kMaxLoopDepth = 20000;

CountSeries loop_count(const CmsGraph& g, Symbol a, std::size_t n_max);
CountSeries first_return_count(const CmsGraph& g, Symbol a, std::size_t n_max);
// z_n(M,q) for n = 0..n_max: words [x_0..x_{n+1}] with x_0, x_{n+1} <= q and
// at most floor((n+2)/M) positions with x_i <= q.
CountSeries escape_count(const CmsGraph& g, std::uint64_t M, Symbol q, std::size_t n_max);
CountSeries escape_count_ab(const CmsGraph& g, std::uint64_t M, Symbol q, Symbol a, Symbol b,
                            std::size_t n_max);

enum class GrowthMethod { kTailMax, kAffineFit };

struct Window {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

// Numerical proxy for limsup (1/n) log c_n.
struct GrowthEstimate {
  double value = 0.0;  // -inf when every count in the window is zero
  GrowthMethod method = GrowthMethod::kAffineFit;
  Window window;
  double residual = 0.0;  // RMS residual of the affine fit
  std::vector<std::pair<std::size_t, double>> per_n;  // (n, log(c_n)/n), zeros skipped

  bool is_neg_inf() const;
  nlohmann::json to_json() const;
};

// Default window: the upper half of the available index range.
Window default_window(const CountSeries& s);

GrowthEstimate growth_rate(const CountSeries& s, GrowthMethod method, Window window);
inline GrowthEstimate growth_rate(const CountSeries& s, GrowthMethod method = GrowthMethod::kAffineFit) {
  return growth_rate(s, method, default_window(s));
}

std::string growth_method_name(GrowthMethod method);

// Least-squares line y = intercept + slope x (all zero for < 2 distinct x).
struct AffineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS
};
AffineFit affine_fit(std::span<const std::pair<double, double>> points);

}  // namespace cms
