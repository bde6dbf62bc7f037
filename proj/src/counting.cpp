#include "cms/counting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "cms/errors.hpp"
#include "cms/json_number.hpp"

namespace cms {

std::string series_kind_name(SeriesKind kind) {
  switch (kind) {
    case SeriesKind::kLoops: return "Zn";
    case SeriesKind::kFirstReturns: return "ZnStar";
    case SeriesKind::kEscape: return "zn";
    case SeriesKind::kEscapePinned: return "znAB";
  }
  return "unknown";
}

std::string CountSeries::to_csv() const {
  std::ostringstream out;
  out << "n,count\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << first_index + i << ',' << values[i].str() << '\n';
  }
  return out.str();
}

nlohmann::json CountSeries::to_json() const {
  nlohmann::json counts = nlohmann::json::array();
  for (const BigInt& v : values) counts.push_back(v.str());
  nlohmann::json params = nlohmann::json::object();
  if (a) params["a"] = *a;
  if (b) params["b"] = *b;
  if (M) params["M"] = *M;
  if (q) params["q"] = *q;
  return {{"kind", series_kind_name(kind)},
          {"first_index", first_index},
          {"counts", counts},
          {"parameters", params},
          {"certificate", certificate}};
}

namespace {

VisitTable count_finite(const FiniteGraph& graph, const PathQuery& query) {
  const std::size_t n = graph.size();
  const std::size_t width = query.mark_cap + 1;
  std::vector<char> marked(n, 0);
  std::vector<char> is_end(n, 0);
  for (Symbol s : query.marked) {
    if (auto v = graph.index_of(s)) marked[*v] = 1;
  }
  for (Symbol s : query.ends) {
    if (auto v = graph.index_of(s)) is_end[*v] = 1;
  }

  std::vector<std::vector<BigInt>> cur(n, std::vector<BigInt>(width));
  std::vector<char> active(n, 0);
  for (Symbol s : query.starts) {
    const auto v = graph.index_of(s);
    if (!v) continue;
    const std::size_t m = marked[*v];
    if (m < width) {
      cur[*v][m] = 1;
      active[*v] = 1;
    }
  }

  VisitTable table(query.max_steps + 1, std::vector<BigInt>(width));
  auto record = [&](std::size_t step) {
    for (std::size_t v = 0; v < n; ++v) {
      if (!active[v] || !is_end[v]) continue;
      for (std::size_t s = 0; s < width; ++s) table[step][s] += cur[v][s];
    }
  };
  record(0);

  std::vector<std::vector<BigInt>> next(n, std::vector<BigInt>(width));
  std::vector<char> next_active(n, 0);
  for (std::size_t step = 1; step <= query.max_steps; ++step) {
    for (std::size_t w = 0; w < n; ++w) {
      if (next_active[w]) {
        for (auto& x : next[w]) x = 0;
      }
      next_active[w] = 0;
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (!active[v]) continue;
      for (std::size_t w : graph.successors(v)) {
        const std::size_t m = marked[w];
        for (std::size_t s = 0; s + m < width; ++s) {
          if (cur[v][s].is_zero()) continue;
          next[w][s + m] += cur[v][s];
          next_active[w] = 1;
        }
      }
    }
    std::swap(cur, next);
    std::swap(active, next_active);
    record(step);
  }
  return table;
}

struct Segment {
  std::size_t steps = 0;
  std::size_t marks = 0;
};

VisitTable count_loop_system(const LoopSystem& sys, const PathQuery& query) {
  if (query.max_steps > kMaxLoopDepth) {
    throw CmsError(ErrorCode::kTruncationInsufficient,
                   "loop-system counting is limited to " + std::to_string(kMaxLoopDepth) +
                       " steps");
  }
  const std::size_t width = query.mark_cap + 1;
  const auto n_max = static_cast<std::uint32_t>(query.max_steps);

  Symbol cutoff = LoopSystem::kBase;
  for (const auto* set : {&query.starts, &query.ends, &query.marked}) {
    if (!set->empty()) cutoff = std::max(cutoff, *set->rbegin());
  }
  for (const auto* set : {&query.starts, &query.ends}) {
    for (Symbol s : *set) {
      if (!sys.locate(s)) {
        throw CmsError(ErrorCode::kValidation,
                       "symbol " + std::to_string(s) + " is not in the loop system");
      }
    }
  }

  const std::vector<LoopRef> explicit_loops = sys.loops_up_to(cutoff);
  const std::vector<BigInt> mult = sys.multiplicities(n_max);
  const std::size_t base_mark = query.marked.contains(LoopSystem::kBase) ? 1 : 0;

  auto is_marked = [&](Symbol s) { return query.marked.contains(s) ? 1u : 0u; };

  // Loop coefficients: coef[l] maps the number of marked positions a loop
  // adds (its internal marks plus the returning base) to a loop count.
  std::vector<std::map<std::size_t, BigInt>> coef(static_cast<std::size_t>(n_max) + 1);
  std::vector<BigInt> explicit_at(static_cast<std::size_t>(n_max) + 1);
  for (const LoopRef& loop : explicit_loops) {
    if (loop.length > n_max) continue;
    std::size_t marks = base_mark;
    for (std::uint32_t o = 1; o < loop.length; ++o) marks += is_marked(loop.internal(o));
    coef[loop.length][marks] += 1;
    explicit_at[loop.length] += 1;
  }
  for (std::uint32_t l = 1; l <= n_max; ++l) {
    const BigInt rest = mult[l] - explicit_at[l];
    if (rest > 0) coef[l][base_mark] += rest;
  }

  // base_paths[T][s]: words of T steps from the base to the base.
  VisitTable base_paths(query.max_steps + 1, std::vector<BigInt>(width));
  if (base_mark < width) base_paths[0][base_mark] = 1;
  for (std::size_t t = 1; t <= query.max_steps; ++t) {
    auto& row = base_paths[t];
    for (std::size_t l = 1; l <= t; ++l) {
      if (coef[l].empty()) continue;
      const auto& prev = base_paths[t - l];
      for (const auto& [d, c] : coef[l]) {
        for (std::size_t s = d; s < width; ++s) {
          if (prev[s - d].is_zero()) continue;
          row[s] += c * prev[s - d];
        }
      }
    }
  }

  // Start segments run from x_0 to the first base visit (base excluded);
  // end segments from the last base visit (excluded) to x_N.
  std::vector<Segment> heads;
  std::vector<Segment> tails;
  VisitTable table(query.max_steps + 1, std::vector<BigInt>(width));
  if (query.starts.contains(LoopSystem::kBase)) heads.push_back({0, 0});
  if (query.ends.contains(LoopSystem::kBase)) tails.push_back({0, 0});
  for (const LoopRef& loop : explicit_loops) {
    for (std::uint32_t o = 1; o < loop.length; ++o) {
      const Symbol v = loop.internal(o);
      if (query.starts.contains(v)) {
        std::size_t marks = 0;
        for (std::uint32_t k = o; k < loop.length; ++k) marks += is_marked(loop.internal(k));
        heads.push_back({loop.length - o, marks});
        // Words that stay inside this loop.
        std::size_t inside = 0;
        for (std::uint32_t o2 = o; o2 < loop.length; ++o2) {
          inside += is_marked(loop.internal(o2));
          const std::size_t steps = o2 - o;
          if (steps > query.max_steps) break;
          if (query.ends.contains(loop.internal(o2)) && inside < width) {
            table[steps][inside] += 1;
          }
        }
      }
      if (query.ends.contains(v)) {
        std::size_t marks = 0;
        for (std::uint32_t k = 1; k <= o; ++k) marks += is_marked(loop.internal(k));
        tails.push_back({o, marks});
      }
    }
  }

  for (const Segment& head : heads) {
    for (const Segment& tail : tails) {
      const std::size_t fixed_steps = head.steps + tail.steps;
      const std::size_t fixed_marks = head.marks + tail.marks;
      if (fixed_marks >= width) continue;
      for (std::size_t n = fixed_steps; n <= query.max_steps; ++n) {
        const auto& src = base_paths[n - fixed_steps];
        for (std::size_t s = fixed_marks; s < width; ++s) {
          if (!src[s - fixed_marks].is_zero()) table[n][s] += src[s - fixed_marks];
        }
      }
    }
  }
  return table;
}

std::string certificate_for(const CmsGraph& g, std::size_t steps) {
  if (g.is_finite()) return "finite graph: exhaustive vertex-level dynamic programming";
  return "loop system: all loops of length <= " + std::to_string(steps) +
         " enumerated with exact multiplicities (loop-level dynamic programming)";
}

void require_symbol(const CmsGraph& g, Symbol s, const char* what) {
  if (!g.has_symbol(s)) {
    throw CmsError(ErrorCode::kValidation,
                   std::string(what) + " symbol " + std::to_string(s) + " is not in the graph");
  }
}

std::set<Symbol> symbols_up_to(const CmsGraph& g, Symbol q) {
  std::set<Symbol> out;
  Symbol limit = q;
  if (const auto count = g.symbol_count(); count && BigInt(limit) > *count) {
    limit = count->convert_to<Symbol>();
  }
  for (Symbol s = 1; s <= limit; ++s) out.insert(s);
  return out;
}

}  // namespace

VisitTable count_paths(const CmsGraph& g, const PathQuery& query) {
  if (g.is_finite()) return count_finite(g.finite_graph(), query);
  return count_loop_system(g.loops(), query);
}

CountSeries loop_count(const CmsGraph& g, Symbol a, std::size_t n_max) {
  require_symbol(g, a, "vertex");
  PathQuery query{{a}, {a}, {}, n_max, 0};
  const VisitTable table = count_paths(g, query);
  CountSeries out;
  out.kind = SeriesKind::kLoops;
  out.first_index = 1;
  out.a = a;
  out.certificate = certificate_for(g, n_max);
  for (std::size_t n = 1; n <= n_max; ++n) out.values.push_back(table[n][0]);
  return out;
}

CountSeries first_return_count(const CmsGraph& g, Symbol a, std::size_t n_max) {
  require_symbol(g, a, "vertex");
  PathQuery query{{a}, {a}, {a}, n_max, 2};
  const VisitTable table = count_paths(g, query);
  CountSeries out;
  out.kind = SeriesKind::kFirstReturns;
  out.first_index = 1;
  out.a = a;
  out.certificate = certificate_for(g, n_max);
  for (std::size_t n = 1; n <= n_max; ++n) out.values.push_back(table[n][2]);
  return out;
}

namespace {

CountSeries escape_series(const CmsGraph& g, std::uint64_t M, Symbol q, std::set<Symbol> starts,
                          std::set<Symbol> ends, std::size_t n_max, SeriesKind kind) {
  if (M < 1) throw CmsError(ErrorCode::kValidation, "M must be >= 1");
  if (q < 1) throw CmsError(ErrorCode::kValidation, "q must be >= 1");
  PathQuery query;
  query.starts = std::move(starts);
  query.ends = std::move(ends);
  query.marked = symbols_up_to(g, q);
  query.max_steps = n_max + 1;
  query.mark_cap = static_cast<std::size_t>((n_max + 2) / M);
  const VisitTable table = count_paths(g, query);
  CountSeries out;
  out.kind = kind;
  out.first_index = 0;
  out.M = M;
  out.q = q;
  out.certificate = certificate_for(g, n_max + 1);
  for (std::size_t n = 0; n <= n_max; ++n) {
    const std::size_t budget = (n + 2) / M;
    BigInt total = 0;
    for (std::size_t s = 0; s <= budget && s < table[n + 1].size(); ++s) total += table[n + 1][s];
    out.values.push_back(std::move(total));
  }
  return out;
}

}  // namespace

CountSeries escape_count(const CmsGraph& g, std::uint64_t M, Symbol q, std::size_t n_max) {
  const std::set<Symbol> small = symbols_up_to(g, q);
  return escape_series(g, M, q, small, small, n_max, SeriesKind::kEscape);
}

CountSeries escape_count_ab(const CmsGraph& g, std::uint64_t M, Symbol q, Symbol a, Symbol b,
                            std::size_t n_max) {
  require_symbol(g, a, "start");
  require_symbol(g, b, "end");
  CountSeries out = escape_series(g, M, q, {a}, {b}, n_max, SeriesKind::kEscapePinned);
  out.a = a;
  out.b = b;
  return out;
}

// ---------------------------------------------------------------------------
// Growth rates

std::string growth_method_name(GrowthMethod method) {
  return method == GrowthMethod::kTailMax ? "tail-max" : "affine-fit";
}

bool GrowthEstimate::is_neg_inf() const {
  return std::isinf(value) && value < 0;
}

nlohmann::json GrowthEstimate::to_json() const {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& [n, r] : per_n) points.push_back({n, r});
  return {{"value", json_number(value)},
          {"method", growth_method_name(method)},
          {"window", {window.lo, window.hi}},
          {"residual", residual},
          {"per_n", points}};
}

Window default_window(const CountSeries& s) {
  const std::size_t hi = s.last_index();
  const std::size_t lo = std::max<std::size_t>({s.first_index, hi / 2, 1});
  return {std::min(lo, hi), hi};
}

GrowthEstimate growth_rate(const CountSeries& s, GrowthMethod method, Window window) {
  if (s.values.empty() || window.lo > window.hi || window.lo < s.first_index ||
      window.hi > s.last_index()) {
    throw CmsError(ErrorCode::kEmptyWindow, "growth window outside the series index range");
  }
  GrowthEstimate est;
  est.method = method;
  est.window = window;
  for (std::size_t n = std::max<std::size_t>(s.first_index, 1); n <= s.last_index(); ++n) {
    if (s.at(n) > 0) est.per_n.emplace_back(n, log_big(s.at(n)) / static_cast<double>(n));
  }

  std::vector<std::pair<double, double>> points;  // (n, log c_n)
  double tail_max = -std::numeric_limits<double>::infinity();
  for (std::size_t n = window.lo; n <= window.hi; ++n) {
    if (s.at(n) <= 0) continue;
    const double lg = log_big(s.at(n));
    points.emplace_back(static_cast<double>(n), lg);
    if (n >= 1) tail_max = std::max(tail_max, lg / static_cast<double>(n));
  }
  if (points.empty()) {
    est.value = -std::numeric_limits<double>::infinity();
    return est;
  }
  if (method == GrowthMethod::kTailMax || points.size() < 2) {
    est.value = tail_max;
    return est;
  }
  const AffineFit fit = affine_fit(points);
  est.value = fit.slope;
  est.residual = fit.residual;
  return est;
}

AffineFit affine_fit(std::span<const std::pair<double, double>> points) {
  AffineFit fit;
  if (points.size() < 2) return fit;
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (const auto& [x, y] : points) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(points.size()));
  return fit;
}

}  // namespace cms
