#include "cms/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "cms/errors.hpp"

namespace cms {

// ---------------------------------------------------------------------------
// FiniteGraph

FiniteGraph::FiniteGraph(std::vector<Symbol> symbols, std::vector<Edge> edges)
    : symbols_(std::move(symbols)) {
  std::sort(symbols_.begin(), symbols_.end());
  symbols_.erase(std::unique(symbols_.begin(), symbols_.end()), symbols_.end());
  succ_.assign(symbols_.size(), {});
  pred_.assign(symbols_.size(), {});
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const Edge& e : edges) {
    const auto from = index_of(e.from);
    const auto to = index_of(e.to);
    if (!from || !to) {
      throw CmsError(ErrorCode::kValidation,
                     "edge (" + std::to_string(e.from) + "," + std::to_string(e.to) +
                         ") references a symbol outside the graph");
    }
    succ_[*from].push_back(*to);
    pred_[*to].push_back(*from);
  }
  for (auto& row : pred_) std::sort(row.begin(), row.end());
  edge_count_ = edges.size();
}

std::optional<std::size_t> FiniteGraph::index_of(Symbol s) const {
  const auto it = std::lower_bound(symbols_.begin(), symbols_.end(), s);
  if (it == symbols_.end() || *it != s) return std::nullopt;
  return static_cast<std::size_t>(it - symbols_.begin());
}

bool FiniteGraph::has_edge(Symbol a, Symbol b) const {
  const auto from = index_of(a);
  const auto to = index_of(b);
  if (!from || !to) return false;
  const auto& row = succ_[*from];
  return std::binary_search(row.begin(), row.end(), *to);
}

std::vector<Edge> FiniteGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (std::size_t v = 0; v < size(); ++v) {
    for (std::size_t w : succ_[v]) out.push_back({symbols_[v], symbols_[w]});
  }
  return out;
}

namespace {

std::vector<bool> reachable(std::size_t start,
                            const std::vector<std::vector<std::size_t>>& adjacency) {
  std::vector<bool> seen(adjacency.size(), false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : adjacency[v]) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

}  // namespace

bool FiniteGraph::strongly_connected() const {
  if (empty() || edge_count_ == 0) return false;
  const auto fwd = reachable(0, succ_);
  const auto bwd = reachable(0, pred_);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

std::size_t FiniteGraph::period() const {
  if (empty()) return 0;
  std::vector<long> level(size(), -1);
  std::queue<std::size_t> queue;
  level[0] = 0;
  queue.push(0);
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop();
    for (std::size_t w : succ_[v]) {
      if (level[w] < 0) {
        level[w] = level[v] + 1;
        queue.push(w);
      }
    }
  }
  std::size_t g = 0;
  for (std::size_t v = 0; v < size(); ++v) {
    if (level[v] < 0) continue;
    for (std::size_t w : succ_[v]) {
      if (level[w] < 0) continue;
      const long diff = level[v] + 1 - level[w];
      g = std::gcd(g, static_cast<std::size_t>(diff < 0 ? -diff : diff));
    }
  }
  return g;
}

FiniteGraph FiniteGraph::induced(std::span<const Symbol> keep) const {
  std::vector<Symbol> kept;
  for (Symbol s : keep) {
    if (contains(s)) kept.push_back(s);
  }
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  std::vector<Edge> edges;
  for (Symbol s : kept) {
    const std::size_t v = *index_of(s);
    for (std::size_t w : succ_[v]) {
      if (std::binary_search(kept.begin(), kept.end(), symbols_[w])) {
        edges.push_back({s, symbols_[w]});
      }
    }
  }
  return FiniteGraph(std::move(kept), std::move(edges));
}

FiniteGraph FiniteGraph::restrict_to(Symbol cutoff) const {
  std::vector<Symbol> keep;
  for (Symbol s : symbols_) {
    if (s <= cutoff) keep.push_back(s);
  }
  return induced(keep);
}

// ---------------------------------------------------------------------------
// LoopSystem

namespace {

// Exact dyadic representation mantissa * 2^exponent of a finite double.
struct Dyadic {
  BigInt mantissa;
  int exponent = 0;
};

Dyadic to_dyadic(double value) {
  int exp = 0;
  const double frac = std::frexp(value, &exp);
  auto m = static_cast<long long>(std::ldexp(frac, 53));
  int e = exp - 53;
  while (m != 0 && (m % 2) == 0) {
    m /= 2;
    ++e;
  }
  return {BigInt(m), m == 0 ? 0 : e};
}

// floor(mantissa * 2^exponent / denominator) for nonnegative inputs.
BigInt floor_dyadic(const BigInt& mantissa, long exponent, const BigInt& denominator) {
  if (exponent >= 0) return (mantissa << exponent) / denominator;
  return mantissa / (denominator << static_cast<unsigned>(-exponent));
}

BigInt geometric_term(const GeometricTail& tail, std::uint32_t length) {
  if (length < tail.from_length || tail.coeff == 0.0) return 0;
  const Dyadic c = to_dyadic(tail.coeff);
  const Dyadic g = to_dyadic(tail.growth);
  const BigInt num = c.mantissa * boost::multiprecision::pow(g.mantissa, length);
  const long exp = static_cast<long>(c.exponent) + static_cast<long>(g.exponent) * length;
  const BigInt den = boost::multiprecision::pow(BigInt(length), tail.power);
  return floor_dyadic(num, exp, den);
}

BigInt greedy_cumulative(std::uint32_t base, std::uint32_t length) {
  // floor(base^l * l / (l + 1)), with T_0 = 0.
  if (length == 0) return 0;
  return boost::multiprecision::pow(BigInt(base), length) * length / (length + 1);
}

bool is_integer_valued(double v) { return std::isfinite(v) && v == std::floor(v); }

}  // namespace

LoopSystem::LoopSystem(std::vector<LoopSpec> loops, LoopTail tail)
    : loops_(std::move(loops)), tail_(std::move(tail)) {
  bool any_positive = false;
  std::optional<std::uint32_t> explicit_max;
  for (std::size_t i = 0; i < loops_.size(); ++i) {
    const std::string path = "/loops/" + std::to_string(i);
    if (loops_[i].length < 1) {
      throw CmsError(ErrorCode::kValidation, "loop length must be >= 1", path + "/length");
    }
    if (loops_[i].multiplicity < 0) {
      throw CmsError(ErrorCode::kValidation, "loop multiplicity must be >= 0",
                     path + "/multiplicity");
    }
    if (loops_[i].multiplicity > 0) {
      any_positive = true;
      explicit_max = std::max(explicit_max.value_or(0), loops_[i].length);
    }
  }

  std::optional<std::uint32_t> tail_max;  // last tail length, when finite
  bool tail_infinite = false;
  if (const auto* geo = std::get_if<GeometricTail>(&tail_)) {
    if (geo->from_length < 1) {
      throw CmsError(ErrorCode::kValidation, "tail from_length must be >= 1", "/tail/from_length");
    }
    if (!std::isfinite(geo->coeff) || geo->coeff < 0.0) {
      throw CmsError(ErrorCode::kValidation, "tail coeff must be finite and >= 0", "/tail/coeff");
    }
    if (!std::isfinite(geo->growth) || geo->growth < 1.0) {
      throw CmsError(ErrorCode::kValidation, "tail growth must lie in [1, inf)", "/tail/growth");
    }
    if (geo->power > 16) {
      throw CmsError(ErrorCode::kValidation, "tail power must be <= 16", "/tail/power");
    }
    if (geo->coeff > 0.0) {
      if (geo->growth > 1.0) {
        tail_infinite = true;
      } else if (geo->power == 0) {
        tail_infinite = geo->coeff >= 1.0;
      } else {
        // floor(coeff / l^power) vanishes once l^power > coeff.
        auto last = static_cast<std::uint32_t>(
            std::floor(std::pow(geo->coeff, 1.0 / geo->power)) + 2);
        while (last >= geo->from_length && geometric_term(*geo, last) == 0) --last;
        if (last >= geo->from_length) tail_max = last;
      }
    }
    if (tail_infinite) {
      growth_ = geo->growth;
      exact_tail_ = geo->power == 0 && is_integer_valued(geo->growth) &&
                    is_integer_valued(geo->coeff);
    }
  } else if (const auto* greedy = std::get_if<GreedyCriticalTail>(&tail_)) {
    if (greedy->base < 2 || greedy->base > 64) {
      throw CmsError(ErrorCode::kValidation, "greedy tail growth must be an integer in [2, 64]",
                     "/tail/growth");
    }
    if (!loops_.empty()) {
      throw CmsError(ErrorCode::kValidation,
                     "a greedy_critical tail cannot be combined with explicit loops", "/loops");
    }
    tail_infinite = true;
    growth_ = greedy->base;
  }

  any_positive = any_positive || tail_infinite || tail_max.has_value();
  if (!any_positive) {
    throw CmsError(ErrorCode::kValidation, "loop system has no loop with positive multiplicity",
                   "/loops");
  }
  if (multiplicity(1) > 1) {
    throw CmsError(ErrorCode::kValidation,
                   "at most one loop of length 1 exists (the base self-loop)",
                   tail_max || tail_infinite ? "/tail" : "/loops");
  }
  if (!tail_infinite) {
    max_length_ = std::max(explicit_max.value_or(0), tail_max.value_or(0));
  }
}

BigInt LoopSystem::explicit_multiplicity(std::uint32_t length) const {
  BigInt total = 0;
  for (const LoopSpec& spec : loops_) {
    if (spec.length == length) total += spec.multiplicity;
  }
  return total;
}

BigInt LoopSystem::tail_multiplicity(std::uint32_t length) const {
  if (length == 0) return 0;
  if (const auto* geo = std::get_if<GeometricTail>(&tail_)) return geometric_term(*geo, length);
  if (const auto* greedy = std::get_if<GreedyCriticalTail>(&tail_)) {
    return greedy_cumulative(greedy->base, length) -
           BigInt(greedy->base) * greedy_cumulative(greedy->base, length - 1);
  }
  return 0;
}

std::vector<BigInt> LoopSystem::multiplicities(std::uint32_t max_length) const {
  std::vector<BigInt> out(static_cast<std::size_t>(max_length) + 1);
  for (std::uint32_t l = 1; l <= max_length; ++l) {
    if (max_length_ && l > *max_length_) break;
    out[l] = multiplicity(l);
  }
  return out;
}

std::vector<LoopRef> LoopSystem::loops_up_to(Symbol cutoff) const {
  std::vector<LoopRef> out;
  BigInt next = 2;
  for (std::uint32_t l = 1;; ++l) {
    if (max_length_ && l > *max_length_) break;
    const BigInt a = multiplicity(l);
    if (l == 1) {
      if (a == 1) out.push_back({1, 0, 0});
      continue;
    }
    if (next > cutoff) break;
    if (a > 0) {
      const BigInt room = (BigInt(cutoff) - next) / (l - 1) + 1;
      const BigInt count = room < a ? room : a;
      const auto n = count.convert_to<std::uint64_t>();
      const auto start = next.convert_to<Symbol>();
      for (std::uint64_t k = 0; k < n; ++k) {
        out.push_back({l, k, start + k * (l - 1)});
      }
    }
    next += a * (l - 1);
  }
  return out;
}

BigInt LoopSystem::last_index_through(std::uint32_t length) const {
  BigInt last = 1;
  for (std::uint32_t l = 2; l <= length; ++l) {
    if (max_length_ && l > *max_length_) break;
    last += multiplicity(l) * (l - 1);
  }
  return last;
}

std::optional<LoopSystem::Location> LoopSystem::locate(Symbol s) const {
  if (s == kBase) return Location{};
  if (s < kBase) return std::nullopt;
  BigInt next = 2;
  for (std::uint32_t l = 2;; ++l) {
    if (max_length_ && l > *max_length_) return std::nullopt;
    const BigInt a = multiplicity(l);
    const BigInt span = a * (l - 1);
    if (s < next + span) {
      const BigInt rel = BigInt(s) - next;
      return Location{l, rel / (l - 1), static_cast<std::uint32_t>(rel % (l - 1)) + 1};
    }
    next += span;
  }
}

std::optional<BigInt> LoopSystem::symbol_count() const {
  if (!max_length_) return std::nullopt;
  return last_index_through(*max_length_);
}

// ---------------------------------------------------------------------------
// CmsGraph

CmsGraph CmsGraph::finite(FiniteGraph graph) {
  if (graph.empty()) {
    throw CmsError(ErrorCode::kValidation, "finite graph has no symbols", "/symbols");
  }
  if (graph.edge_count() == 0) {
    throw CmsError(ErrorCode::kValidation, "finite graph has no edges", "/edges");
  }
  const auto symbols = graph.symbols();
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] != i + 1) {
      throw CmsError(ErrorCode::kValidation, "finite graph symbols must be 1..S", "/symbols");
    }
  }
  return CmsGraph(std::move(graph));
}

CmsGraph CmsGraph::loop_system(LoopSystem system) { return CmsGraph(std::move(system)); }

bool CmsGraph::has_symbol(Symbol s) const {
  if (is_finite()) return finite_graph().contains(s);
  return loops().locate(s).has_value();
}

bool CmsGraph::has_edge(Symbol a, Symbol b) const {
  if (is_finite()) return finite_graph().has_edge(a, b);
  const LoopSystem& sys = loops();
  const auto from = sys.locate(a);
  const auto to = sys.locate(b);
  if (!from || !to) return false;
  if (from->length == 0 && to->length == 0) return sys.multiplicity(1) == 1;
  if (from->length == 0) return to->offset == 1;
  if (to->length == 0) return from->offset + 1 == from->length;
  return from->length == to->length && from->ordinal == to->ordinal &&
         to->offset == from->offset + 1;
}

bool CmsGraph::is_admissible(std::span<const Symbol> word) const {
  if (word.empty()) return false;
  if (!has_symbol(word[0])) return false;
  for (std::size_t i = 0; i + 1 < word.size(); ++i) {
    if (!has_edge(word[i], word[i + 1])) return false;
  }
  return true;
}

std::optional<BigInt> CmsGraph::symbol_count() const {
  if (is_finite()) return BigInt(finite_graph().size());
  return loops().symbol_count();
}

bool CmsGraph::transitive() const {
  if (is_finite()) return finite_graph().strongly_connected();
  return true;
}

// ---------------------------------------------------------------------------
// Truncations and word enumeration

Truncation truncate(const CmsGraph& g, Symbol q) {
  if (q < 1) throw CmsError(ErrorCode::kValidation, "truncation cutoff must be >= 1");
  if (g.is_finite()) return {g.finite_graph().restrict_to(q), q};

  const LoopSystem& sys = g.loops();
  std::vector<Symbol> symbols{LoopSystem::kBase};
  std::vector<Edge> edges;
  for (const LoopRef& loop : sys.loops_up_to(q)) {
    if (loop.length == 1) {
      edges.push_back({LoopSystem::kBase, LoopSystem::kBase});
      continue;
    }
    Symbol prev = LoopSystem::kBase;
    bool prev_kept = true;
    for (std::uint32_t offset = 1; offset < loop.length; ++offset) {
      const Symbol v = loop.internal(offset);
      const bool kept = v <= q;
      if (kept) symbols.push_back(v);
      if (kept && prev_kept) edges.push_back({prev, v});
      prev = v;
      prev_kept = kept;
    }
    if (prev_kept) edges.push_back({prev, LoopSystem::kBase});
  }
  return {FiniteGraph(std::move(symbols), std::move(edges)), q};
}

Truncation truncate(const Truncation& t, Symbol q) {
  if (q < 1) throw CmsError(ErrorCode::kValidation, "truncation cutoff must be >= 1");
  return {t.graph.restrict_to(q), std::min(q, t.cutoff)};
}

std::vector<Word> enumerate_words(const Truncation& t, Symbol a, Symbol b, std::size_t length,
                                  std::size_t cap) {
  if (length < 1) throw CmsError(ErrorCode::kValidation, "word length must be >= 1");
  const auto start = t.graph.index_of(a);
  const auto end = t.graph.index_of(b);
  if (!start || !end) {
    throw CmsError(ErrorCode::kValidation, "endpoint symbol not in truncation");
  }
  std::vector<Word> out;
  std::vector<std::size_t> path{*start};
  // Iterative DFS keeping a cursor per depth.
  std::vector<std::size_t> cursor{0};
  if (length == 1) {
    if (*start == *end) out.push_back({a});
    return out;
  }
  while (!path.empty()) {
    const std::size_t depth = path.size();
    if (depth == length) {
      if (path.back() == *end) {
        if (out.size() == cap) {
          throw CmsError(ErrorCode::kCapacity,
                         "word enumeration exceeds cap of " + std::to_string(cap));
        }
        Word w;
        w.reserve(length);
        for (std::size_t v : path) w.push_back(t.graph.symbol(v));
        out.push_back(std::move(w));
      }
      path.pop_back();
      cursor.pop_back();
      continue;
    }
    const auto succ = t.graph.successors(path.back());
    std::size_t& next = cursor.back();
    if (next == succ.size()) {
      path.pop_back();
      cursor.pop_back();
      continue;
    }
    path.push_back(succ[next++]);
    cursor.push_back(0);
  }
  return out;
}

}  // namespace cms
