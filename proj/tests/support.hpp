#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "cms/bigint.hpp"
#include "cms/counting.hpp"
#include "cms/graph.hpp"
#include "cms/measures.hpp"

namespace cms::testing {

inline CmsGraph full_shift(Symbol k) {
  std::vector<Symbol> symbols;
  std::vector<Edge> edges;
  for (Symbol a = 1; a <= k; ++a) {
    symbols.push_back(a);
    for (Symbol b = 1; b <= k; ++b) edges.push_back({a, b});
  }
  return CmsGraph::finite(FiniteGraph(symbols, edges));
}

inline CmsGraph golden_mean() {
  return CmsGraph::finite(FiniteGraph({1, 2}, {{1, 1}, {1, 2}, {2, 1}}));
}

inline CmsGraph single_loop() { return CmsGraph::finite(FiniteGraph({1}, {{1, 1}})); }

// One loop of every length.
inline CmsGraph renewal() {
  return CmsGraph::loop_system(LoopSystem({}, GeometricTail{1, 1.0, 1.0, 0}));
}

// a_1 = 1 and a_l = 2^l for l >= 2.
inline CmsGraph doubling_loops() {
  return CmsGraph::loop_system(LoopSystem({{1, 1}}, GeometricTail{2, 1.0, 2.0, 0}));
}

// a_l = floor(2^l / (4 l^2)).
inline CmsGraph transient_loops() {
  return CmsGraph::loop_system(LoopSystem({}, GeometricTail{1, 0.25, 2.0, 2}));
}

inline CmsGraph greedy_loops() {
  return CmsGraph::loop_system(LoopSystem({}, GreedyCriticalTail{2}));
}

inline CmsGraph finite_loops(std::vector<LoopSpec> loops) {
  return CmsGraph::loop_system(LoopSystem(std::move(loops), std::monostate{}));
}

// Explicit finite graph containing every word of `steps` steps between
// symbols <= `largest`; for loop systems only loops of length <= steps and
// the loops carrying those symbols matter.
inline FiniteGraph explicit_graph(const CmsGraph& g, std::size_t steps, Symbol largest = 1) {
  if (g.is_finite()) return g.finite_graph();
  std::uint32_t length = static_cast<std::uint32_t>(steps);
  for (Symbol s = 1; s <= largest; ++s) {
    if (const auto loc = g.loops().locate(s)) length = std::max(length, loc->length);
  }
  const BigInt last = g.loops().last_index_through(length);
  return truncate(g, last.convert_to<Symbol>()).graph;
}

// Exhaustive word enumeration oracle for the path engine.
inline VisitTable brute_force_paths(const FiniteGraph& graph, const PathQuery& query) {
  VisitTable table(query.max_steps + 1, std::vector<BigInt>(query.mark_cap + 1));
  std::function<void(std::size_t, std::size_t, std::size_t)> walk = [&](std::size_t v,
                                                                        std::size_t steps,
                                                                        std::size_t marks) {
    if (marks > query.mark_cap) return;
    if (query.ends.contains(graph.symbol(v))) table[steps][marks] += 1;
    if (steps == query.max_steps) return;
    for (std::size_t w : graph.successors(v)) {
      walk(w, steps + 1, marks + (query.marked.contains(graph.symbol(w)) ? 1 : 0));
    }
  };
  for (Symbol s : query.starts) {
    if (auto v = graph.index_of(s)) walk(*v, 0, query.marked.contains(s) ? 1 : 0);
  }
  return table;
}

inline CmsGraph random_finite_graph(std::mt19937_64& rng, Symbol max_symbols, double density) {
  std::uniform_int_distribution<Symbol> size_dist(1, max_symbols);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Symbol n = size_dist(rng);
  std::vector<Symbol> symbols;
  std::vector<Edge> edges;
  for (Symbol a = 1; a <= n; ++a) {
    symbols.push_back(a);
    for (Symbol b = 1; b <= n; ++b) {
      if (unit(rng) < density) edges.push_back({a, b});
    }
  }
  if (edges.empty()) edges.push_back({1, 1});
  return CmsGraph::finite(FiniteGraph(symbols, edges));
}

// Random strongly connected graph: a Hamiltonian cycle plus random chords.
inline CmsGraph random_transitive_graph(std::mt19937_64& rng, Symbol max_symbols, double density) {
  std::uniform_int_distribution<Symbol> size_dist(1, max_symbols);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Symbol n = size_dist(rng);
  std::vector<Symbol> symbols;
  std::vector<Edge> edges;
  for (Symbol a = 1; a <= n; ++a) {
    symbols.push_back(a);
    edges.push_back({a, a % n + 1});
    for (Symbol b = 1; b <= n; ++b) {
      if (unit(rng) < density) edges.push_back({a, b});
    }
  }
  return CmsGraph::finite(FiniteGraph(symbols, edges));
}

inline CmsGraph random_loop_system(std::mt19937_64& rng, bool with_tail) {
  std::uniform_int_distribution<int> mult(0, 3);
  std::vector<LoopSpec> loops;
  const std::uint32_t longest = std::uniform_int_distribution<std::uint32_t>(1, 6)(rng);
  for (std::uint32_t l = 1; l <= longest; ++l) {
    const int m = l == 1 ? mult(rng) % 2 : mult(rng);
    if (m > 0) loops.push_back({l, m});
  }
  if (loops.empty()) loops.push_back({2, 1});
  if (!with_tail) return finite_loops(loops);
  const std::uint32_t from = longest + 1;
  const double growth = std::uniform_int_distribution<int>(1, 3)(rng);
  return CmsGraph::loop_system(LoopSystem(loops, GeometricTail{from, 1.0, growth, 0}));
}

// Admissible words of length 1..length.
inline std::vector<Word> words_up_to(const FiniteGraph& g, std::size_t length) {
  std::vector<Word> out;
  std::vector<Word> level;
  for (Symbol a : g.symbols()) level.push_back({a});
  for (std::size_t len = 1; len <= length; ++len) {
    out.insert(out.end(), level.begin(), level.end());
    std::vector<Word> next;
    for (const Word& w : level) {
      for (std::size_t j : g.successors(*g.index_of(w.back()))) {
        Word ext = w;
        ext.push_back(g.symbol(j));
        next.push_back(ext);
      }
    }
    level = std::move(next);
  }
  return out;
}

// Random stochastic matrix on the edges of g.
inline std::vector<Transition> random_transitions(const FiniteGraph& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::vector<Transition> P;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double total = 0.0;
    std::vector<Transition> row;
    for (std::size_t j : g.successors(i)) {
      row.push_back({g.symbol(i), g.symbol(j), weight(rng)});
      total += row.back().p;
    }
    for (Transition& t : row) {
      t.p /= total;
      P.push_back(t);
    }
  }
  return P;
}

struct ConvergentMarkovSequence {
  MeasureSequence sequence;
  std::shared_ptr<const MarkovMeasure> limit;
};

// mu_n has transitions (1 - 2^-n) P + 2^-n Q_n with random Q_n on the edges
// of g. P is either a random chain on g or, when `degenerate`, the cycle
// 1 -> 2 -> ... -> 1 that random_transitive_graph always contains.
inline ConvergentMarkovSequence convergent_markov_sequence(const FiniteGraph& g, std::mt19937_64& rng,
                                                          bool degenerate, std::size_t steps = 20) {
  std::vector<Transition> limit;
  if (degenerate) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j : g.successors(i)) {
        const bool on_cycle = g.symbol(j) == g.symbol(i) % g.size() + 1;
        limit.push_back({g.symbol(i), g.symbol(j), on_cycle ? 1.0 : 0.0});
      }
    }
  } else {
    limit = random_transitions(g, rng);
  }
  ConvergentMarkovSequence out;
  out.limit = std::make_shared<MarkovMeasure>(MarkovMeasure::from_transitions(g, limit));
  out.sequence.tag = degenerate ? "to-cycle" : "to-chain";
  for (std::size_t n = 1; n <= steps; ++n) {
    const double eps = std::ldexp(1.0, -static_cast<int>(n));
    std::vector<Transition> P = random_transitions(g, rng);
    for (std::size_t k = 0; k < P.size(); ++k) P[k].p = (1 - eps) * limit[k].p + eps * P[k].p;
    out.sequence.measures.push_back(std::make_shared<MarkovMeasure>(MarkovMeasure::from_transitions(g, P)));
  }
  return out;
}

}  // namespace cms::testing
