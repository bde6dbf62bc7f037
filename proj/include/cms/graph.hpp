#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "cms/bigint.hpp"

namespace cms {

// Alphabet symbols are identified with the positive integers.
using Symbol = std::uint64_t;
using Word = std::vector<Symbol>;

struct Edge {
  Symbol from = 0;
  Symbol to = 0;
  auto operator<=>(const Edge&) const = default;
};

// Finite directed graph over an explicit set of symbols. Vertices are stored
// sorted by symbol and adjacency lists are sorted, so every traversal below
// is deterministic and lexicographic.
class FiniteGraph {
 public:
  FiniteGraph() = default;
  FiniteGraph(std::vector<Symbol> symbols, std::vector<Edge> edges);

  std::size_t size() const { return symbols_.size(); }
  bool empty() const { return symbols_.empty(); }
  std::span<const Symbol> symbols() const { return symbols_; }
  Symbol symbol(std::size_t v) const { return symbols_[v]; }
  std::optional<std::size_t> index_of(Symbol s) const;
  bool contains(Symbol s) const { return index_of(s).has_value(); }

  std::span<const std::size_t> successors(std::size_t v) const { return succ_[v]; }
  std::span<const std::size_t> predecessors(std::size_t v) const { return pred_[v]; }
  bool has_edge(Symbol a, Symbol b) const;
  std::size_t edge_count() const { return edge_count_; }
  std::vector<Edge> edges() const;

  bool strongly_connected() const;
  // gcd of cycle lengths of a strongly connected graph; 0 when acyclic.
  std::size_t period() const;

  FiniteGraph induced(std::span<const Symbol> keep) const;
  // Induced subgraph on symbols <= cutoff.
  FiniteGraph restrict_to(Symbol cutoff) const;

  bool operator==(const FiniteGraph& other) const {
    return symbols_ == other.symbols_ && succ_ == other.succ_;
  }

 private:
  std::vector<Symbol> symbols_;
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
  std::size_t edge_count_ = 0;
};

struct LoopSpec {
  std::uint32_t length = 1;
  BigInt multiplicity;
};

// a_l = floor(coeff * growth^l / l^power) for l >= from_length.
struct GeometricTail {
  std::uint32_t from_length = 1;
  double coeff = 0.0;
  double growth = 1.0;
  std::uint32_t power = 0;
};

// Integer multiplicities chosen greedily so that sum_l a_l base^-l equals
// exactly 1 in the limit with a_l ~ base^l / l^2:
//   a_l = floor(base^l * l/(l+1)) - base * floor(base^(l-1) * (l-1)/l).
struct GreedyCriticalTail {
  std::uint32_t base = 2;
};

using LoopTail = std::variant<std::monostate, GeometricTail, GreedyCriticalTail>;

// One loop in canonical position. Internal vertices carry the consecutive
// symbols first_index .. first_index + length - 2; the self-loop (length 1)
// has none and first_index == 0.
struct LoopRef {
  std::uint32_t length = 1;
  BigInt ordinal;  // 0-based position among loops of this length
  Symbol first_index = 0;

  Symbol internal(std::uint32_t offset) const { return first_index + offset - 1; }
};

// A base vertex (symbol 1) with a_l distinct simple loops of each length l.
class LoopSystem {
 public:
  static constexpr Symbol kBase = 1;

  LoopSystem(std::vector<LoopSpec> loops, LoopTail tail);

  const std::vector<LoopSpec>& explicit_loops() const { return loops_; }
  const LoopTail& tail() const { return tail_; }

  BigInt explicit_multiplicity(std::uint32_t length) const;
  BigInt tail_multiplicity(std::uint32_t length) const;
  BigInt multiplicity(std::uint32_t length) const {
    return explicit_multiplicity(length) + tail_multiplicity(length);
  }
  // Entry l holds a_l for 1 <= l <= max_length; entry 0 is zero.
  std::vector<BigInt> multiplicities(std::uint32_t max_length) const;

  // Longest loop when finitely many loops exist.
  std::optional<std::uint32_t> max_length() const { return max_length_; }
  bool infinite() const { return !max_length_.has_value(); }
  // Exponential growth base of a_l (1 for finite systems); the loop
  // generating function has radius 1/growth().
  double growth() const { return growth_; }
  // True when a_l = coeff * growth^l exactly (an integer) for every tail
  // length, so tail series have closed forms.
  bool exact_geometric_tail() const { return exact_tail_; }

  // Loops with an internal vertex <= cutoff (and the self-loop, if any), in
  // canonical order.
  std::vector<LoopRef> loops_up_to(Symbol cutoff) const;
  // Last symbol used by loops of length <= length (1 if none).
  BigInt last_index_through(std::uint32_t length) const;

  struct Location {
    std::uint32_t length = 0;  // 0 for the base vertex
    BigInt ordinal;
    std::uint32_t offset = 0;  // 1..length-1 for internal vertices
  };
  std::optional<Location> locate(Symbol s) const;

  // Total number of symbols, nullopt when infinite.
  std::optional<BigInt> symbol_count() const;

 private:
  std::vector<LoopSpec> loops_;
  LoopTail tail_;
  std::optional<std::uint32_t> max_length_;
  double growth_ = 1.0;
  bool exact_tail_ = false;
};

// A countable Markov shift presentation: either a finite graph on symbols
// 1..S or a loop system. Immutable after construction.
class CmsGraph {
 public:
  static CmsGraph finite(FiniteGraph graph);
  static CmsGraph loop_system(LoopSystem system);

  bool is_finite() const { return std::holds_alternative<FiniteGraph>(repr_); }
  bool is_loop_system() const { return std::holds_alternative<LoopSystem>(repr_); }
  const FiniteGraph& finite_graph() const { return std::get<FiniteGraph>(repr_); }
  const LoopSystem& loops() const { return std::get<LoopSystem>(repr_); }

  bool has_symbol(Symbol s) const;
  bool has_edge(Symbol a, Symbol b) const;
  bool is_admissible(std::span<const Symbol> word) const;
  std::optional<BigInt> symbol_count() const;
  // Loop systems are transitive by construction.
  bool transitive() const;

 private:
  explicit CmsGraph(std::variant<FiniteGraph, LoopSystem> repr) : repr_(std::move(repr)) {}
  std::variant<FiniteGraph, LoopSystem> repr_;
};

// Induced finite subgraph on symbols {1..cutoff} (the compact part K_q).
struct Truncation {
  FiniteGraph graph;
  Symbol cutoff = 0;
  bool empty() const { return graph.empty(); }
};

Truncation truncate(const CmsGraph& g, Symbol q);
Truncation truncate(const Truncation& t, Symbol q);

// Admissible words of `length` symbols from a to b, lexicographic.
std::vector<Word> enumerate_words(const Truncation& t, Symbol a, Symbol b, std::size_t length,
                                  std::size_t cap = std::size_t{1} << 20);

}  // namespace cms
