#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cms/counting.hpp"
#include "cms/graph.hpp"
#include "cms/loop_gf.hpp"

namespace cms {

// log of the Perron root of a finite graph's adjacency matrix (-inf when the
// graph carries no cycle).
double log_spectral_radius(const FiniteGraph& graph);
// Same for the matrix with row i scaled by row_weight[i] >= 0.
double log_spectral_radius(const FiniteGraph& graph, std::span<const double> row_weight);

struct TruncationStep {
  Symbol q = 0;
  double value = 0.0;  // tail-max growth of loop counts inside K_q
};

struct EntropyReport {
  GrowthEstimate estimate;  // affine fit of log Z_n(0,a)
  Symbol vertex = 1;
  std::size_t n_max = 0;
  std::vector<TruncationStep> truncation_trace;
  bool transitive = true;
  // Loop systems: log(1/x_c) from the loop generating function.
  std::optional<double> exact;
  double tolerance = 0.0;
  bool agrees = true;

  // Exact value when available, else the count-based estimate.
  double value() const { return exact.value_or(estimate.value); }
  nlohmann::json to_json() const;
};

EntropyReport gurevich_entropy(const CmsGraph& g, Symbol a, std::size_t n_max);

struct BigDeltaReport {
  std::vector<std::pair<Symbol, GrowthEstimate>> per_vertex;
  double value = 0.0;  // min over the listed vertices
  // Loop systems at the base: log(growth) (-inf for finitely many loops).
  std::optional<double> exact_base;

  nlohmann::json to_json() const;
};

GrowthEstimate big_delta_inf_at(const CmsGraph& g, Symbol a, std::size_t n_max);
BigDeltaReport big_delta_inf(const CmsGraph& g, const std::vector<Symbol>& vertices,
                             std::size_t n_max);

struct InfinityReport {
  std::vector<std::uint64_t> Ms;
  std::vector<Symbol> qs;
  std::size_t n_max = 0;
  std::vector<std::vector<GrowthEstimate>> cells;  // [M index][q index]
  double headline = 0.0;                           // min over the grid
  std::uint64_t argmin_M = 0;
  Symbol argmin_q = 0;
  std::string caveat;
  // Loop systems: the exact value log(growth) (-inf for finitely many loops).
  std::optional<double> exact;

  nlohmann::json to_json() const;
  std::string to_csv() const;  // rows M, columns q
};

// delta_inf(M,q) over a grid; cells are independent and run on `jobs` threads.
InfinityReport delta_inf(const CmsGraph& g, const std::vector<std::uint64_t>& Ms,
                         const std::vector<Symbol>& qs, std::size_t n_max, unsigned jobs = 1);

// Exact value of the entropy at infinity of a loop system: every escaping
// word spends almost all of its time inside long loops, so it equals
// log(growth) for infinite systems and -inf otherwise.
double loop_system_delta_inf(const LoopSystem& sys);

enum class RecurrenceClass { kTransient, kNullRecurrent, kPositiveRecurrent, kInconclusive };
std::string recurrence_class_name(RecurrenceClass c);

struct RecurrenceVerdict {
  RecurrenceClass cls = RecurrenceClass::kInconclusive;
  bool exact = false;
  std::optional<double> radius;           // R = 1/growth, nullopt when infinite
  std::optional<Interval> f_at_radius;    // f(R)
  std::optional<double> root;             // x*
  std::optional<Interval> mean;           // sum l a_l x*^l
  double h_top = 0.0;
  std::string evidence;

  nlohmann::json to_json() const;
};

RecurrenceVerdict classify(const CmsGraph& g, Symbol a = 1);

enum class SprStatus { kSpr, kNotSpr, kInconclusive };
std::string spr_status_name(SprStatus s);

struct SprOptions {
  double margin_threshold = 0.02;
  std::size_t n_max = 160;
  std::vector<std::uint64_t> Ms{16, 32};
  std::vector<Symbol> qs{1, 2, 4};
  unsigned jobs = 1;
};

struct SprVerdict {
  SprStatus status = SprStatus::kInconclusive;
  double h_top = 0.0;
  double delta_inf_estimate = 0.0;
  double margin = 0.0;  // h_top - delta_inf estimate
  std::optional<double> exact_big_delta;
  std::optional<bool> exact_spr;  // from the generating function alone
  double margin_threshold = 0.02;

  nlohmann::json to_json() const;
};

SprVerdict is_spr(const CmsGraph& g, const SprOptions& options = {});

}  // namespace cms
