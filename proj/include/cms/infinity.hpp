#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cms/graph.hpp"
#include "cms/measures.hpp"

namespace cms {

// Outcome of a checked inequality LHS <= RHS.
struct ExperimentReport {
  std::string name;
  nlohmann::json parameters = nlohmann::json::object();
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  double tolerance = 1e-9;
  bool pass = false;   // slack >= -tolerance
  std::vector<double> trace;  // per-step values, usually entropies
  nlohmann::json detail = nlohmann::json::object();

  void settle();  // sets slack and pass from lhs, rhs, tolerance
  nlohmann::json to_json() const;
};

// Max over the final third: the proxy for limsup of a finite sequence.
double limsup_proxy(const std::vector<double>& values);

// Loop cutoffs k_n = 8^n, n = 1..steps (steps <= 20).
std::vector<std::uint64_t> default_drift_schedule(std::size_t steps = 20);

// Maximal-entropy measure of a recurrent loop system.
MeasurePtr loop_mme(const LoopSystem& sys);
// mu_n = maximal-entropy measure of the loops of length >= k_n.
MeasureSequence drift_sequence(const LoopSystem& sys, const std::vector<std::uint64_t>& schedule);
MeasureSequence constant_sequence(const MeasurePtr& mu, std::size_t length);
// w * base + (1 - w) * drift_n.
MeasureSequence mixture_sequence(const MeasurePtr& base, const MeasureSequence& drift, double w);

// Probe cylinders used when checking limits: [a] for a <= count and [1 1].
std::vector<Word> default_probe_cylinders(const CmsGraph& g, Symbol count = 8);

struct HInfReport {
  std::vector<std::uint64_t> schedule;
  std::vector<double> entropies;
  double value = 0.0;  // limsup proxy: a lower bound for the entropy at infinity
  LimitReport limit;

  nlohmann::json to_json() const;
};

// Raises NotDrifting for finite graphs or when the drift sequence keeps mass.
HInfReport h_inf_lower_bound(const CmsGraph& g, const std::vector<std::uint64_t>& schedule,
                             double tolerance = 1e-2);

// Gurevich pressure of -t * 1_[F] with F = {1..q}: exact for loop systems
// (weighted loop generating function) and finite graphs (weighted spectral
// radius).
double pressure_indicator(const CmsGraph& g, Symbol q, double t);
// Its limit as t -> infinity: the entropy of the part avoiding F.
double pressure_indicator_limit(const CmsGraph& g, Symbol q);

std::vector<double> default_t_grid();

struct BInfCurve {
  std::vector<Symbol> qs;
  std::vector<double> lambdas;
  std::vector<double> ts;
  std::vector<std::vector<double>> pressure;  // [q index][t index]
  std::vector<std::vector<double>> dual;      // [q index][lambda index]: min_t P + t lambda
  std::vector<double> pressure_limit;         // t -> infinity, per q
  double headline = 0.0;  // dual at the largest F and the smallest lambda
  std::string caveat;

  nlohmann::json to_json() const;
};

// Upper bound for b_inf by weak duality; NoEscape when every measure is
// forced onto the largest F.
BInfCurve b_inf_estimate(const CmsGraph& g, const std::vector<Symbol>& qs,
                         const std::vector<double>& lambdas, const std::vector<double>& ts);

struct LimitOptions {
  std::vector<Word> cylinders;  // empty: default probes
  std::vector<BigInt> ladder;   // empty: default mass ladder
  double limit_tolerance = 1e-2;
  double tolerance = 1e-9;
};

// limsup h(mu_n) <= |mu| h(mu/|mu|) + (1 - |mu|) delta_inf.
ExperimentReport verify_main_inequality(const CmsGraph& g, const MeasureSequence& seq,
                                        double delta_inf_value, const LimitOptions& options = {});

// |mu| >= (c - delta_inf) / (h_top - delta_inf) for sequences with entropy >= c.
ExperimentReport mass_bound_check(const CmsGraph& g, const MeasureSequence& seq, double c,
                                  double delta_inf_value, double h_top,
                                  const LimitOptions& options = {});

enum class SeriesVerdict { kConvergent, kDiverging, kInconclusive };
std::string series_verdict_name(SeriesVerdict v);

struct DimensionSeries {
  std::uint64_t m = 0;
  Symbol q = 0;
  double t = 0.0;
  double s = 0.0;  // t log 2
  std::vector<double> terms;         // e^{-s l} z_{l-2}(m,q) for l = 2..l_max
  std::vector<double> partial_sums;
  std::optional<std::size_t> small_from;  // first l after which every term < 1e-6
  SeriesVerdict verdict = SeriesVerdict::kInconclusive;

  nlohmann::json to_json() const;
};

DimensionSeries dimension_series(const CmsGraph& g, std::uint64_t m, Symbol q, double t,
                                 std::size_t l_max);

// Finite-range maximal-entropy measures (loops of length <= L) have entropy
// tending to h_top; their cylinder masses must approach those of the
// maximal-entropy measure.
ExperimentReport mme_stability(const CmsGraph& g, const std::vector<std::uint64_t>& max_lengths,
                               const std::vector<Word>& cylinders, double tolerance = 1e-3);

}  // namespace cms
