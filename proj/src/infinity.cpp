#include "cms/infinity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "cms/counting.hpp"
#include "cms/errors.hpp"
#include "cms/json_number.hpp"
#include "cms/loop_gf.hpp"
#include "cms/thermo.hpp"

namespace cms {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Window factor for drift measures of systems whose tails carry no
// maximal-entropy measure.
constexpr std::uint64_t kDriftWindow = 64;

std::vector<double> entropies_of(const MeasureSequence& seq) {
  std::vector<double> out;
  out.reserve(seq.measures.size());
  for (const auto& m : seq.measures) out.push_back(m->entropy());
  return out;
}

LimitReport limit_of(const CmsGraph& g, const MeasureSequence& seq, const LimitOptions& options) {
  const std::vector<Word> cylinders =
      options.cylinders.empty() ? default_probe_cylinders(g) : options.cylinders;
  const std::vector<BigInt> ladder =
      options.ladder.empty() ? default_mass_ladder(g) : options.ladder;
  const FiniteGraph* finite = g.is_finite() ? &g.finite_graph() : nullptr;
  return cylinder_limit(seq, cylinders, options.limit_tolerance, ladder, finite);
}

}  // namespace

void ExperimentReport::settle() {
  slack = rhs - lhs;
  if (std::isnan(slack)) slack = lhs == rhs ? 0.0 : kNegInf;
  pass = slack >= -tolerance;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json steps = nlohmann::json::array();
  for (double v : trace) steps.push_back(json_number(v));
  return {{"name", name},           {"parameters", parameters},
          {"lhs", json_number(lhs)}, {"rhs", json_number(rhs)},
          {"slack", json_number(slack)}, {"tolerance", tolerance},
          {"pass", pass},           {"trace", steps},
          {"detail", detail}};
}

double limsup_proxy(const std::vector<double>& values) {
  if (values.empty()) return kNegInf;
  const std::size_t tail = std::max<std::size_t>(1, (values.size() + 2) / 3);
  return *std::max_element(values.end() - static_cast<std::ptrdiff_t>(tail), values.end());
}

std::vector<std::uint64_t> default_drift_schedule(std::size_t steps) {
  if (steps == 0 || steps > 20) throw CmsError(ErrorCode::kValidation, "drift steps must be in 1..20");
  std::vector<std::uint64_t> out;
  std::uint64_t k = 1;
  for (std::size_t n = 1; n <= steps; ++n) {
    k *= 8;
    out.push_back(k);
  }
  return out;
}

MeasurePtr loop_mme(const LoopSystem& sys) { return std::make_shared<LoopMarkovMeasure>(sys, LengthRange{}); }

MeasureSequence drift_sequence(const LoopSystem& sys, const std::vector<std::uint64_t>& schedule) {
  if (!sys.infinite()) {
    throw CmsError(ErrorCode::kNotDrifting, "a system with finitely many loops has no escaping sequence");
  }
  MeasureSequence seq;
  seq.tag = "drift";
  std::uint64_t previous = 0;
  for (std::uint64_t k : schedule) {
    if (k <= previous) throw CmsError(ErrorCode::kValidation, "drift schedule must increase");
    previous = k;
    try {
      seq.measures.push_back(std::make_shared<LoopMarkovMeasure>(sys, LengthRange{k, std::nullopt}));
    } catch (const CmsError& e) {
      if (e.code() != ErrorCode::kPreconditionFailed) throw;
      seq.measures.push_back(
          std::make_shared<LoopMarkovMeasure>(sys, LengthRange{k, k * kDriftWindow}));
    }
  }
  return seq;
}

MeasureSequence constant_sequence(const MeasurePtr& mu, std::size_t length) {
  MeasureSequence seq;
  seq.tag = "constant";
  seq.measures.assign(length, mu);
  return seq;
}

MeasureSequence mixture_sequence(const MeasurePtr& base, const MeasureSequence& drift, double w) {
  MeasureSequence seq;
  seq.tag = "mixture";
  for (const auto& m : drift.measures) {
    seq.measures.push_back(std::make_shared<MeasureMixture>(
        std::vector<std::pair<double, MeasurePtr>>{{w, base}, {1.0 - w, m}}));
  }
  return seq;
}

std::vector<Word> default_probe_cylinders(const CmsGraph& g, Symbol count) {
  std::vector<Word> out;
  for (Symbol a = 1; a <= count; ++a) {
    if (g.has_symbol(a)) out.push_back({a});
  }
  if (g.has_edge(1, 1)) out.push_back({1, 1});
  return out;
}

// ---------------------------------------------------------------------------
// Drifting sequences

nlohmann::json HInfReport::to_json() const {
  nlohmann::json h = nlohmann::json::array();
  for (double v : entropies) h.push_back(json_number(v));
  return {{"value", json_number(value)},
          {"schedule", schedule},
          {"entropies", h},
          {"limit", limit.to_json()},
          {"caveat", "limsup proxied by the max over the final third of the schedule"}};
}

HInfReport h_inf_lower_bound(const CmsGraph& g, const std::vector<std::uint64_t>& schedule,
                             double tolerance) {
  if (g.is_finite()) {
    throw CmsError(ErrorCode::kNotDrifting, "a finite graph has no sequence converging to zero");
  }
  if (schedule.size() < 3) throw CmsError(ErrorCode::kValidation, "drift schedule needs >= 3 steps");
  const MeasureSequence seq = drift_sequence(g.loops(), schedule);
  HInfReport report;
  report.schedule = schedule;
  report.entropies = entropies_of(seq);
  report.value = limsup_proxy(report.entropies);
  report.limit = cylinder_limit(seq, default_probe_cylinders(g), tolerance, default_mass_ladder(g));
  bool vanishing = report.limit.non_convergent.empty() && report.limit.mass <= tolerance;
  for (const auto& c : report.limit.cylinders) vanishing = vanishing && c.limit <= tolerance;
  if (!vanishing) {
    throw CmsError(ErrorCode::kNotDrifting, "drift sequence does not converge to the zero measure");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Indicator pressures and b_inf

double pressure_indicator(const CmsGraph& g, Symbol q, double t) {
  if (!(t >= 0.0)) throw CmsError(ErrorCode::kValidation, "t must be >= 0");
  if (q == 0) throw CmsError(ErrorCode::kValidation, "F = {1..q} needs q >= 1");
  if (g.is_loop_system()) return LoopGF::weighted(g.loops(), q, t).log_spectral();
  const FiniteGraph& graph = g.finite_graph();
  std::vector<double> weight(graph.size(), 1.0);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (graph.symbol(i) <= q) weight[i] = std::exp(-t);
  }
  return log_spectral_radius(graph, weight);
}

double pressure_indicator_limit(const CmsGraph& g, Symbol q) {
  // Every loop passes through the base, so only the growth survives.
  if (g.is_loop_system()) return loop_system_delta_inf(g.loops());
  const FiniteGraph& graph = g.finite_graph();
  std::vector<Symbol> keep;
  for (Symbol s : graph.symbols()) {
    if (s > q) keep.push_back(s);
  }
  return log_spectral_radius(graph.induced(keep));
}

std::vector<double> default_t_grid() {
  std::vector<double> out{0.0};
  for (int k = -6; k <= 12; ++k) out.push_back(std::pow(2.0, k / 2.0));
  return out;
}

nlohmann::json BInfCurve::to_json() const {
  auto matrix = [](const std::vector<std::vector<double>>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json r = nlohmann::json::array();
      for (double v : row) r.push_back(json_number(v));
      out.push_back(r);
    }
    return out;
  };
  nlohmann::json limits = nlohmann::json::array();
  for (double v : pressure_limit) limits.push_back(json_number(v));
  return {{"headline", json_number(headline)},
          {"qs", qs},
          {"lambdas", lambdas},
          {"ts", ts},
          {"pressure", matrix(pressure)},
          {"dual", matrix(dual)},
          {"pressure_limit", limits},
          {"caveat", caveat}};
}

BInfCurve b_inf_estimate(const CmsGraph& g, const std::vector<Symbol>& qs,
                         const std::vector<double>& lambdas, const std::vector<double>& ts) {
  if (qs.empty() || lambdas.empty() || ts.empty()) {
    throw CmsError(ErrorCode::kValidation, "b_inf ladders must be nonempty");
  }
  for (double l : lambdas) {
    if (!(l > 0.0)) throw CmsError(ErrorCode::kValidation, "lambda must be > 0");
  }
  BInfCurve curve;
  curve.qs = qs;
  std::sort(curve.qs.begin(), curve.qs.end());
  curve.lambdas = lambdas;
  std::sort(curve.lambdas.begin(), curve.lambdas.end(), std::greater<>());
  curve.ts = ts;
  std::sort(curve.ts.begin(), curve.ts.end());
  if (g.is_finite() && pressure_indicator_limit(g, curve.qs.back()) == kNegInf) {
    throw CmsError(ErrorCode::kNoEscape,
                   "every invariant measure gives F positive mass: b_inf is -inf");
  }
  for (Symbol q : curve.qs) {
    std::vector<double> row;
    for (double t : curve.ts) row.push_back(pressure_indicator(g, q, t));
    std::vector<double> dual_row;
    for (double lambda : curve.lambdas) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < curve.ts.size(); ++i) best = std::min(best, row[i] + curve.ts[i] * lambda);
      dual_row.push_back(best);
    }
    curve.pressure.push_back(std::move(row));
    curve.dual.push_back(std::move(dual_row));
    curve.pressure_limit.push_back(pressure_indicator_limit(g, q));
  }
  curve.headline = curve.dual.back().back();
  curve.caveat =
      "upper bound by weak duality over a finite t grid; the smallest lambda stands in for "
      "lambda -> 0";
  return curve;
}

// ---------------------------------------------------------------------------
// Verifiers

ExperimentReport verify_main_inequality(const CmsGraph& g, const MeasureSequence& seq,
                                        double delta_inf_value, const LimitOptions& options) {
  ExperimentReport report;
  report.name = "main-inequality";
  report.tolerance = options.tolerance;
  report.trace = entropies_of(seq);
  report.lhs = limsup_proxy(report.trace);
  const LimitReport limit = limit_of(g, seq, options);
  if (!limit.non_convergent.empty()) {
    throw CmsError(ErrorCode::kNonConvergent, "measure sequence does not converge on the probe cylinders");
  }
  double mass = limit.mass;
  double h_normalized = 0.0;
  if (mass > options.limit_tolerance) {
    if (!limit.normalized) {
      throw CmsError(ErrorCode::kNonConvergent, "limit measure could not be identified");
    }
    h_normalized = limit.normalized->entropy();
  } else {
    mass = 0.0;
  }
  if (std::isinf(delta_inf_value) && delta_inf_value < 0 && mass >= 1.0 - options.limit_tolerance) {
    mass = 1.0;
  }
  report.rhs = mass == 1.0 ? h_normalized
                           : mass * h_normalized + (1.0 - mass) * delta_inf_value;
  report.settle();
  report.parameters = {{"sequence", seq.tag},
                       {"length", seq.measures.size()},
                       {"delta_inf", json_number(delta_inf_value)},
                       {"limit_tolerance", options.limit_tolerance}};
  report.detail = {{"mass", mass},
                   {"normalized_entropy", json_number(h_normalized)},
                   {"limit", limit.to_json()}};
  return report;
}

ExperimentReport mass_bound_check(const CmsGraph& g, const MeasureSequence& seq, double c,
                                  double delta_inf_value, double h_top,
                                  const LimitOptions& options) {
  if (!(h_top > delta_inf_value)) {
    throw CmsError(ErrorCode::kPreconditionFailed, "the mass bound needs h_top > delta_inf (SPR)");
  }
  if (!(c >= delta_inf_value) || c > h_top) {
    throw CmsError(ErrorCode::kPreconditionFailed, "entropy floor c must lie in [delta_inf, h_top]");
  }
  ExperimentReport report;
  report.name = "mass-bound";
  report.tolerance = options.tolerance;
  report.trace = entropies_of(seq);
  for (double h : report.trace) {
    if (h < c - 1e-12) {
      throw CmsError(ErrorCode::kPreconditionFailed, "a measure in the sequence has entropy below c");
    }
  }
  const LimitReport limit = limit_of(g, seq, options);
  report.lhs = std::isinf(delta_inf_value) ? 1.0 : (c - delta_inf_value) / (h_top - delta_inf_value);
  report.rhs = limit.mass;
  report.settle();
  report.parameters = {{"sequence", seq.tag},
                       {"length", seq.measures.size()},
                       {"c", c},
                       {"delta_inf", json_number(delta_inf_value)},
                       {"h_top", h_top}};
  report.detail = {{"bound", report.lhs}, {"mass", limit.mass}, {"limit", limit.to_json()}};
  return report;
}

// ---------------------------------------------------------------------------
// Dimension series

std::string series_verdict_name(SeriesVerdict v) {
  switch (v) {
    case SeriesVerdict::kConvergent:
      return "Convergent";
    case SeriesVerdict::kDiverging:
      return "Diverging";
    case SeriesVerdict::kInconclusive:
      break;
  }
  return "Inconclusive";
}

nlohmann::json DimensionSeries::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    rows.push_back({{"l", i + 2}, {"term", terms[i]}, {"partial_sum", json_number(partial_sums[i])}});
  }
  nlohmann::json out = {{"m", m}, {"q", q}, {"t", t}, {"s", s},
                        {"verdict", series_verdict_name(verdict)}, {"terms", rows}};
  out["small_from"] = small_from ? nlohmann::json(*small_from) : nlohmann::json(nullptr);
  return out;
}

DimensionSeries dimension_series(const CmsGraph& g, std::uint64_t m, Symbol q, double t,
                                 std::size_t l_max) {
  if (!(t > 0.0)) throw CmsError(ErrorCode::kValidation, "t must be > 0");
  if (l_max < 4) throw CmsError(ErrorCode::kValidation, "l_max must be >= 4");
  DimensionSeries out;
  out.m = m;
  out.q = q;
  out.t = t;
  out.s = t * std::log(2.0);
  const CountSeries z = escape_count(g, m, q, l_max - 2);
  double sum = 0.0;
  std::vector<std::pair<double, double>> logs;  // (l, log term) over nonzero terms
  for (std::size_t l = 2; l <= l_max; ++l) {
    const BigInt& count = z.at(l - 2);
    double term = 0.0;
    if (count > 0) {
      const double log_term = log_big(count) - out.s * static_cast<double>(l);
      term = std::exp(log_term);
      logs.emplace_back(static_cast<double>(l), log_term);
    }
    out.terms.push_back(term);
    sum += term;
    out.partial_sums.push_back(sum);
  }
  for (std::size_t i = out.terms.size(); i-- > 0;) {
    if (out.terms[i] >= 1e-6) break;
    out.small_from = i + 2;
  }
  if (logs.empty()) {
    out.verdict = SeriesVerdict::kConvergent;
    return out;
  }
  // Trend of log terms over the last third of the window.
  const double cut = static_cast<double>(l_max) - static_cast<double>(l_max - 2) / 3.0;
  std::vector<std::pair<double, double>> tail;
  for (const auto& point : logs) {
    if (point.first >= cut) tail.push_back(point);
  }
  const double slope = affine_fit(tail).slope;
  const std::size_t first_tail = static_cast<std::size_t>(std::ceil(cut)) - 2;
  bool increasing = true;
  for (std::size_t i = first_tail + 1; i < out.partial_sums.size(); ++i) {
    increasing = increasing && out.partial_sums[i] >= out.partial_sums[i - 1];
  }
  const bool strictly = out.partial_sums.back() > out.partial_sums[first_tail];
  if (out.small_from && slope < 0.0) {
    out.verdict = SeriesVerdict::kConvergent;
  } else if (slope >= -1e-3 && increasing && strictly) {
    out.verdict = SeriesVerdict::kDiverging;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stability of the maximal-entropy measure

ExperimentReport mme_stability(const CmsGraph& g, const std::vector<std::uint64_t>& max_lengths,
                               const std::vector<Word>& cylinders, double tolerance) {
  if (!g.is_loop_system()) throw CmsError(ErrorCode::kValidation, "MME stability runs on loop systems");
  if (max_lengths.empty()) throw CmsError(ErrorCode::kValidation, "empty length schedule");
  const LoopMarkovMeasure mme(g.loops(), {});
  ExperimentReport report;
  report.name = "mme-stability";
  report.tolerance = 0.0;
  nlohmann::json steps = nlohmann::json::array();
  double deviation = 0.0;
  for (std::uint64_t L : max_lengths) {
    const LoopMarkovMeasure mu(g.loops(), {1, L});
    deviation = 0.0;
    for (const Word& w : cylinders) deviation = std::max(deviation, std::abs(mu.cylinder_mass(w) - mme.cylinder_mass(w)));
    report.trace.push_back(deviation);
    steps.push_back({{"max_length", L}, {"entropy", mu.entropy()}, {"deviation", deviation}});
  }
  report.lhs = deviation;
  report.rhs = tolerance;
  report.settle();
  report.parameters = {{"max_lengths", max_lengths}, {"cylinders", cylinders.size()}};
  report.detail = {{"h_top", mme.entropy()}, {"steps", steps}};
  return report;
}

}  // namespace cms
