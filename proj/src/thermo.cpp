#include "cms/thermo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "cms/errors.hpp"
#include "cms/json_number.hpp"

namespace cms {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();


// Largest q in the truncation trace of a loop system.
constexpr Symbol kTraceSymbolLimit = 4096;

}  // namespace

double log_spectral_radius(const FiniteGraph& graph) {
  return log_spectral_radius(graph, std::vector<double>(graph.size(), 1.0));
}

double log_spectral_radius(const FiniteGraph& graph, std::span<const double> row_weight) {
  // rho(A + I) = rho(A) + 1 for nonnegative A, and A + I is aperiodic on
  // every class, so plain power iteration converges.
  const std::size_t n = graph.size();
  if (n == 0 || graph.edge_count() == 0) return kNegInf;
  std::vector<double> v(n, 1.0);
  std::vector<double> w(n);
  double rho = 0.0;
  for (int iter = 0; iter < 200000; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j : graph.successors(i)) sum += v[j];
      w[i] = v[i] + row_weight[i] * sum;
    }
    const double norm = *std::max_element(w.begin(), w.end());
    for (std::size_t i = 0; i < n; ++i) w[i] /= norm;
    const double previous = rho;
    rho = norm;
    std::swap(v, w);
    if (iter > 10 && std::abs(rho - previous) <= 1e-15 * rho) break;
  }
  const double spectral = rho - 1.0;
  return spectral <= 1e-12 ? kNegInf : std::log(spectral);
}

// ---------------------------------------------------------------------------
// Gurevich entropy

nlohmann::json EntropyReport::to_json() const {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& step : truncation_trace) trace.push_back({{"q", step.q}, {"value", json_number(step.value)}});
  nlohmann::json out = {{"h_top", json_number(value())},
                        {"estimate", estimate.to_json()},
                        {"vertex", vertex},
                        {"n_max", n_max},
                        {"transitive", transitive},
                        {"truncation_trace", trace},
                        {"tolerance", tolerance},
                        {"agrees", agrees}};
  out["exact"] = exact ? json_number(*exact) : nlohmann::json(nullptr);
  return out;
}

EntropyReport gurevich_entropy(const CmsGraph& g, Symbol a, std::size_t n_max) {
  if (n_max < 2) throw CmsError(ErrorCode::kValidation, "n_max must be >= 2");
  EntropyReport report;
  report.vertex = a;
  report.n_max = n_max;
  report.transitive = g.transitive();
  const CountSeries z = loop_count(g, a, n_max);
  report.estimate = growth_rate(z, GrowthMethod::kAffineFit);
  const Window window = report.estimate.window;

  std::vector<Symbol> ladder;
  if (g.is_finite()) {
    const Symbol S = g.finite_graph().size();
    for (Symbol q = 1; q < S; q *= 2) ladder.push_back(q);
    ladder.push_back(S);
  } else {
    for (std::uint32_t L = 1; L <= n_max; L *= 2) {
      const BigInt last = g.loops().last_index_through(L);
      if (last > kTraceSymbolLimit) break;
      ladder.push_back(last.convert_to<Symbol>());
    }
  }
  for (Symbol q : ladder) {
    if (q < a) continue;
    const Truncation t = truncate(g, q);
    TruncationStep step{q, kNegInf};
    if (t.graph.edge_count() > 0) {
      const CountSeries zq = loop_count(CmsGraph::finite(t.graph), a, window.hi);
      step.value = growth_rate(zq, GrowthMethod::kTailMax, window).value;
    }
    if (!report.truncation_trace.empty() && report.truncation_trace.back().q == q) continue;
    report.truncation_trace.push_back(step);
  }

  if (g.is_loop_system()) {
    const LoopGF gf(g.loops());
    const double h = gf.log_spectral();
    report.exact = h;
    report.tolerance = report.estimate.residual + 2.0 / static_cast<double>(n_max) * std::abs(h);
    report.agrees = std::abs(report.estimate.value - h) <= report.tolerance;
  } else {
    report.exact = log_spectral_radius(g.finite_graph());
    report.tolerance = report.estimate.residual + 2.0 / static_cast<double>(n_max) *
                                                      std::abs(*report.exact);
    report.agrees = std::isinf(*report.exact)
                        ? report.estimate.is_neg_inf()
                        : std::abs(report.estimate.value - *report.exact) <= report.tolerance;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Delta_inf

nlohmann::json BigDeltaReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [a, est] : per_vertex) rows.push_back({{"vertex", a}, {"estimate", est.to_json()}});
  nlohmann::json out = {{"value", json_number(value)}, {"per_vertex", rows}};
  out["exact_base"] = exact_base ? json_number(*exact_base) : nlohmann::json(nullptr);
  return out;
}

GrowthEstimate big_delta_inf_at(const CmsGraph& g, Symbol a, std::size_t n_max) {
  return growth_rate(first_return_count(g, a, n_max), GrowthMethod::kAffineFit);
}

double loop_system_delta_inf(const LoopSystem& sys) {
  return sys.infinite() ? std::log(sys.growth()) : kNegInf;
}

BigDeltaReport big_delta_inf(const CmsGraph& g, const std::vector<Symbol>& vertices,
                             std::size_t n_max) {
  if (vertices.empty()) throw CmsError(ErrorCode::kValidation, "no vertices given");
  BigDeltaReport report;
  report.value = std::numeric_limits<double>::infinity();
  for (Symbol a : vertices) {
    GrowthEstimate est = big_delta_inf_at(g, a, n_max);
    report.value = std::min(report.value, est.value);
    report.per_vertex.emplace_back(a, std::move(est));
  }
  if (g.is_loop_system() && std::find(vertices.begin(), vertices.end(), LoopSystem::kBase) !=
                                vertices.end()) {
    report.exact_base = loop_system_delta_inf(g.loops());
  }
  return report;
}

// ---------------------------------------------------------------------------
// delta_inf grid

nlohmann::json InfinityReport::to_json() const {
  nlohmann::json grid = nlohmann::json::array();
  for (std::size_t i = 0; i < Ms.size(); ++i) {
    for (std::size_t j = 0; j < qs.size(); ++j) {
      grid.push_back({{"M", Ms[i]}, {"q", qs[j]}, {"estimate", cells[i][j].to_json()}});
    }
  }
  nlohmann::json out = {{"headline", json_number(headline)}, {"argmin", {{"M", argmin_M}, {"q", argmin_q}}},
                        {"n_max", n_max},         {"caveat", caveat},
                        {"grid", grid}};
  out["exact"] = exact ? json_number(*exact) : nlohmann::json(nullptr);
  return out;
}

std::string InfinityReport::to_csv() const {
  std::ostringstream out;
  out << "M";
  for (Symbol q : qs) out << ",q=" << q;
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < Ms.size(); ++i) {
    out << Ms[i];
    for (std::size_t j = 0; j < qs.size(); ++j) {
      const double v = cells[i][j].value;
      out << ',';
      if (std::isfinite(v)) {
        out << v;
      } else {
        out << (v > 0 ? "inf" : "-inf");
      }
    }
    out << '\n';
  }
  return out.str();
}

InfinityReport delta_inf(const CmsGraph& g, const std::vector<std::uint64_t>& Ms,
                         const std::vector<Symbol>& qs, std::size_t n_max, unsigned jobs) {
  if (Ms.empty() || qs.empty()) throw CmsError(ErrorCode::kValidation, "empty (M,q) grid");
  if (n_max < 2) throw CmsError(ErrorCode::kValidation, "n_max must be >= 2");
  InfinityReport report;
  report.Ms = Ms;
  report.qs = qs;
  report.n_max = n_max;
  report.cells.assign(Ms.size(), std::vector<GrowthEstimate>(qs.size()));
  report.caveat = "upper approximation of an infimum over an infinite (M,q) grid";

  const std::size_t total = Ms.size() * qs.size();
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const std::size_t i = k / qs.size();
      const std::size_t j = k % qs.size();
      try {
        report.cells[i][j] = growth_rate(escape_count(g, Ms[i], qs[j], n_max));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(total)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  report.headline = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < Ms.size(); ++i) {
    for (std::size_t j = 0; j < qs.size(); ++j) {
      if (report.cells[i][j].value < report.headline) {
        report.headline = report.cells[i][j].value;
        report.argmin_M = Ms[i];
        report.argmin_q = qs[j];
      }
    }
  }
  if (g.is_loop_system()) report.exact = loop_system_delta_inf(g.loops());
  return report;
}

// ---------------------------------------------------------------------------
// Classification

std::string recurrence_class_name(RecurrenceClass c) {
  switch (c) {
    case RecurrenceClass::kTransient: return "Transient";
    case RecurrenceClass::kNullRecurrent: return "NullRecurrent";
    case RecurrenceClass::kPositiveRecurrent: return "PositiveRecurrent";
    case RecurrenceClass::kInconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

nlohmann::json RecurrenceVerdict::to_json() const {
  nlohmann::json out = {{"class", recurrence_class_name(cls)},
                        {"exact", exact},
                        {"h_top", json_number(h_top)},
                        {"evidence", evidence}};
  out["radius"] = radius ? json_number(*radius) : nlohmann::json(nullptr);
  out["f_at_radius"] = f_at_radius ? interval_to_json(*f_at_radius) : nlohmann::json(nullptr);
  out["root"] = root ? json_number(*root) : nlohmann::json(nullptr);
  out["mean"] = mean ? interval_to_json(*mean) : nlohmann::json(nullptr);
  return out;
}

RecurrenceVerdict classify(const CmsGraph& g, Symbol a) {
  if (!g.has_symbol(a)) {
    throw CmsError(ErrorCode::kValidation, "vertex " + std::to_string(a) + " is not in the graph");
  }
  RecurrenceVerdict v;
  if (g.is_finite()) {
    v.cls = RecurrenceClass::kPositiveRecurrent;
    v.exact = true;
    v.h_top = log_spectral_radius(g.finite_graph());
    v.evidence = g.transitive() ? "finite transitive graph: compact, positive recurrent"
                                : "finite graph (not strongly connected): compact, positive "
                                  "recurrent on its maximal-entropy class";
    return v;
  }
  const LoopSystem& sys = g.loops();
  const LoopGF gf(sys);
  const LoopGF::Root r = gf.root();
  v.h_top = gf.log_spectral();
  if (sys.infinite()) {
    v.radius = 1.0 / sys.growth();
    v.f_at_radius = r.f_at_radius;
  }
  const double s = r.kind == LoopGF::RootKind::kInterior ? r.s : 0.0;
  switch (r.kind) {
    case LoopGF::RootKind::kInterior:
    case LoopGF::RootKind::kCritical: {
      v.root = std::exp(-(gf.log_growth() + s));
      v.mean = gf.mean(s);
      if (r.kind == LoopGF::RootKind::kInterior) {
        v.cls = RecurrenceClass::kPositiveRecurrent;
        v.exact = true;
        v.evidence = "f(x) = 1 at x* below the radius of convergence";
      } else if (std::isinf(v.mean->lo)) {
        v.cls = RecurrenceClass::kNullRecurrent;
        v.exact = true;
        v.evidence = "f(R) = 1 and sum l a_l R^l diverges";
      } else if (std::isfinite(v.mean->hi)) {
        v.cls = RecurrenceClass::kPositiveRecurrent;
        v.exact = true;
        v.evidence = "f(R) = 1 and sum l a_l R^l converges";
      } else {
        v.cls = RecurrenceClass::kInconclusive;
        v.evidence = "f(R) = 1 but the mean return time could not be bounded";
      }
      break;
    }
    case LoopGF::RootKind::kNone:
      v.cls = RecurrenceClass::kTransient;
      v.exact = true;
      v.evidence = "f(R) < 1: no root of f(x) = 1 up to the radius";
      break;
    case LoopGF::RootKind::kUndetermined:
      v.cls = RecurrenceClass::kInconclusive;
      v.evidence = "bounds on f(R) straddle 1";
      break;
  }
  return v;
}

// ---------------------------------------------------------------------------
// SPR

std::string spr_status_name(SprStatus s) {
  switch (s) {
    case SprStatus::kSpr: return "SPR";
    case SprStatus::kNotSpr: return "NotSPR";
    case SprStatus::kInconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

nlohmann::json SprVerdict::to_json() const {
  nlohmann::json out = {{"verdict", spr_status_name(status)},
                        {"h_top", json_number(h_top)},
                        {"delta_inf_estimate", json_number(delta_inf_estimate)},
                        {"margin", json_number(margin)},
                        {"margin_threshold", margin_threshold}};
  out["exact_big_delta"] = exact_big_delta ? json_number(*exact_big_delta) : nlohmann::json(nullptr);
  out["exact_spr"] = exact_spr ? nlohmann::json(*exact_spr) : nlohmann::json(nullptr);
  return out;
}

SprVerdict is_spr(const CmsGraph& g, const SprOptions& options) {
  SprVerdict v;
  v.margin_threshold = options.margin_threshold;
  if (g.is_finite()) {
    v.h_top = log_spectral_radius(g.finite_graph());
    v.exact_big_delta = kNegInf;
    v.exact_spr = true;
  } else {
    const LoopGF gf(g.loops());
    const LoopGF::Root r = gf.root();
    v.h_top = gf.log_spectral();
    v.exact_big_delta = loop_system_delta_inf(g.loops());
    if (r.kind == LoopGF::RootKind::kInterior) {
      v.exact_spr = !g.loops().infinite() || r.bracket.lo > 0.0;
    } else if (r.kind != LoopGF::RootKind::kUndetermined) {
      v.exact_spr = false;
    }
  }
  const InfinityReport grid = delta_inf(g, options.Ms, options.qs, options.n_max, options.jobs);
  v.delta_inf_estimate = grid.headline;
  v.margin = v.h_top - v.delta_inf_estimate;
  const double bar = v.h_top - options.margin_threshold;
  const bool estimate_ok = v.delta_inf_estimate < bar;
  const bool exact_ok = !v.exact_big_delta || *v.exact_big_delta < bar;
  if (estimate_ok && exact_ok) {
    v.status = SprStatus::kSpr;
  } else if (v.exact_spr && !*v.exact_spr) {
    v.status = SprStatus::kNotSpr;
  } else {
    v.status = SprStatus::kInconclusive;
  }
  return v;
}

}  // namespace cms
