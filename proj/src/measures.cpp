#include "cms/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "cms/errors.hpp"

namespace cms {

namespace {

constexpr double kStationarityTolerance = 1e-10;

// Solves pi P = pi, sum pi = 1 by Gaussian elimination with partial pivoting.
std::vector<double> solve_stationary(
    std::size_t n, const std::vector<std::vector<std::pair<std::size_t, double>>>& rows) {
  // Unknowns pi_0..pi_{n-1}; equations (P^T - I) pi = 0 with the last one
  // replaced by the normalization.
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] -= 1.0;
    for (const auto& [j, p] : rows[i]) a[j][i] += p;
  }
  for (std::size_t j = 0; j <= n; ++j) a[n - 1][j] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-300) {
      throw CmsError(ErrorCode::kPreconditionFailed,
                     "transition matrix has no unique stationary distribution");
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0.0) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = std::max(0.0, a[i][n] / a[i][i]);
  double total = 0.0;
  for (double v : pi) total += v;
  for (double& v : pi) v /= total;
  return pi;
}

// Same, by power iteration of the lazy chain (P + I)/2; for large chains.
std::vector<double> iterate_stationary(
    std::size_t n, const std::vector<std::vector<std::pair<std::size_t, double>>>& rows) {
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (int iter = 0; iter < 1000000; ++iter) {
    for (std::size_t i = 0; i < n; ++i) next[i] = 0.5 * pi[i];
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& [j, p] : rows[i]) next[j] += 0.5 * pi[i] * p;
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(next[i] - pi[i]));
    std::swap(pi, next);
    if (diff < 1e-16) break;
  }
  return pi;
}

constexpr std::size_t kDenseSolveLimit = 1500;

}  // namespace

// ---------------------------------------------------------------------------
// MarkovMeasure

MarkovMeasure::MarkovMeasure(FiniteGraph support, std::vector<double> pi,
                             const std::vector<Transition>& P, std::vector<Symbol> labels)
    : support_(std::move(support)), pi_(std::move(pi)), labels_(std::move(labels)) {
  const std::size_t n = support_.size();
  if (n == 0) throw CmsError(ErrorCode::kValidation, "Markov measure needs at least one state");
  if (pi_.size() != n) {
    throw CmsError(ErrorCode::kValidation, "stationary vector size does not match the states", "/pi");
  }
  if (labels_.empty()) labels_.assign(support_.symbols().begin(), support_.symbols().end());
  if (labels_.size() != n) {
    throw CmsError(ErrorCode::kValidation, "label count does not match the states", "/labels");
  }
  rows_.assign(n, {});
  for (std::size_t k = 0; k < P.size(); ++k) {
    const Transition& t = P[k];
    const auto i = support_.index_of(t.from);
    const auto j = support_.index_of(t.to);
    const std::string path = "/transitions/" + std::to_string(k);
    if (!i || !j || !support_.has_edge(t.from, t.to)) {
      throw CmsError(ErrorCode::kValidation, "transition off the support graph", path);
    }
    if (!(t.p >= 0.0) || t.p > 1.0 + 1e-12) {
      throw CmsError(ErrorCode::kValidation, "transition probability outside [0,1]", path);
    }
    if (t.p == 0.0) continue;
    auto& row = rows_[*i];
    auto it = std::find_if(row.begin(), row.end(), [&](const auto& e) { return e.first == *j; });
    if (it == row.end()) {
      row.emplace_back(*j, t.p);
    } else {
      it->second += t.p;
    }
  }
  for (auto& row : rows_) std::sort(row.begin(), row.end());

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pi_[i] >= 0.0)) throw CmsError(ErrorCode::kValidation, "negative stationary mass", "/pi");
    total += pi_[i];
    double row_sum = 0.0;
    for (const auto& [j, p] : rows_[i]) row_sum += p;
    if ((pi_[i] > 0.0 || !rows_[i].empty()) && std::abs(row_sum - 1.0) > kStationarityTolerance) {
      throw CmsError(ErrorCode::kValidation, "transition row is not stochastic",
                     "/transitions");
    }
  }
  if (std::abs(total - 1.0) > kStationarityTolerance) {
    throw CmsError(ErrorCode::kValidation, "stationary vector does not sum to 1", "/pi");
  }
  std::vector<double> image(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, p] : rows_[i]) image[j] += pi_[i] * p;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(image[i] - pi_[i]) > kStationarityTolerance) {
      throw CmsError(ErrorCode::kValidation, "pi P != pi: the vector is not stationary", "/pi");
    }
  }

  by_label_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) by_label_.emplace_back(labels_[i], i);
  std::sort(by_label_.begin(), by_label_.end());
  for (std::size_t i = 1; i < n; ++i) {
    if (by_label_[i].first == by_label_[i - 1].first) injective_ = false;
  }
}

MarkovMeasure MarkovMeasure::from_transitions(FiniteGraph support, const std::vector<Transition>& P,
                                              std::vector<Symbol> labels) {
  const std::size_t n = support.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  for (const Transition& t : P) {
    const auto i = support.index_of(t.from);
    const auto j = support.index_of(t.to);
    if (!i || !j) throw CmsError(ErrorCode::kValidation, "transition off the support graph");
    if (t.p > 0.0) rows[*i].emplace_back(*j, t.p);
  }
  std::vector<double> pi = n <= kDenseSolveLimit ? solve_stationary(n, rows)
                                                 : iterate_stationary(n, rows);
  return MarkovMeasure(std::move(support), std::move(pi), P, std::move(labels));
}

MarkovMeasure MarkovMeasure::bernoulli(const std::vector<Symbol>& symbols,
                                       const std::vector<double>& probs) {
  if (symbols.size() != probs.size() || symbols.empty()) {
    throw CmsError(ErrorCode::kValidation, "Bernoulli weights do not match the symbols");
  }
  std::vector<Edge> edges;
  std::vector<Transition> P;
  for (Symbol a : symbols) {
    for (std::size_t j = 0; j < symbols.size(); ++j) {
      edges.push_back({a, symbols[j]});
      P.push_back({a, symbols[j], probs[j]});
    }
  }
  FiniteGraph support(symbols, edges);
  std::vector<double> pi(support.size());
  for (std::size_t j = 0; j < symbols.size(); ++j) pi[*support.index_of(symbols[j])] = probs[j];
  return MarkovMeasure(std::move(support), std::move(pi), P);
}

MarkovMeasure MarkovMeasure::periodic_orbit(const Word& cycle) {
  if (cycle.empty()) throw CmsError(ErrorCode::kValidation, "empty cycle");
  const std::size_t p = cycle.size();
  std::vector<Symbol> states;
  std::vector<Edge> edges;
  std::vector<Transition> P;
  for (std::size_t k = 0; k < p; ++k) {
    states.push_back(k + 1);
    edges.push_back({k + 1, (k + 1) % p + 1});
    P.push_back({k + 1, (k + 1) % p + 1, 1.0});
  }
  return MarkovMeasure(FiniteGraph(states, edges), std::vector<double>(p, 1.0 / p), P, cycle);
}

double MarkovMeasure::transition(Symbol from, Symbol to) const {
  const auto i = support_.index_of(from);
  const auto j = support_.index_of(to);
  if (!i || !j) return 0.0;
  for (const auto& [k, p] : rows_[*i]) {
    if (k == *j) return p;
  }
  return 0.0;
}

bool MarkovMeasure::lives_on(const CmsGraph& ambient) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (pi_[i] > 0.0 && !ambient.has_symbol(labels_[i])) return false;
    for (const auto& [j, p] : rows_[i]) {
      if (!ambient.has_edge(labels_[i], labels_[j])) return false;
    }
  }
  return true;
}

double MarkovMeasure::entropy() const {
  double h = 0.0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto& [j, p] : rows_[i]) {
      if (p > 0.0) h -= pi_[i] * p * std::log(p);
    }
  }
  return std::max(0.0, h);
}

double MarkovMeasure::cylinder_mass(std::span<const Symbol> word) const {
  if (word.empty()) return 1.0;
  auto states_of = [&](Symbol label) {
    return std::equal_range(by_label_.begin(), by_label_.end(), std::pair<Symbol, std::size_t>{label, 0},
                            [](const auto& x, const auto& y) { return x.first < y.first; });
  };
  // Forward pass over the states compatible with the word.
  std::vector<std::pair<std::size_t, double>> current;
  auto [lo, hi] = states_of(word[0]);
  for (auto it = lo; it != hi; ++it) {
    if (pi_[it->second] > 0.0) current.emplace_back(it->second, pi_[it->second]);
  }
  for (std::size_t k = 1; k < word.size() && !current.empty(); ++k) {
    std::map<std::size_t, double> next;
    for (const auto& [i, mass] : current) {
      for (const auto& [j, p] : rows_[i]) {
        if (labels_[j] == word[k]) next[j] += mass * p;
      }
    }
    current.assign(next.begin(), next.end());
  }
  double total = 0.0;
  for (const auto& [i, mass] : current) total += mass;
  return total;
}

double MarkovMeasure::prefix_mass(const BigInt& q) const {
  double total = 0.0;
  for (std::size_t i = 0; i < pi_.size(); ++i) {
    if (BigInt(labels_[i]) <= q) total += pi_[i];
  }
  return total;
}

std::string MarkovMeasure::describe() const {
  std::ostringstream out;
  out << "Markov measure on " << support_.size() << " states";
  if (!injective_) out << " (labeled factor)";
  return out.str();
}

nlohmann::json MarkovMeasure::to_json() const {
  nlohmann::json transitions = nlohmann::json::array();
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto& [j, p] : rows_[i]) {
      transitions.push_back({support_.symbol(i), support_.symbol(j), p});
    }
  }
  std::vector<Symbol> states(support_.symbols().begin(), support_.symbols().end());
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : support_.edges()) edges.push_back({e.from, e.to});
  return {{"kind", "markov"},   {"states", states},           {"edges", edges},
          {"labels", labels_},  {"pi", pi_},                  {"transitions", transitions},
          {"entropy", entropy()}};
}

MarkovMeasure MarkovMeasure::from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || doc.value("kind", "") != "markov") {
      throw CmsError(ErrorCode::kSchema, "expected a measure object with kind \"markov\"", "/kind");
    }
    const auto states = doc.at("states").get<std::vector<Symbol>>();
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) edges.push_back({e.at(0).get<Symbol>(), e.at(1).get<Symbol>()});
    std::vector<Transition> P;
    for (const auto& t : doc.at("transitions")) {
      P.push_back({t.at(0).get<Symbol>(), t.at(1).get<Symbol>(), t.at(2).get<double>()});
    }
    std::vector<Symbol> labels;
    if (doc.contains("labels")) labels = doc.at("labels").get<std::vector<Symbol>>();
    return MarkovMeasure(FiniteGraph(states, edges), doc.at("pi").get<std::vector<double>>(), P,
                         labels);
  } catch (const nlohmann::json::exception& e) {
    throw CmsError(ErrorCode::kSchema, std::string("malformed measure: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// LoopMarkovMeasure

LoopMarkovMeasure::LoopMarkovMeasure(const LoopSystem& ambient, LengthRange range)
    : ambient_(ambient), range_(range) {
  const LoopGF gf(ambient_, range_);
  const LoopGF::Root root = gf.root();
  double s = 0.0;
  if (root.kind == LoopGF::RootKind::kInterior) {
    s = root.s;
  } else if (root.kind != LoopGF::RootKind::kCritical) {
    throw CmsError(ErrorCode::kPreconditionFailed,
                   "sub-loop-system is not recurrent: no maximal-entropy measure");
  }
  const Interval mean = gf.mean(s);
  if (!std::isfinite(mean.hi)) {
    throw CmsError(ErrorCode::kPreconditionFailed,
                   "sub-loop-system is null recurrent: no maximal-entropy measure");
  }
  log_growth_ = gf.log_growth();
  s_ = s;
  pi_base_ = 1.0 / mean.mid();
}

bool LoopMarkovMeasure::in_range(std::uint64_t length) const {
  return length >= range_.min_length && (!range_.max_length || length <= *range_.max_length);
}

double LoopMarkovMeasure::loop_probability(std::uint64_t length) const {
  return std::exp(-static_cast<double>(length) * (log_growth_ + s_));
}

double LoopMarkovMeasure::cylinder_mass(std::span<const Symbol> word) const {
  if (word.empty()) return 1.0;
  std::vector<LoopSystem::Location> locs;
  locs.reserve(word.size());
  for (Symbol s : word) {
    auto loc = ambient_.locate(s);
    if (!loc) return 0.0;
    if (loc->length != 0 && !in_range(loc->length)) return 0.0;
    locs.push_back(std::move(*loc));
  }
  double mass = locs[0].length == 0 ? pi_base_ : pi_base_ * loop_probability(locs[0].length);
  for (std::size_t k = 1; k < locs.size(); ++k) {
    const auto& from = locs[k - 1];
    const auto& to = locs[k];
    if (from.length == 0) {
      if (to.length == 0) {
        if (ambient_.multiplicity(1) == 0 || !in_range(1)) return 0.0;
        mass *= loop_probability(1);
      } else {
        if (to.offset != 1) return 0.0;
        mass *= loop_probability(to.length);
      }
    } else if (from.offset + 1 == from.length) {
      if (to.length != 0) return 0.0;
    } else if (to.length != from.length || to.ordinal != from.ordinal ||
               to.offset != from.offset + 1) {
      return 0.0;
    }
  }
  return mass;
}

double LoopMarkovMeasure::prefix_mass(const BigInt& q) const {
  if (q < 1) return 0.0;
  double mass = pi_base_;
  BigInt used = 1;  // symbols taken by loops shorter than the current length
  for (std::uint32_t l = 2;; ++l) {
    if (used >= q) break;
    if (ambient_.max_length() && l > *ambient_.max_length()) break;
    const BigInt internals = ambient_.multiplicity(l) * (l - 1);
    if (in_range(l) && internals > 0) {
      const BigInt room = q - used;
      const BigInt count = room < internals ? room : internals;
      mass += to_double(count) * pi_base_ * loop_probability(l);
    }
    used += internals;
  }
  return std::min(1.0, mass);
}

std::string LoopMarkovMeasure::describe() const {
  std::ostringstream out;
  out << "loop Parry measure on lengths [" << range_.min_length << ", ";
  if (range_.max_length) {
    out << *range_.max_length << "]";
  } else {
    out << "inf)";
  }
  return out.str();
}

nlohmann::json LoopMarkovMeasure::to_json() const {
  nlohmann::json out = {{"kind", "loop_markov"},       {"min_length", range_.min_length},
                        {"base_mass", pi_base_},       {"log_growth", log_growth_},
                        {"entropy_excess", s_},        {"entropy", entropy()}};
  out["max_length"] = range_.max_length ? nlohmann::json(*range_.max_length) : nlohmann::json(nullptr);
  return out;
}

// ---------------------------------------------------------------------------
// MeasureMixture

MeasureMixture::MeasureMixture(std::vector<std::pair<double, MeasurePtr>> parts)
    : parts_(std::move(parts)) {
  if (parts_.empty()) throw CmsError(ErrorCode::kValidation, "empty mixture");
  double total = 0.0;
  for (const auto& [w, m] : parts_) {
    if (!m || !(w >= 0.0)) throw CmsError(ErrorCode::kValidation, "invalid mixture component");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw CmsError(ErrorCode::kValidation, "mixture weights must sum to 1");
  }
}

double MeasureMixture::entropy() const {
  double h = 0.0;
  for (const auto& [w, m] : parts_) {
    if (w > 0.0) h += w * m->entropy();
  }
  return h;
}

double MeasureMixture::cylinder_mass(std::span<const Symbol> word) const {
  double total = 0.0;
  for (const auto& [w, m] : parts_) {
    if (w > 0.0) total += w * m->cylinder_mass(word);
  }
  return total;
}

double MeasureMixture::prefix_mass(const BigInt& q) const {
  double total = 0.0;
  for (const auto& [w, m] : parts_) {
    if (w > 0.0) total += w * m->prefix_mass(q);
  }
  return total;
}

std::string MeasureMixture::describe() const {
  std::ostringstream out;
  out << "mixture of " << parts_.size() << " measures";
  return out.str();
}

nlohmann::json MeasureMixture::to_json() const {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& [w, m] : parts_) parts.push_back({{"weight", w}, {"measure", m->to_json()}});
  return {{"kind", "mixture"}, {"parts", parts}, {"entropy", entropy()}};
}

// ---------------------------------------------------------------------------
// Parry measure

PerronData perron_data(const FiniteGraph& graph) {
  const std::size_t n = graph.size();
  if (n == 0 || graph.edge_count() == 0 || !graph.strongly_connected()) {
    throw CmsError(ErrorCode::kNotStronglyConnected,
                   "Perron data needs a strongly connected graph with an edge");
  }
  PerronData out;
  const std::size_t p = graph.period();
  out.period = p;

  // Cyclic classes: BFS level modulo the period; edges go from class c to c+1.
  std::vector<std::size_t> cls(n, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> queue{0};
  cls[0] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t v = queue[head];
    for (std::size_t w : graph.successors(v)) {
      if (cls[w] == std::numeric_limits<std::size_t>::max()) {
        cls[w] = (cls[v] + 1) % p;
        queue.push_back(w);
      }
    }
  }

  auto apply_right = [&](const std::vector<double>& x) {  // (A x)_i = sum_j A_ij x_j
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : graph.successors(i)) y[i] += x[j];
    }
    return y;
  };
  auto apply_left = [&](const std::vector<double>& x) {  // (x A)_j = sum_i x_i A_ij
    std::vector<double> y(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i : graph.predecessors(j)) y[j] += x[i];
    }
    return y;
  };

  // Power iteration of A^p restricted to class 0, which is primitive there.
  auto iterate = [&](auto&& apply) {
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = cls[i] == 0 ? 1.0 : 0.0;
    double lambda_p = 0.0;
    for (int iter = 0; iter < 1000000; ++iter) {
      std::vector<double> y = x;
      for (std::size_t k = 0; k < p; ++k) y = apply(y);
      const double norm = *std::max_element(y.begin(), y.end());
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        y[i] /= norm;
        diff = std::max(diff, std::abs(y[i] - x[i]));
      }
      const double change = std::abs(norm - lambda_p);
      lambda_p = norm;
      x = std::move(y);
      if (iter > 2 && diff <= 1e-13 && change <= 1e-12 * norm) break;
    }
    return std::pair{x, lambda_p};
  };

  auto [right, lambda_p] = iterate(apply_right);
  auto [left, unused] = iterate(apply_left);
  (void)unused;
  const double lambda = std::pow(lambda_p, 1.0 / static_cast<double>(p));
  out.lambda = lambda;

  // Extend to the other classes: v_i = (A v)_i / lambda from class c+1 to c,
  // u_j = (u A)_j / lambda from class c-1 to c.
  for (std::size_t step = 1; step < p; ++step) {
    const std::size_t c_right = p - step;
    const std::size_t c_left = step;
    for (std::size_t i = 0; i < n; ++i) {
      if (cls[i] == c_right) {
        double sum = 0.0;
        for (std::size_t j : graph.successors(i)) sum += right[j];
        right[i] = sum / lambda;
      }
      if (cls[i] == c_left) {
        double sum = 0.0;
        for (std::size_t k : graph.predecessors(i)) sum += left[k];
        left[i] = sum / lambda;
      }
    }
  }
  out.right = std::move(right);
  out.left = std::move(left);
  return out;
}

MarkovMeasure parry_measure(const FiniteGraph& graph) {
  const PerronData perron = perron_data(graph);
  const std::size_t n = graph.size();
  std::vector<Transition> P;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : graph.successors(i)) {
      P.push_back({graph.symbol(i), graph.symbol(j),
                   perron.right[j] / (perron.lambda * perron.right[i])});
    }
  }
  // Normalize rows exactly; the eigenvector carries rounding error.
  std::vector<double> row_sum(n, 0.0);
  for (const Transition& t : P) row_sum[*graph.index_of(t.from)] += t.p;
  for (Transition& t : P) t.p /= row_sum[*graph.index_of(t.from)];
  std::vector<double> pi(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pi[i] = perron.left[i] * perron.right[i];
    total += pi[i];
  }
  for (double& v : pi) v /= total;
  return MarkovMeasure(graph, std::move(pi), P);
}

// ---------------------------------------------------------------------------
// Cylinder limits

nlohmann::json LimitReport::to_json() const {
  nlohmann::json cyl = nlohmann::json::array();
  for (const auto& c : cylinders) {
    cyl.push_back({{"word", c.word}, {"limit", c.limit}, {"spread", c.spread}, {"converged", c.converged}});
  }
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : ladder) {
    steps.push_back({{"q", s.q.str()}, {"limit", s.limit}, {"converged", s.converged}});
  }
  nlohmann::json out = {{"cylinders", cyl},
                        {"mass_ladder", steps},
                        {"mass", mass},
                        {"non_convergent", non_convergent},
                        {"normalized_method", normalized_method}};
  out["normalized"] = normalized ? normalized->to_json() : nlohmann::json(nullptr);
  return out;
}

std::vector<BigInt> default_mass_ladder(const CmsGraph& ambient) {
  std::vector<BigInt> out;
  if (ambient.is_finite()) {
    for (Symbol q = 1; q <= ambient.finite_graph().size(); ++q) out.emplace_back(q);
    return out;
  }
  for (std::uint32_t L = 1; L <= 128; L *= 2) {
    const BigInt q = ambient.loops().last_index_through(L);
    if (out.empty() || out.back() != q) out.push_back(q);
  }
  return out;
}

namespace {

struct Track {
  double limit = 0.0;
  double spread = 0.0;
};

Track track(const std::vector<double>& values) {
  const std::size_t n = values.size();
  const std::size_t tail = std::max<std::size_t>(1, (n + 2) / 3);
  Track t;
  t.limit = values.back();
  for (std::size_t i = n - tail; i < n; ++i) t.spread = std::max(t.spread, std::abs(values[i] - t.limit));
  return t;
}

std::vector<std::pair<double, MeasurePtr>> components(const MeasurePtr& m) {
  if (const auto* mix = dynamic_cast<const MeasureMixture*>(m.get())) return mix->parts();
  return {{1.0, m}};
}

// Components shared (by identity) across the final third, with converged
// weights.
MeasurePtr persistent_limit(const MeasureSequence& seq, double mass, double tolerance) {
  const std::size_t n = seq.measures.size();
  const std::size_t tail = std::max<std::size_t>(1, (n + 2) / 3);
  std::vector<std::pair<double, MeasurePtr>> last = components(seq.measures.back());
  std::vector<std::pair<double, MeasurePtr>> kept;
  double kept_weight = 0.0;
  for (const auto& [w_last, comp] : last) {
    if (w_last <= 0.0) continue;
    std::vector<double> weights;
    for (std::size_t i = n - tail; i < n; ++i) {
      double w = -1.0;
      for (const auto& [wi, ci] : components(seq.measures[i])) {
        if (ci.get() == comp.get()) w = std::max(w, 0.0) + wi;
      }
      if (w < 0.0) break;
      weights.push_back(w);
    }
    if (weights.size() != tail) continue;
    if (track(weights).spread > tolerance) continue;
    kept.emplace_back(w_last, comp);
    kept_weight += w_last;
  }
  if (kept.empty() || std::abs(kept_weight - mass) > 2 * tolerance) return nullptr;
  if (kept.size() == 1) return kept.front().second;
  for (auto& [w, comp] : kept) w /= kept_weight;
  return std::make_shared<MeasureMixture>(std::move(kept));
}

// Markov measure on the ambient finite graph matching the length-1 and
// length-2 cylinder limits, normalized by the mass.
MeasurePtr markov_fit(const MeasureSequence& seq, const FiniteGraph& ambient, double mass,
                      double tolerance) {
  auto limit_of = [&](const Word& w) {
    std::vector<double> values;
    values.reserve(seq.measures.size());
    for (const auto& m : seq.measures) values.push_back(m->cylinder_mass(w));
    return track(values);
  };
  std::vector<Symbol> states;
  std::vector<double> pi;
  std::map<Symbol, double> single;
  for (Symbol a : ambient.symbols()) {
    const Track t = limit_of({a});
    if (t.spread > tolerance) return nullptr;
    if (t.limit > 1e-12) {
      states.push_back(a);
      single[a] = t.limit;
    }
  }
  if (states.empty()) return nullptr;
  std::vector<Edge> edges;
  std::vector<Transition> P;
  for (Symbol a : states) {
    double row = 0.0;
    std::vector<Transition> out;
    for (std::size_t j : ambient.successors(*ambient.index_of(a))) {
      const Symbol b = ambient.symbol(j);
      if (!single.contains(b)) continue;
      const Track t = limit_of({a, b});
      if (t.spread > tolerance) return nullptr;
      if (t.limit <= 1e-14) continue;
      out.push_back({a, b, t.limit});
      row += t.limit;
    }
    if (row <= 0.0) return nullptr;
    for (Transition& t : out) {
      t.p /= row;
      edges.push_back({t.from, t.to});
      P.push_back(t);
    }
  }
  try {
    auto fitted = std::make_shared<MarkovMeasure>(
        MarkovMeasure::from_transitions(FiniteGraph(states, edges), P));
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (std::abs(fitted->stationary()[i] - single[states[i]] / mass) > 10 * tolerance) return nullptr;
    }
    return fitted;
  } catch (const CmsError&) {
    return nullptr;
  }
}

}  // namespace

LimitReport cylinder_limit(const MeasureSequence& seq, const std::vector<Word>& cylinders,
                           double tolerance, const std::vector<BigInt>& ladder,
                           const FiniteGraph* finite_ambient) {
  if (seq.measures.size() < 3) {
    throw CmsError(ErrorCode::kValidation, "cylinder limits need a sequence of length >= 3");
  }
  LimitReport report;
  for (const Word& w : cylinders) {
    std::vector<double> values;
    for (const auto& m : seq.measures) values.push_back(m->cylinder_mass(w));
    const Track t = track(values);
    report.cylinders.push_back({w, t.limit, t.spread, t.spread <= tolerance});
    if (t.spread > tolerance) report.non_convergent.push_back(w);
  }
  for (const BigInt& q : ladder) {
    std::vector<double> values;
    for (const auto& m : seq.measures) values.push_back(m->prefix_mass(q));
    const Track t = track(values);
    report.ladder.push_back({q, t.limit, t.spread <= tolerance});
    if (t.spread <= tolerance) report.mass = std::max(report.mass, t.limit);
  }
  report.mass = std::min(1.0, report.mass);
  if (report.mass > tolerance) {
    report.normalized = persistent_limit(seq, report.mass, tolerance);
    if (report.normalized) {
      report.normalized_method = "persistent-components";
    } else if (finite_ambient) {
      report.normalized = markov_fit(seq, *finite_ambient, report.mass, tolerance);
      if (report.normalized) report.normalized_method = "markov-fit";
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// rho distance

RhoDistance rho_distance(const InvariantMeasure& mu, const InvariantMeasure& nu,
                         const FiniteGraph& ambient, std::size_t depth) {
  constexpr std::size_t kCap = std::size_t{1} << 20;
  RhoDistance out;
  std::vector<Word> level;
  for (Symbol a : ambient.symbols()) level.push_back({a});
  std::size_t k = 0;
  for (std::size_t len = 1; len <= depth && !level.empty(); ++len) {
    for (const Word& w : level) {
      ++k;
      const double weight = std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(k, 2000)));
      if (weight > 0.0) out.value += weight * std::abs(mu.cylinder_mass(w) - nu.cylinder_mass(w));
    }
    if (len == depth) break;
    std::vector<Word> next;
    for (const Word& w : level) {
      for (std::size_t j : ambient.successors(*ambient.index_of(w.back()))) {
        Word ext = w;
        ext.push_back(ambient.symbol(j));
        next.push_back(std::move(ext));
      }
      if (next.size() > kCap) throw CmsError(ErrorCode::kCapacity, "too many cylinders for rho");
    }
    level = std::move(next);
  }
  out.cylinders = k;
  out.omitted_weight = std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(k, 2000)));
  return out;
}

}  // namespace cms
