#include "cms/density.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <set>

#include "cms/errors.hpp"
#include "cms/json_number.hpp"
#include "cms/spec_io.hpp"

namespace cms {

namespace {

// States with positive stationary mass and the graph of positive transitions
// between them.
FiniteGraph positive_support(const MarkovMeasure& m) {
  const FiniteGraph& s = m.support();
  std::vector<Symbol> states;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (m.stationary()[i] <= 0.0) continue;
    states.push_back(s.symbol(i));
    for (const auto& [j, p] : m.row(i)) {
      if (p > 0.0) edges.push_back({s.symbol(i), s.symbol(j)});
    }
  }
  return FiniteGraph(states, edges);
}

std::vector<std::size_t> states_labeled(const MarkovMeasure& m, Symbol label) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.stationary().size(); ++i) {
    if (m.stationary()[i] > 0.0 && m.label(i) == label) out.push_back(i);
  }
  return out;
}

// Positive-mass label words of length 1..depth.
std::vector<std::pair<Word, double>> test_cylinders(const MarkovMeasure& m, std::size_t depth) {
  std::set<Symbol> alphabet;
  for (std::size_t i = 0; i < m.stationary().size(); ++i) {
    if (m.stationary()[i] > 0.0) alphabet.insert(m.label(i));
  }
  std::vector<std::pair<Word, double>> out;
  std::vector<Word> level{{}};
  for (std::size_t len = 1; len <= depth; ++len) {
    std::vector<Word> next;
    for (const Word& w : level) {
      for (Symbol a : alphabet) {
        Word ext = w;
        ext.push_back(a);
        const double mass = m.cylinder_mass(ext);
        if (mass > 0.0) {
          out.emplace_back(ext, mass);
          next.push_back(std::move(ext));
        }
      }
    }
    level = std::move(next);
  }
  return out;
}

bool birkhoff_close(const Word& word, const std::vector<std::pair<Word, double>>& cylinders,
                    double beta) {
  for (const auto& [w, mass] : cylinders) {
    if (w.size() > word.size()) continue;
    const std::size_t windows = word.size() - w.size() + 1;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < windows; ++i) {
      if (std::equal(w.begin(), w.end(), word.begin() + static_cast<std::ptrdiff_t>(i))) ++hits;
    }
    if (std::abs(static_cast<double>(hits) / static_cast<double>(windows) - mass) > beta) return false;
  }
  return true;
}

// Local block graph: vertex labels, edges, entry and exit vertices.
struct Block {
  std::vector<Symbol> labels;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t entry = 0;
  std::size_t exit = 0;
};

Block language_block(const ComponentBlocks& c, std::size_t n) {
  const MarkovMeasure& m = *c.measure;
  if (!m.labels_injective()) {
    throw CmsError(ErrorCode::kPreconditionFailed, "language blocks need injective labels");
  }
  const auto starts = states_labeled(m, c.start);
  const auto ends = states_labeled(m, c.end);
  if (starts.size() != 1 || ends.size() != 1) {
    throw CmsError(ErrorCode::kPreconditionFailed, "block endpoints are not support states");
  }
  const std::size_t S = m.stationary().size();
  // forward[k][s]: s reachable from the start in k steps; backward likewise.
  std::vector<std::vector<char>> forward(n + 1, std::vector<char>(S, 0));
  std::vector<std::vector<char>> backward(n + 1, std::vector<char>(S, 0));
  forward[0][starts[0]] = 1;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < S; ++i) {
      if (!forward[k][i]) continue;
      for (const auto& [j, p] : m.row(i)) forward[k + 1][j] = 1;
    }
  }
  backward[n][ends[0]] = 1;
  for (std::size_t k = n; k-- > 0;) {
    for (std::size_t i = 0; i < S; ++i) {
      for (const auto& [j, p] : m.row(i)) {
        if (backward[k + 1][j]) backward[k][i] = 1;
      }
    }
  }
  if (!forward[n][ends[0]]) {
    throw CmsError(ErrorCode::kPreconditionFailed, "no support word joins the block endpoints");
  }
  Block b;
  std::vector<std::vector<std::size_t>> id(n + 1, std::vector<std::size_t>(S, SIZE_MAX));
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t i = 0; i < S; ++i) {
      if (forward[k][i] && backward[k][i]) {
        id[k][i] = b.labels.size();
        b.labels.push_back(m.label(i));
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < S; ++i) {
      if (id[k][i] == SIZE_MAX) continue;
      for (const auto& [j, p] : m.row(i)) {
        if (id[k + 1][j] != SIZE_MAX) b.edges.emplace_back(id[k][i], id[k + 1][j]);
      }
    }
  }
  b.entry = id[0][starts[0]];
  b.exit = id[n][ends[0]];
  return b;
}

Block sampled_block(const ComponentBlocks& c, std::size_t n) {
  if (c.words.empty()) throw CmsError(ErrorCode::kValidation, "sampled component has no words");
  Block b;
  b.labels.push_back(c.start);
  b.entry = 0;
  b.exit = SIZE_MAX;
  // Trie over prefixes; every word ends in the shared exit vertex.
  std::map<std::pair<std::size_t, Symbol>, std::size_t> child;
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (const Word& w : c.words) {
    if (w.size() != n + 1 || w.front() != c.start || w.back() != c.end) {
      throw CmsError(ErrorCode::kValidation, "sampled word does not match the block shape");
    }
    std::size_t node = 0;
    for (std::size_t k = 1; k <= n; ++k) {
      std::size_t next;
      if (k == n) {
        if (b.exit == SIZE_MAX) {
          b.exit = b.labels.size();
          b.labels.push_back(c.end);
        }
        next = b.exit;
      } else {
        auto [it, inserted] = child.try_emplace({node, w[k]}, b.labels.size());
        if (inserted) b.labels.push_back(w[k]);
        next = it->second;
      }
      edges.emplace(node, next);
      node = next;
    }
  }
  b.edges.assign(edges.begin(), edges.end());
  return b;
}

// Interior of a shortest admissible word from a to b.
Word connector(const FiniteGraph& ambient, Symbol from, Symbol to) {
  const auto src = ambient.index_of(from);
  const auto dst = ambient.index_of(to);
  if (!src || !dst) throw CmsError(ErrorCode::kConnectorNotFound, "block endpoint outside the ambient graph");
  std::vector<std::size_t> parent(ambient.size(), SIZE_MAX);
  std::deque<std::size_t> queue;
  for (std::size_t j : ambient.successors(*src)) {
    if (parent[j] == SIZE_MAX) {
      parent[j] = *src;
      queue.push_back(j);
    }
  }
  while (!queue.empty() && parent[*dst] == SIZE_MAX) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t j : ambient.successors(v)) {
      if (parent[j] == SIZE_MAX) {
        parent[j] = v;
        queue.push_back(j);
      }
    }
  }
  if (parent[*dst] == SIZE_MAX) {
    throw CmsError(ErrorCode::kConnectorNotFound, "no admissible connecting word between blocks");
  }
  Word interior;
  for (std::size_t v = parent[*dst]; v != *src; v = parent[v]) interior.push_back(ambient.symbol(v));
  std::reverse(interior.begin(), interior.end());
  return interior;
}

}  // namespace

std::vector<Word> generic_words(const MarkovMeasure& m, std::size_t n, std::size_t count,
                                std::uint64_t seed, const GenericWordOptions& options) {
  if (n == 0 || count == 0) throw CmsError(ErrorCode::kValidation, "need n >= 1 and count >= 1");
  const std::size_t S = m.stationary().size();
  std::vector<std::size_t> starts;
  std::vector<double> start_weights;
  for (std::size_t i = 0; i < S; ++i) {
    if (m.stationary()[i] <= 0.0) continue;
    if (options.start && m.label(i) != *options.start) continue;
    starts.push_back(i);
    start_weights.push_back(m.stationary()[i]);
  }
  if (starts.empty()) throw CmsError(ErrorCode::kSamplingExhausted, "no state carries the start symbol");
  // Pigeonhole: the number of distinct n-prefixes bounds the sample size.
  std::vector<double> paths(S, 0.0);
  for (std::size_t i : starts) paths[i] = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<double> next(S, 0.0);
    for (std::size_t i = 0; i < S; ++i) {
      for (const auto& [j, p] : m.row(i)) next[j] += paths[i];
    }
    paths = std::move(next);
  }
  double available = 0.0;
  for (double v : paths) available += v;
  if (static_cast<double>(count) > available) {
    throw CmsError(ErrorCode::kSamplingExhausted, "more words requested than distinct n-prefixes exist");
  }

  const auto cylinders = test_cylinders(m, options.test_depth);
  const std::size_t budget = options.max_attempts ? options.max_attempts : 1000 + 200 * count;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<std::size_t> first(start_weights.begin(), start_weights.end());
  std::set<Word> prefixes;
  std::vector<Word> out;
  for (std::size_t attempt = 0; attempt < budget && out.size() < count; ++attempt) {
    std::size_t state = starts[first(rng)];
    Word word{m.label(state)};
    for (std::size_t k = 1; k <= n; ++k) {
      const auto& row = m.row(state);
      double u = unit(rng);
      std::size_t pick = row.back().first;
      for (const auto& [j, p] : row) {
        if (u < p) {
          pick = j;
          break;
        }
        u -= p;
      }
      state = pick;
      word.push_back(m.label(state));
    }
    if (options.end && word.back() != *options.end) continue;
    if (!birkhoff_close(word, cylinders, options.beta)) continue;
    if (!prefixes.insert(Word(word.begin(), word.end() - 1)).second) continue;
    out.push_back(std::move(word));
  }
  if (out.size() < count) {
    throw CmsError(ErrorCode::kSamplingExhausted, "rejection sampling ran out of attempts");
  }
  return out;
}

std::string block_mode_name(BlockMode mode) {
  return mode == BlockMode::kSampled ? "sampled" : "language";
}

nlohmann::json ConcatenatedSystem::graph_spec() const {
  nlohmann::json doc = finite_graph_to_json(graph);
  doc["name"] = "concatenated system";
  return doc;
}

ConcatenatedSystem concatenated_system(const FiniteGraph& ambient,
                                       const std::vector<ComponentBlocks>& components,
                                       std::size_t n, std::size_t rounds) {
  if (components.empty() || n == 0 || rounds == 0) {
    throw CmsError(ErrorCode::kValidation, "need components, n >= 1 and rounds >= 1");
  }
  const std::size_t N = components.size();
  std::vector<Block> blocks;
  for (const ComponentBlocks& c : components) {
    blocks.push_back(c.mode == BlockMode::kLanguage ? language_block(c, n) : sampled_block(c, n));
  }
  ConcatenatedSystem sys;
  sys.n = n;
  sys.rounds = rounds;
  for (std::size_t i = 0; i < N; ++i) {
    sys.connectors.push_back(connector(ambient, components[i].end, components[(i + 1) % N].start));
    sys.max_connector = std::max(sys.max_connector, sys.connectors.back().size());
  }

  // Lay out copies: slot (round r, component i) holds the block then its connector.
  std::vector<Edge> edges;
  std::vector<std::size_t> entry_of(rounds * N);
  std::vector<std::size_t> tail_of(rounds * N);  // last vertex before the next block
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < N; ++i) {
      const Block& b = blocks[i];
      const std::size_t base = sys.labels.size();
      sys.labels.insert(sys.labels.end(), b.labels.begin(), b.labels.end());
      for (const auto& [u, v] : b.edges) edges.push_back({base + u + 1, base + v + 1});
      std::size_t last = base + b.exit;
      for (Symbol s : sys.connectors[i]) {
        const std::size_t v = sys.labels.size();
        sys.labels.push_back(s);
        edges.push_back({last + 1, v + 1});
        last = v;
      }
      entry_of[r * N + i] = base + b.entry;
      tail_of[r * N + i] = last;
    }
  }
  for (std::size_t slot = 0; slot < rounds * N; ++slot) {
    edges.push_back({tail_of[slot] + 1, entry_of[(slot + 1) % (rounds * N)] + 1});
  }
  std::vector<Symbol> vertices(sys.labels.size());
  for (std::size_t v = 0; v < vertices.size(); ++v) vertices[v] = v + 1;
  sys.graph = FiniteGraph(vertices, edges);

  const MarkovMeasure parry = parry_measure(sys.graph);
  std::vector<Transition> P;
  for (std::size_t i = 0; i < sys.graph.size(); ++i) {
    for (const auto& [j, p] : parry.row(i)) P.push_back({sys.graph.symbol(i), sys.graph.symbol(j), p});
  }
  sys.nu = std::make_shared<MarkovMeasure>(sys.graph, parry.stationary(), P, sys.labels);
  return sys;
}

nlohmann::json DensityReport::to_json() const {
  return {{"h_mu", h_mu},
          {"h_nu", h_nu},
          {"entropy_gap", entropy_gap},
          {"rho", {{"value", rho.value}, {"cylinders", rho.cylinders}, {"omitted_weight", rho.omitted_weight}}},
          {"entropy_floor", json_number(entropy_floor)},
          {"max_connector", max_connector},
          {"vertices", vertices},
          {"modes", modes},
          {"targets", {{"rho", rho_met}, {"entropy", entropy_met}, {"floor", floor_met}}},
          {"seconds", seconds},
          {"options",
           {{"n", options.n},
            {"M", options.rounds},
            {"depth", options.depth},
            {"epsilon", options.epsilon},
            {"eta", options.eta},
            {"seed", options.seed},
            {"sample_count", options.sample_count}}},
          {"graph", graph_spec}};
}

DensityReport density_demo(const FiniteGraph& ambient,
                           const std::vector<std::shared_ptr<const MarkovMeasure>>& components,
                           const DensityOptions& options) {
  const auto clock_start = std::chrono::steady_clock::now();
  if (components.empty()) throw CmsError(ErrorCode::kValidation, "no components");
  DensityReport report;
  report.options = options;
  std::vector<ComponentBlocks> specs;
  std::vector<std::pair<double, MeasurePtr>> parts;
  const double w = 1.0 / static_cast<double>(components.size());
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& m = components[i];
    const FiniteGraph support = positive_support(*m);
    if (!support.strongly_connected()) {
      throw CmsError(ErrorCode::kValidation, "component " + std::to_string(i) + " is not ergodic");
    }
    for (std::size_t s = 0; s < support.size(); ++s) {
      for (std::size_t t : support.successors(s)) {
        const Symbol a = m->label(*m->support().index_of(support.symbol(s)));
        const Symbol b = m->label(*m->support().index_of(support.symbol(t)));
        if (!ambient.has_edge(a, b)) {
          throw CmsError(ErrorCode::kValidation, "component " + std::to_string(i) + " leaves the ambient graph");
        }
      }
    }
    ComponentBlocks c;
    c.measure = m;
    const auto heaviest = std::max_element(m->stationary().begin(), m->stationary().end());
    c.start = c.end = m->label(static_cast<std::size_t>(heaviest - m->stationary().begin()));
    const bool mme = m->labels_injective() &&
                     std::abs(m->entropy() - std::log(perron_data(support).lambda)) <= 1e-9;
    if (mme) {
      c.mode = BlockMode::kLanguage;
    } else {
      c.mode = BlockMode::kSampled;
      GenericWordOptions sampling = options.sampling;
      sampling.start = c.start;
      sampling.end = c.end;
      c.words = generic_words(*m, options.n, options.sample_count, options.seed + i, sampling);
    }
    report.modes.push_back(block_mode_name(c.mode));
    specs.push_back(std::move(c));
    parts.emplace_back(w, m);
  }
  const MeasureMixture mu(parts);
  const ConcatenatedSystem sys = concatenated_system(ambient, specs, options.n, options.rounds);

  report.h_mu = mu.entropy();
  report.h_nu = sys.nu->entropy();
  report.entropy_gap = std::abs(report.h_mu - report.h_nu);
  report.rho = rho_distance(mu, *sys.nu, ambient, options.depth);
  report.max_connector = sys.max_connector;
  report.vertices = sys.graph.size();
  const double n = static_cast<double>(options.n);
  report.entropy_floor = n * (report.h_mu - options.eta / 2) /
                         (n + 1.0 + static_cast<double>(sys.max_connector));
  report.rho_met = report.rho.value <= options.epsilon;
  report.entropy_met = report.entropy_gap <= options.eta;
  report.floor_met = report.h_nu >= report.entropy_floor - 1e-9;
  report.graph_spec = sys.graph_spec();
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return report;
}

}  // namespace cms
