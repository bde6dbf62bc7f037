#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cms/graph.hpp"
#include "cms/measures.hpp"

namespace cms {

struct GenericWordOptions {
  std::optional<Symbol> start;  // pin x_0
  std::optional<Symbol> end;    // pin x_n
  // Empirical frequencies of every positive-mass cylinder of length
  // <= test_depth must lie within beta of its mass.
  double beta = 0.25;
  std::size_t test_depth = 2;
  std::size_t max_attempts = 0;  // 0: 1000 + 200 * count
};

// `count` distinct words x_0..x_n sampled from the chain, each passing the
// Birkhoff test. Distinct words with a pinned end are (n,1)-separated.
std::vector<Word> generic_words(const MarkovMeasure& m, std::size_t n, std::size_t count,
                                std::uint64_t seed, const GenericWordOptions& options = {});

enum class BlockMode {
  kSampled,   // an explicit set of sampled words
  kLanguage,  // every support word from `start` to `end`
};
std::string block_mode_name(BlockMode mode);

struct ComponentBlocks {
  std::shared_ptr<const MarkovMeasure> measure;
  Symbol start = 0;
  Symbol end = 0;
  BlockMode mode = BlockMode::kLanguage;
  std::vector<Word> words;  // sampled mode
};

// Finite SFT of all cyclic concatenations b_1 r_1 b_2 r_2 ... b_{MN} r_{MN}
// with b_k a block of component k mod N and r_k fixed connectors; vertices
// are block and connector positions, labeled by ambient symbols.
struct ConcatenatedSystem {
  FiniteGraph graph;           // vertices 1..V
  std::vector<Symbol> labels;  // ambient symbol of each vertex
  std::vector<Word> connectors;  // r_i from component i to i+1 (interior symbols)
  std::size_t max_connector = 0;  // L
  std::size_t n = 0;
  std::size_t rounds = 0;  // M
  std::shared_ptr<const MarkovMeasure> nu;  // Parry measure, labeled

  // The vertex graph as a graph spec document.
  nlohmann::json graph_spec() const;
};

ConcatenatedSystem concatenated_system(const FiniteGraph& ambient,
                                       const std::vector<ComponentBlocks>& components,
                                       std::size_t n, std::size_t rounds);

struct DensityOptions {
  std::size_t n = 64;
  std::size_t rounds = 4;  // M
  std::size_t depth = 6;
  double epsilon = 0.05;  // rho target
  double eta = 0.1;       // entropy gap target
  std::uint64_t seed = 1;
  std::size_t sample_count = 64;
  GenericWordOptions sampling;
};

struct DensityReport {
  double h_mu = 0.0;
  double h_nu = 0.0;
  double entropy_gap = 0.0;
  RhoDistance rho;
  // n (h_mu - eta/2) / (n + 1 + L): the separated-set entropy floor.
  double entropy_floor = 0.0;
  std::size_t max_connector = 0;
  std::size_t vertices = 0;
  std::vector<std::string> modes;
  bool rho_met = false;
  bool entropy_met = false;
  bool floor_met = false;
  double seconds = 0.0;
  DensityOptions options;
  nlohmann::json graph_spec;

  nlohmann::json to_json() const;
};

// Uniform mixture of ergodic components approximated by the Parry measure of
// a concatenated system. Components that are the maximal-entropy measure of
// their support use the full support language; others use sampled words.
DensityReport density_demo(const FiniteGraph& ambient,
                           const std::vector<std::shared_ptr<const MarkovMeasure>>& components,
                           const DensityOptions& options = {});

}  // namespace cms
