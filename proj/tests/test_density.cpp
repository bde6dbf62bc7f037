#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cms/density.hpp"
#include "cms/errors.hpp"
#include "cms/spec_io.hpp"
#include "support.hpp"

namespace cms {
namespace {

const double kLog2 = std::log(2.0);

std::shared_ptr<const MarkovMeasure> coin() {
  return std::make_shared<MarkovMeasure>(MarkovMeasure::bernoulli({1, 2}, {0.5, 0.5}));
}

std::shared_ptr<const MarkovMeasure> fixed_point(Symbol s) {
  return std::make_shared<MarkovMeasure>(MarkovMeasure::periodic_orbit({s}));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const CmsError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kSchema;
}

TEST(GenericWords, Examples) {
  const auto words = generic_words(*coin(), 10, 8, 7);
  ASSERT_EQ(words.size(), 8u);
  std::set<Word> prefixes;
  for (const Word& w : words) {
    EXPECT_EQ(w.size(), 11u);
    prefixes.insert(Word(w.begin(), w.end() - 1));
  }
  EXPECT_EQ(prefixes.size(), 8u);
  EXPECT_EQ(generic_words(*coin(), 10, 8, 7), words);

  const MarkovMeasure cycle = MarkovMeasure::periodic_orbit({1, 2, 3});
  const auto one = generic_words(cycle, 5, 1, 3, {.start = 2});
  EXPECT_EQ(one, (std::vector<Word>{{2, 3, 1, 2, 3, 1}}));
}

TEST(GenericWords, PinnedEndpoints) {
  GenericWordOptions options;
  options.start = 1;
  options.end = 2;
  for (const Word& w : generic_words(*coin(), 12, 20, 5, options)) {
    EXPECT_EQ(w.front(), 1u);
    EXPECT_EQ(w.back(), 2u);
  }
}

TEST(GenericWords, Exhausted) {
  EXPECT_EQ(code_of([] { generic_words(*coin(), 3, 9, 1); }), ErrorCode::kSamplingExhausted);
  EXPECT_EQ(code_of([] { generic_words(*fixed_point(1), 4, 2, 1); }), ErrorCode::kSamplingExhausted);
  GenericWordOptions strict;
  strict.beta = 1e-6;
  strict.max_attempts = 50;
  EXPECT_EQ(code_of([&] { generic_words(*coin(), 7, 4, 1, strict); }), ErrorCode::kSamplingExhausted);
}

TEST(Concatenation, SingleComponentEntropyFloor) {
  const FiniteGraph ambient = testing::full_shift(2).finite_graph();
  for (std::size_t n : {16, 32, 64}) {
    DensityOptions options;
    options.n = n;
    options.rounds = 2;
    options.depth = 3;
    const DensityReport r = density_demo(ambient, {coin()}, options);
    EXPECT_TRUE(r.floor_met);
    // Blocks 1 x..x 1 joined directly: n - 1 free symbols per n + 1 steps.
    EXPECT_EQ(r.max_connector, 0u);
    EXPECT_NEAR(r.h_nu, kLog2 * static_cast<double>(n - 1) / static_cast<double>(n + 1), 1e-9);
  }
}

TEST(Concatenation, IdenticalComponents) {
  const FiniteGraph ambient = testing::full_shift(2).finite_graph();
  DensityOptions options;
  options.n = 12;
  options.rounds = 2;
  options.depth = 3;
  const DensityReport once = density_demo(ambient, {coin()}, options);
  const DensityReport twice = density_demo(ambient, {coin(), coin()}, options);
  EXPECT_NEAR(once.h_nu, twice.h_nu, 1e-9);
  EXPECT_NEAR(once.rho.value, twice.rho.value, 1e-9);
}

TEST(Concatenation, SampledMode) {
  // A biased coin is not the maximal measure of its support.
  const FiniteGraph ambient = testing::full_shift(2).finite_graph();
  const auto biased = std::make_shared<MarkovMeasure>(MarkovMeasure::bernoulli({1, 2}, {0.7, 0.3}));
  DensityOptions options;
  options.n = 16;
  options.rounds = 2;
  options.depth = 3;
  options.sample_count = 32;
  const DensityReport r = density_demo(ambient, {biased}, options);
  EXPECT_EQ(r.modes, (std::vector<std::string>{"sampled"}));
  // 32 words of 17 symbols pinned at both ends: 32 paths per 17 steps.
  EXPECT_NEAR(r.h_nu, std::log(32.0) / 17.0, 1e-9);
}

TEST(Concatenation, ConnectorsAndSupport) {
  // Ambient 1 -> 2 -> 3 -> 1 with self-loops at 1 and 3: from 3 to 3 no
  // connector is needed, from 1 to 3 the connector is "2".
  const FiniteGraph ambient({1, 2, 3}, {{1, 1}, {1, 2}, {2, 3}, {3, 3}, {3, 1}});
  std::vector<ComponentBlocks> comps(2);
  comps[0].measure = fixed_point(1);
  comps[0].start = comps[0].end = 1;
  comps[1].measure = fixed_point(3);
  comps[1].start = comps[1].end = 3;
  const ConcatenatedSystem sys = concatenated_system(ambient, comps, 4, 3);
  EXPECT_EQ(sys.connectors, (std::vector<Word>{{2}, {}}));
  EXPECT_EQ(sys.max_connector, 1u);
  EXPECT_EQ(sys.graph.size(), 3u * (5 + 1 + 5));
  EXPECT_TRUE(sys.graph.strongly_connected());
  for (const Edge& e : sys.graph.edges()) {
    EXPECT_TRUE(ambient.has_edge(sys.labels[e.from - 1], sys.labels[e.to - 1]));
  }
  EXPECT_NEAR(sys.nu->entropy(), 0.0, 1e-12);
}

TEST(Concatenation, NoConnector) {
  const FiniteGraph split({1, 2}, {{1, 1}, {2, 2}});
  std::vector<ComponentBlocks> comps(2);
  comps[0].measure = fixed_point(1);
  comps[0].start = comps[0].end = 1;
  comps[1].measure = fixed_point(2);
  comps[1].start = comps[1].end = 2;
  EXPECT_EQ(code_of([&] { concatenated_system(split, comps, 3, 1); }), ErrorCode::kConnectorNotFound);
}

TEST(Concatenation, GraphSpecRoundTrip) {
  const FiniteGraph ambient = testing::full_shift(3).finite_graph();
  DensityOptions options;
  options.n = 6;
  options.rounds = 2;
  options.depth = 2;
  const DensityReport r = density_demo(ambient, {coin(), fixed_point(3)}, options);
  const CmsGraph loaded = load_graph(r.graph_spec);
  ASSERT_TRUE(loaded.is_finite());
  EXPECT_EQ(loaded.finite_graph().size(), r.vertices);
  EXPECT_TRUE(loaded.finite_graph().strongly_connected());
}

TEST(Concatenation, RejectsNonErgodicComponent) {
  const FiniteGraph ambient = testing::full_shift(2).finite_graph();
  const FiniteGraph two_points({1, 2}, {{1, 1}, {2, 2}});
  const auto reducible = std::make_shared<MarkovMeasure>(
      two_points, std::vector<double>{0.5, 0.5}, std::vector<Transition>{{1, 1, 1.0}, {2, 2, 1.0}});
  EXPECT_EQ(code_of([&] { density_demo(ambient, {reducible}); }), ErrorCode::kValidation);
}

TEST(Density, MixtureDemo) {
  const FiniteGraph ambient = testing::full_shift(3).finite_graph();
  const DensityReport r = density_demo(ambient, {coin(), fixed_point(3)});
  EXPECT_NEAR(r.h_mu, kLog2 / 2, 1e-12);
  EXPECT_LE(r.rho.value, 0.05);
  EXPECT_LE(r.entropy_gap, 0.1);
  EXPECT_TRUE(r.floor_met);
  EXPECT_LT(r.seconds, 120.0);
}

TEST(Density, RhoShrinksWithBlockLength) {
  const FiniteGraph ambient = testing::full_shift(3).finite_graph();
  double previous = 1.0;
  for (std::size_t n : {4, 16, 64}) {
    DensityOptions options;
    options.n = n;
    options.rounds = 2;
    const DensityReport r = density_demo(ambient, {coin(), fixed_point(3)}, options);
    EXPECT_LT(r.rho.value, previous) << n;
    previous = r.rho.value;
  }
}

}  // namespace
}  // namespace cms
