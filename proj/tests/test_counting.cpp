#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cms/errors.hpp"
#include "support.hpp"

namespace cms {
namespace {

using testing::brute_force_paths;
using testing::explicit_graph;
using testing::full_shift;
using testing::golden_mean;
using testing::renewal;

std::vector<BigInt> ints(std::initializer_list<long> xs) {
  std::vector<BigInt> out;
  for (long x : xs) out.emplace_back(x);
  return out;
}

// Entries (A^n)_{11} by explicit matrix powers.
BigInt matrix_power_entry(const FiniteGraph& g, std::size_t a, std::size_t n) {
  const std::size_t k = g.size();
  std::vector<std::vector<BigInt>> power(k, std::vector<BigInt>(k));
  for (std::size_t i = 0; i < k; ++i) power[i][i] = 1;
  for (std::size_t step = 0; step < n; ++step) {
    std::vector<std::vector<BigInt>> next(k, std::vector<BigInt>(k));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t m : g.successors(j)) next[i][m] += power[i][j];
      }
    }
    power = std::move(next);
  }
  return power[a][a];
}

TEST(LoopCount, Examples) {
  EXPECT_EQ(loop_count(testing::single_loop(), 1, 6).values, ints({1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(loop_count(golden_mean(), 1, 4).values, ints({1, 2, 3, 5}));
  EXPECT_EQ(loop_count(full_shift(2), 1, 3).at(3), 4);
}

TEST(LoopCount, MatchesMatrixPowers) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const CmsGraph g = testing::random_finite_graph(rng, 6, 0.4);
    const CountSeries s = loop_count(g, 1, 12);
    for (std::size_t n = 1; n <= 12; ++n) {
      EXPECT_EQ(s.at(n), matrix_power_entry(g.finite_graph(), 0, n));
    }
  }
}

TEST(FirstReturnCount, Examples) {
  const CountSeries r = first_return_count(renewal(), 1, 30);
  for (const BigInt& v : r.values) EXPECT_EQ(v, 1);
  EXPECT_EQ(first_return_count(golden_mean(), 1, 6).values, ints({1, 1, 0, 0, 0, 0}));
  // Returns to 1 pass only through 2: one loop per length.
  EXPECT_EQ(first_return_count(full_shift(2), 1, 5).values, ints({1, 1, 1, 1, 1}));
  const PathQuery returns{{1}, {1}, {1}, 5, 2};
  const VisitTable oracle = brute_force_paths(full_shift(2).finite_graph(), returns);
  for (std::size_t n = 1; n <= 5; ++n) EXPECT_EQ(oracle[n][2], 1);
}

TEST(LoopSystemCounts, BaseVertexRenewalSequence) {
  // Z_n at the base of the renewal shift: compositions of n, 2^(n-1).
  const CountSeries z = loop_count(renewal(), 1, 60);
  for (std::size_t n = 1; n <= 60; ++n) EXPECT_EQ(z.at(n), BigInt(1) << (n - 1));
  // First returns equal the loop multiplicities.
  const CmsGraph g = testing::doubling_loops();
  const CountSeries star = first_return_count(g, 1, 40);
  for (std::uint32_t n = 1; n <= 40; ++n) EXPECT_EQ(star.at(n), g.loops().multiplicity(n));
}

TEST(EscapeCount, Examples) {
  // All symbols small and M > n+2: no word qualifies.
  const CountSeries z = escape_count(full_shift(2), 10, 2, 5);
  for (const BigInt& v : z.values) EXPECT_EQ(v, 0);
  EXPECT_EQ(escape_count(renewal(), 1, 1, 2).at(2), 4);
  EXPECT_EQ(escape_count(renewal(), 2, 1, 1).at(1), 0);
  EXPECT_EQ(escape_count_ab(renewal(), 1, 1, 1, 1, 2).at(2), 4);
  EXPECT_EQ(escape_count(renewal(), 1, 1, 4).first_index, 0u);
}

TEST(EscapeCount, Validation) {
  EXPECT_THROW(escape_count(renewal(), 0, 1, 4), CmsError);
  EXPECT_THROW(escape_count(renewal(), 1, 0, 4), CmsError);
  EXPECT_THROW(loop_count(golden_mean(), 3, 4), CmsError);
  try {
    loop_count(renewal(), 1, kMaxLoopDepth + 1);
    FAIL();
  } catch (const CmsError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTruncationInsufficient);
  }
}

// Every DP count equals exhaustive enumeration on graphs with at most five
// truncated symbols.
TEST(PathEngine, BruteForceEquivalenceFiniteGraphs) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<Symbol> pick(1, 5);
  for (int trial = 0; trial < 150; ++trial) {
    const CmsGraph g = testing::random_finite_graph(rng, 5, 0.45);
    PathQuery query;
    for (int i = 0; i < 2; ++i) {
      query.starts.insert(pick(rng));
      query.ends.insert(pick(rng));
      query.marked.insert(pick(rng));
    }
    query.max_steps = 8;
    query.mark_cap = std::uniform_int_distribution<std::size_t>(0, 9)(rng);
    EXPECT_EQ(count_paths(g, query), brute_force_paths(g.finite_graph(), query));
  }
}

TEST(PathEngine, BruteForceEquivalenceLoopSystems) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<Symbol> pick(1, 7);
  for (int trial = 0; trial < 150; ++trial) {
    const CmsGraph g = testing::random_loop_system(rng, trial % 3 != 0);
    PathQuery query;
    const Symbol limit = g.symbol_count() ? g.symbol_count()->convert_to<Symbol>() : 7;
    std::uniform_int_distribution<Symbol> pick_valid(1, std::min<Symbol>(limit, 7));
    for (int i = 0; i < 2; ++i) {
      query.starts.insert(pick_valid(rng));
      query.ends.insert(pick_valid(rng));
      query.marked.insert(pick(rng));
    }
    query.max_steps = 6;
    query.mark_cap = std::uniform_int_distribution<std::size_t>(0, 9)(rng);
    const FiniteGraph oracle = explicit_graph(g, query.max_steps, 7);
    EXPECT_EQ(count_paths(g, query), brute_force_paths(oracle, query)) << "trial " << trial;
  }
}

TEST(CountingProperties, RenewalIdentitySuperadditivityFirstReturnBound) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    const CmsGraph g = trial % 2 ? testing::random_transitive_graph(rng, 5, 0.3)
                                 : testing::random_loop_system(rng, true);
    const std::size_t n_max = 24;
    const CountSeries z = loop_count(g, 1, n_max);
    const CountSeries star = first_return_count(g, 1, n_max);
    auto Z = [&](std::size_t n) { return n == 0 ? BigInt(1) : z.at(n); };
    for (std::size_t n = 1; n <= n_max; ++n) {
      BigInt sum = 0;
      for (std::size_t k = 1; k <= n; ++k) sum += star.at(k) * Z(n - k);
      EXPECT_EQ(z.at(n), sum);
      EXPECT_LE(star.at(n), z.at(n));
      for (std::size_t m = 1; n + m <= n_max; ++m) EXPECT_GE(Z(n + m), Z(n) * Z(m));
    }
  }
}

TEST(CountingProperties, EscapeMonotonicity) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const CmsGraph g = trial % 2 ? testing::random_transitive_graph(rng, 6, 0.3)
                                 : testing::random_loop_system(rng, true);
    const std::size_t n_max = 16;
    for (Symbol q = 1; q <= 3; ++q) {
      for (std::uint64_t M = 1; M <= 4; ++M) {
        const CountSeries lo = escape_count(g, M, q, n_max);
        const CountSeries hi = escape_count(g, M + 1, q, n_max);
        for (std::size_t n = 0; n <= n_max; ++n) EXPECT_LE(hi.at(n), lo.at(n));
      }
      const CountSeries pinned = escape_count_ab(g, 2, q, 1, 1, n_max);
      const CountSeries pinned_bigger = escape_count_ab(g, 2, q + 1, 1, 1, n_max);
      const CountSeries all = escape_count(g, 2, q, n_max);
      for (std::size_t n = 0; n <= n_max; ++n) {
        EXPECT_LE(pinned.at(n), all.at(n));
        EXPECT_LE(pinned_bigger.at(n), pinned.at(n));
      }
    }
  }
}

TEST(CountingProperties, PermutationInvariance) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 25; ++trial) {
    const CmsGraph g = testing::random_finite_graph(rng, 6, 0.4);
    const FiniteGraph& fg = g.finite_graph();
    const Symbol n = fg.size();
    const Symbol q = std::uniform_int_distribution<Symbol>(1, n)(rng);
    std::vector<Symbol> perm(q);
    std::iota(perm.begin(), perm.end(), Symbol{1});
    std::shuffle(perm.begin(), perm.end(), rng);
    auto relabel = [&](Symbol s) { return s <= q ? perm[s - 1] : s; };
    std::vector<Edge> edges;
    for (const Edge& e : fg.edges()) edges.push_back({relabel(e.from), relabel(e.to)});
    const CmsGraph h = CmsGraph::finite(FiniteGraph({fg.symbols().begin(), fg.symbols().end()}, edges));
    for (std::uint64_t M = 1; M <= 3; ++M) {
      EXPECT_EQ(escape_count(g, M, q, 12).values, escape_count(h, M, q, 12).values);
    }
    const Truncation tg = truncate(g, q);
    const Truncation th = truncate(h, q);
    EXPECT_EQ(tg.graph.edge_count(), th.graph.edge_count());
  }
}

TEST(GrowthRate, Examples) {
  CountSeries powers;
  CountSeries zeros;
  CountSeries fib;
  BigInt a = 1;
  BigInt b = 1;
  for (std::size_t n = 1; n <= 40; ++n) {
    powers.values.push_back(BigInt(1) << n);
    zeros.values.push_back(0);
    fib.values.push_back(a);
    const BigInt c = a + b;
    a = b;
    b = c;
  }
  EXPECT_NEAR(growth_rate(powers, GrowthMethod::kTailMax).value, std::numbers::ln2, 1e-12);
  EXPECT_NEAR(growth_rate(powers, GrowthMethod::kAffineFit).value, std::numbers::ln2, 1e-12);
  EXPECT_TRUE(growth_rate(zeros).is_neg_inf());
  EXPECT_TRUE(growth_rate(zeros, GrowthMethod::kTailMax).is_neg_inf());
  const double phi = std::log((1 + std::sqrt(5.0)) / 2);
  EXPECT_NEAR(growth_rate(fib, GrowthMethod::kAffineFit, {20, 40}).value, phi, 1e-3);
  EXPECT_THROW(growth_rate(fib, GrowthMethod::kAffineFit, {20, 41}), CmsError);
  EXPECT_THROW(growth_rate(fib, GrowthMethod::kAffineFit, {30, 20}), CmsError);
}

TEST(GrowthRate, SkipsZerosAndReportsPerN) {
  const CountSeries star = first_return_count(golden_mean(), 1, 10);
  const GrowthEstimate est = growth_rate(star, GrowthMethod::kAffineFit, {1, 10});
  EXPECT_EQ(est.per_n.size(), 2u);
  EXPECT_TRUE(growth_rate(star, GrowthMethod::kAffineFit, {3, 10}).is_neg_inf());
}

TEST(CountSeries, Serialization) {
  const CountSeries s = loop_count(golden_mean(), 1, 3);
  EXPECT_EQ(s.to_csv(), "n,count\n1,1\n2,2\n3,3\n");
  const auto j = s.to_json();
  EXPECT_EQ(j["kind"], "Zn");
  EXPECT_EQ(j["counts"][2], "3");
}

}  // namespace
}  // namespace cms
