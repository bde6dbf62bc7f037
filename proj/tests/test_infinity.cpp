#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "cms/errors.hpp"
#include "cms/infinity.hpp"
#include "cms/thermo.hpp"
#include "support.hpp"

namespace cms {
namespace {

using testing::doubling_loops;
using testing::full_shift;
using testing::renewal;

const double kLog2 = std::log(2.0);

// Root of an increasing function on (lo, hi) by plain bisection.
double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const CmsError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kValidation;
}

TEST(Pressure, RenewalClosedForm) {
  for (double t : {0.0, 0.5, 1.0, 3.0, 10.0}) {
    EXPECT_NEAR(pressure_indicator(renewal(), 1, t), std::log1p(std::exp(-t)), 1e-10) << t;
  }
  EXPECT_EQ(pressure_indicator_limit(renewal(), 1), 0.0);
}

TEST(Pressure, DoublingMatchesRootOracle) {
  // a_1 = 1, a_l = 2^l: e^{-t} (x + 4x^2 / (1 - 2x)) = 1 on (0, 1/2).
  for (double t : {0.0, 1.0, 4.0}) {
    const double x = bisect(
        [t](double x) { return std::exp(-t) * (x + 4 * x * x / (1 - 2 * x)) - 1.0; }, 0.0, 0.5);
    EXPECT_NEAR(pressure_indicator(doubling_loops(), 1, t), -std::log(x), 1e-9) << t;
  }
  EXPECT_NEAR(pressure_indicator_limit(doubling_loops(), 1), kLog2, 1e-15);
}

TEST(Pressure, FiniteGraphClosedForm) {
  // Full 2-shift, F = {1}: rows (e^-t, e^-t), (1, 1), Perron root 1 + e^-t.
  for (double t : {0.0, 0.7, 5.0}) {
    EXPECT_NEAR(pressure_indicator(full_shift(2), 1, t), std::log1p(std::exp(-t)), 1e-10);
  }
  EXPECT_NEAR(pressure_indicator_limit(full_shift(2), 1), 0.0, 1e-12);
  EXPECT_TRUE(std::isinf(pressure_indicator_limit(full_shift(2), 2)));
}

TEST(Pressure, ZeroPotentialIsEntropyAndDecreasing) {
  for (const CmsGraph& g : {renewal(), doubling_loops(), testing::golden_mean(), full_shift(3)}) {
    const double h = gurevich_entropy(g, 1, 40).value();
    EXPECT_NEAR(pressure_indicator(g, 1, 0.0), h, 1e-6);
    double previous = std::numeric_limits<double>::infinity();
    for (double t : default_t_grid()) {
      const double p = pressure_indicator(g, 2, t);
      EXPECT_LE(p, previous + 1e-12);
      previous = p;
    }
  }
}

TEST(BInf, Examples) {
  const BInfCurve r = b_inf_estimate(renewal(), {1, 2, 4}, {0.1, 0.01, 0.001}, default_t_grid());
  EXPECT_LE(r.headline, 0.1);
  EXPECT_GE(r.headline, 0.0);
  const BInfCurve d = b_inf_estimate(doubling_loops(), {1, 2, 4}, {0.1, 0.01, 0.001}, default_t_grid());
  EXPECT_NEAR(d.headline, kLog2, 0.1);
  EXPECT_GE(d.headline, kLog2 - 1e-12);
  // Dual values are nondecreasing in lambda (listed largest first).
  for (const auto& row : d.dual) {
    for (std::size_t i = 1; i < row.size(); ++i) EXPECT_LE(row[i], row[i - 1] + 1e-12);
  }
  EXPECT_EQ(code_of([] { b_inf_estimate(full_shift(2), {2}, {0.01}, default_t_grid()); }),
            ErrorCode::kNoEscape);
}

TEST(HInf, DriftEntropiesMatchRootOracle) {
  // Renewal loops of length >= k: x^k / (1 - x) = 1.
  const HInfReport r = h_inf_lower_bound(renewal(), {2, 8, 32, 128, 512, 2048, 8192});
  for (std::size_t i = 0; i < r.schedule.size(); ++i) {
    const double k = static_cast<double>(r.schedule[i]);
    const double x = bisect([k](double x) { return std::pow(x, k) / (1 - x) - 1.0; }, 0.0, 1.0);
    EXPECT_NEAR(r.entropies[i], -std::log(x), 1e-9);
  }
}

TEST(HInf, Examples) {
  const HInfReport r = h_inf_lower_bound(renewal(), default_drift_schedule());
  EXPECT_LE(r.value, 0.1);
  EXPECT_GE(r.value, 0.0);
  EXPECT_NEAR(r.limit.mass, 0.0, 1e-6);
  const HInfReport d = h_inf_lower_bound(doubling_loops(), default_drift_schedule());
  EXPECT_NEAR(d.value, kLog2, 0.05);
  EXPECT_GE(d.value, kLog2);
  EXPECT_EQ(code_of([] { h_inf_lower_bound(full_shift(2), {8, 64, 512}); }), ErrorCode::kNotDrifting);
}

TEST(HInf, EstimatorSandwich) {
  for (const CmsGraph& g : {renewal(), doubling_loops()}) {
    const double h = h_inf_lower_bound(g, default_drift_schedule()).value;
    const double b = b_inf_estimate(g, {1, 2, 4}, {0.01, 0.001}, default_t_grid()).headline;
    const double d = delta_inf(g, {32, 64}, {1, 2}, 400, 4).headline;
    EXPECT_LE(h, b + 1e-9);
    EXPECT_LE(h, d + 0.02);
  }
}

TEST(MainInequality, FamiliesOnLoopSystems) {
  for (const CmsGraph& g : {renewal(), doubling_loops()}) {
    const double delta = loop_system_delta_inf(g.loops());
    const MeasurePtr mme = loop_mme(g.loops());
    const MeasureSequence drift = drift_sequence(g.loops(), default_drift_schedule());
    const ExperimentReport constant = verify_main_inequality(g, constant_sequence(mme, 12), delta);
    EXPECT_TRUE(constant.pass);
    EXPECT_NEAR(constant.slack, 0.0, 1e-9);
    EXPECT_NEAR(constant.lhs, mme->entropy(), 1e-12);

    const ExperimentReport pure = verify_main_inequality(g, drift, delta);
    EXPECT_TRUE(pure.pass) << pure.slack;
    EXPECT_NEAR(pure.rhs, delta, 1e-12);

    const ExperimentReport half = verify_main_inequality(g, mixture_sequence(mme, drift, 0.5), delta);
    EXPECT_TRUE(half.pass) << half.slack;
    EXPECT_LE(std::abs(half.slack), 0.05);
    EXPECT_NEAR(half.lhs, 0.5 * mme->entropy() + 0.5 * delta, 1e-6);
  }
}

TEST(MainInequality, CompactGraph) {
  const CmsGraph g = testing::golden_mean();
  MeasurePtr parry = std::make_shared<MarkovMeasure>(parry_measure(g.finite_graph()));
  const ExperimentReport r = verify_main_inequality(
      g, constant_sequence(parry, 6), -std::numeric_limits<double>::infinity());
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.rhs, std::log(std::numbers::phi), 1e-8);
}

TEST(MassBound, Examples) {
  const CmsGraph g = renewal();
  const MeasurePtr mme = loop_mme(g.loops());
  const MeasureSequence drift = drift_sequence(g.loops(), default_drift_schedule());
  const MeasureSequence half = mixture_sequence(mme, drift, 0.5);
  const ExperimentReport r = mass_bound_check(g, half, 0.5 * kLog2, 0.0, kLog2);
  EXPECT_NEAR(r.lhs, 0.5, 1e-12);
  EXPECT_NEAR(r.rhs, 0.5, 0.02);
  EXPECT_TRUE(r.pass);

  // c = h_top: bound 1, met by the constant sequence.
  const ExperimentReport top = mass_bound_check(g, constant_sequence(mme, 6), kLog2, 0.0, kLog2);
  EXPECT_NEAR(top.lhs, 1.0, 1e-12);
  EXPECT_TRUE(top.pass);
  // c = delta_inf: vacuous.
  const ExperimentReport low = mass_bound_check(g, drift, 0.0, 0.0, kLog2);
  EXPECT_EQ(low.lhs, 0.0);
  EXPECT_TRUE(low.pass);

  EXPECT_EQ(code_of([&] { mass_bound_check(g, drift, 0.5 * kLog2, 0.0, kLog2); }),
            ErrorCode::kPreconditionFailed);
  EXPECT_EQ(code_of([&] { mass_bound_check(g, half, 0.5, kLog2, kLog2); }),
            ErrorCode::kPreconditionFailed);
}

TEST(DimensionSeries, Examples) {
  const DimensionSeries r = dimension_series(renewal(), 16, 1, 0.5, 60);
  EXPECT_EQ(r.verdict, SeriesVerdict::kConvergent);
  ASSERT_TRUE(r.small_from.has_value());
  EXPECT_LE(*r.small_from, 60u);
  EXPECT_LT(r.terms.back(), 1e-6);
  // Terms are e^{-s l} z_{l-2} with the exact counts.
  const CountSeries z = escape_count(renewal(), 16, 1, 58);
  EXPECT_NEAR(r.terms[40], std::exp(log_big(z.at(40)) - 42 * 0.5 * kLog2), 1e-12 * r.terms[40] + 1e-300);

  EXPECT_EQ(dimension_series(doubling_loops(), 16, 1, 0.5, 60).verdict, SeriesVerdict::kDiverging);
  EXPECT_EQ(dimension_series(testing::single_loop(), 4, 1, 0.5, 30).verdict,
            SeriesVerdict::kConvergent);
}

TEST(MmeStability, RenewalAndDoubling) {
  for (const CmsGraph& g : {renewal(), doubling_loops()}) {
    const ExperimentReport r =
        mme_stability(g, {4, 8, 16, 32, 64}, default_probe_cylinders(g), 1e-3);
    EXPECT_TRUE(r.pass) << r.lhs;
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1] + 1e-15);
  }
}

}  // namespace
}  // namespace cms
