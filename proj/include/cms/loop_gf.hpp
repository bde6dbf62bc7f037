#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cms/graph.hpp"

namespace cms {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double mid() const;
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool exact() const { return lo == hi; }
};

nlohmann::json interval_to_json(const Interval& iv);

// Loop lengths kept by a sub-loop-system.
struct LengthRange {
  std::uint64_t min_length = 1;
  std::optional<std::uint64_t> max_length;
};

// Loop generating function f(x) = sum_l w_l x^l of a loop system (w_l = a_l,
// possibly reweighted), written in the tilt s = -log(x) - log(growth):
//   F(s) = sum_l u_l e^{-s l},  u_l = w_l growth^{-l}.
// The radius of convergence sits at s = 0 for infinite systems; finite
// systems admit every real s. Entropy-type quantities are log(growth) + s.
class LoopGF {
 public:
  // Terms beyond this length are bounded, not summed, for tails without a
  // closed form.
  static constexpr std::uint32_t kSummationDepth = 1u << 17;

  explicit LoopGF(const LoopSystem& sys, LengthRange range = {});

  // Potential -t * 1_{[1..q]}: every loop is weighted by e^{-t m}, where m is
  // the number of its symbols (returning base included) that are <= q.
  static LoopGF weighted(const LoopSystem& sys, Symbol q, double t);

  bool infinite() const { return tail_ != TailKind::kNone; }
  double log_growth() const { return log_growth_; }

  Interval value(double s) const;
  // sum_l l u_l e^{-s l}; the mean return time when F(s) = 1.
  Interval mean(double s) const;

  enum class RootKind {
    kInterior,      // F(s*) = 1 with s* > 0 (or any s* for finite systems)
    kCritical,      // F(0) = 1 exactly
    kNone,          // F(0) < 1: no root, the system is transient
    kUndetermined,  // F(0) is not separated from 1 by the available bounds
  };
  struct Root {
    RootKind kind = RootKind::kUndetermined;
    double s = 0.0;  // root (0 when none)
    Interval bracket;
    Interval f_at_radius;  // F(0) for infinite systems
  };
  // Root of F(s) = 1 by bisection to full double precision.
  Root root() const;

  // log of the smallest x where f(x) >= 1, or of the radius: log(growth) + max(s*, 0).
  double log_spectral() const;

 private:
  enum class TailKind { kNone, kExact, kPower, kGreedy };

  LoopGF() = default;
  void add_term(std::uint64_t length, double u);
  // sum_l l^moment u_l e^{-s l} over the summed terms.
  double sum_terms(double s, int moment) const;
  Interval tail_value(double s) const;
  Interval tail_mean(double s) const;

  double log_growth_ = 0.0;
  double growth_ = 1.0;
  double scale_ = 1.0;
  std::vector<std::pair<std::uint64_t, double>> terms_;  // sorted by length
  double max_term_ = 0.0;
  // Sum of terms that reweighting added; lets the greedy tail keep F(0) exact.
  std::vector<std::pair<std::uint64_t, double>> adjustments_;
  TailKind tail_ = TailKind::kNone;
  std::uint64_t tail_from_ = 0;  // first length summed by the tail formula
  double tail_coeff_ = 0.0;
  std::uint32_t tail_power_ = 0;
  // Greedy tails over all lengths have F(0) = 1 exactly.
  bool unit_at_radius_ = false;
};

}  // namespace cms
