#include "cms/loop_gf.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "cms/errors.hpp"
#include "cms/json_number.hpp"

namespace cms {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Largest length summed term by term when a finite range is requested.
constexpr std::uint32_t kMaxFiniteRange = 1u << 22;

// a * growth^-l computed in the log domain.
double scaled(const BigInt& a, std::uint64_t length, double log_growth) {
  if (a <= 0) return 0.0;
  return std::exp(log_big(a) - static_cast<double>(length) * log_growth);
}

// 1 - e^{-s} without cancellation.
double one_minus_exp(double s) { return -std::expm1(-s); }

// Root of a decreasing function f with f(lo) > 1 >= f(hi), to full precision.
double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 4000; ++i) {
    const double mid = lo == 0.0 ? hi / 2 : lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + (hi - lo) / 2;
}

}  // namespace

double Interval::mid() const {
  if (std::isinf(lo) && std::isinf(hi)) return lo;
  if (std::isinf(hi)) return hi;
  return lo + (hi - lo) / 2;
}

nlohmann::json interval_to_json(const Interval& iv) {
  return {json_number(iv.lo), json_number(iv.hi)};
}

LoopGF::LoopGF(const LoopSystem& sys, LengthRange range) {
  const auto in_range = [&](std::uint64_t l) {
    return l >= range.min_length && (!range.max_length || l <= *range.max_length);
  };
  if (sys.infinite()) growth_ = sys.growth();
  log_growth_ = std::log(growth_);

  if (range.max_length || !sys.infinite()) {
    std::uint64_t last = range.max_length.value_or(0);
    if (!sys.infinite()) {
      last = range.max_length ? std::min<std::uint64_t>(last, *sys.max_length()) : *sys.max_length();
    }
    if (last > kMaxFiniteRange) {
      throw CmsError(ErrorCode::kCapacity, "loop length range too long to sum term by term");
    }
    for (auto l = static_cast<std::uint32_t>(std::min<std::uint64_t>(range.min_length, last + 1));
         l <= last; ++l) {
      const BigInt a = sys.multiplicity(l);
      if (a > 0) add_term(l, scaled(a, l, log_growth_));
    }
  } else {
    for (const LoopSpec& spec : sys.explicit_loops()) {
      if (in_range(spec.length) && spec.multiplicity > 0) {
        add_term(spec.length, scaled(spec.multiplicity, spec.length, log_growth_));
      }
    }
    const std::uint64_t depth = kSummationDepth;
    if (const auto* geo = std::get_if<GeometricTail>(&sys.tail())) {
      const std::uint64_t start = std::max<std::uint64_t>(geo->from_length, range.min_length);
      if (growth_ == 1.0 && geo->power == 0) {
        tail_ = TailKind::kExact;
        tail_coeff_ = std::floor(geo->coeff);
        tail_from_ = start;
      } else if (sys.exact_geometric_tail()) {
        tail_ = TailKind::kExact;
        tail_coeff_ = geo->coeff;
        tail_from_ = start;
      } else {
        tail_ = TailKind::kPower;
        tail_coeff_ = geo->coeff;
        tail_power_ = geo->power;
        const double exact_limit = 60 * std::log(2.0);
        const double log_c = std::log(geo->coeff);
        for (std::uint64_t l = start; l < start + depth; ++l) {
          const double log_term = log_c + l * log_growth_ - geo->power * std::log(double(l));
          const double u = log_term < exact_limit
                               ? scaled(sys.tail_multiplicity(static_cast<std::uint32_t>(l)), l,
                                        log_growth_)
                               : geo->coeff / std::pow(double(l), double(geo->power));
          if (u > 0) add_term(l, u);
        }
        tail_from_ = start + depth;
      }
    } else if (std::get_if<GreedyCriticalTail>(&sys.tail())) {
      tail_ = TailKind::kGreedy;
      const std::uint64_t start = range.min_length;
      for (std::uint64_t l = start; l < start + depth; ++l) {
        const double dl = static_cast<double>(l);
        const double u = l < 60 ? scaled(sys.tail_multiplicity(static_cast<std::uint32_t>(l)), l,
                                         log_growth_)
                                : 1.0 / (dl * (dl + 1.0));
        if (u > 0) add_term(l, u);
      }
      tail_from_ = start + depth;
      unit_at_radius_ = range.min_length == 1;
    }
  }
  std::sort(terms_.begin(), terms_.end());
}

void LoopGF::add_term(std::uint64_t length, double u) {
  terms_.emplace_back(length, u);
  max_term_ = std::max(max_term_, u);
}

LoopGF LoopGF::weighted(const LoopSystem& sys, Symbol q, double t) {
  LoopGF gf(sys);
  gf.scale_ = std::exp(-t);
  for (const LoopRef& loop : sys.loops_up_to(q)) {
    std::uint32_t marks = 0;
    for (std::uint32_t o = 1; o < loop.length; ++o) marks += loop.internal(o) <= q ? 1 : 0;
    if (marks == 0) continue;
    const double g_pow = std::exp(-static_cast<double>(loop.length) * gf.log_growth_);
    gf.adjustments_.emplace_back(loop.length, std::expm1(-t * marks) * g_pow);
  }
  return gf;
}

Interval LoopGF::tail_value(double s) const {
  const double D = static_cast<double>(tail_from_) - 1.0;
  switch (tail_) {
    case TailKind::kNone:
      return {0.0, 0.0};
    case TailKind::kExact: {
      if (tail_coeff_ == 0.0) return {0.0, 0.0};
      if (s <= 0.0) return {kInf, kInf};
      const double v = tail_coeff_ * std::exp(-s * tail_from_) / one_minus_exp(s);
      return {v, v};
    }
    case TailKind::kPower: {
      const double c = tail_coeff_;
      const double p = tail_power_;
      const double frac = growth_ > 1.0 ? std::exp(-D * log_growth_) / (growth_ - 1.0) : 0.0;
      const double integral_hi = p >= 2 ? c / ((p - 1) * std::pow(D, p - 1)) : kInf;
      if (s <= 0.0) {
        if (p < 2) return {kInf, kInf};
        return {std::max(0.0, c / ((p - 1) * std::pow(D + 1, p - 1)) - frac), integral_hi};
      }
      const double first = c * std::exp(-s * (D + 1)) / std::pow(D + 1, p);
      return {std::max(0.0, first - frac), std::min(integral_hi, first / one_minus_exp(s))};
    }
    case TailKind::kGreedy: {
      const double slack = std::exp(-D * log_growth_);
      const double total_hi = 1.0 / (D + 1) + slack;
      if (s <= 0.0) return {1.0 / (D + 1), total_hi};
      const double geo = std::exp(-s * (D + 1)) * (1.0 / ((D + 1) * (D + 2)) + slack) /
                         one_minus_exp(s);
      return {0.0, std::min(total_hi, geo)};
    }
  }
  return {0.0, 0.0};
}

Interval LoopGF::tail_mean(double s) const {
  const double D = static_cast<double>(tail_from_) - 1.0;
  switch (tail_) {
    case TailKind::kNone:
      return {0.0, 0.0};
    case TailKind::kExact: {
      if (tail_coeff_ == 0.0) return {0.0, 0.0};
      if (s <= 0.0) return {kInf, kInf};
      const double k = tail_from_;
      const double one_minus_y = one_minus_exp(s);
      const double y = std::exp(-s);
      const double v =
          tail_coeff_ * std::exp(-s * k) * (k * one_minus_y + y) / (one_minus_y * one_minus_y);
      return {v, v};
    }
    case TailKind::kPower: {
      const double c = tail_coeff_;
      const double p = tail_power_;
      if (s <= 0.0) {
        if (p < 3) return {kInf, kInf};
        return {0.0, c / ((p - 2) * std::pow(D, p - 2))};
      }
      const double one_minus_y = one_minus_exp(s);
      if (p == 0) {
        const double k = D + 1;
        const double y = std::exp(-s);
        return {0.0, c * std::exp(-s * k) * (k * one_minus_y + y) / (one_minus_y * one_minus_y)};
      }
      return {0.0, c * std::pow(D + 1, 1 - p) * std::exp(-s * (D + 1)) / one_minus_y};
    }
    case TailKind::kGreedy: {
      if (s <= 0.0) return {kInf, kInf};
      const double slack = (D + 1) * std::exp(-D * log_growth_);
      return {0.0, (1.0 / (D + 2) + slack) * std::exp(-s * (D + 1)) / one_minus_exp(s)};
    }
  }
  return {0.0, 0.0};
}

double LoopGF::sum_terms(double s, int moment) const {
  // Consecutive lengths reuse the previous power of e^{-s}.
  const double step = std::exp(-s);
  double sum = 0.0;
  double power = 0.0;
  std::uint64_t previous = 0;
  for (const auto& [l, u] : terms_) {
    power = previous != 0 && l == previous + 1 ? power * step : std::exp(-s * l);
    previous = l;
    if (s > 0.0 && power < 1e-300) break;
    sum += (moment == 1 ? l * u : u) * power;
    // Remaining terms are bounded by a geometric series.
    if (s > 0.0 && (l & 255) == 0) {
      const double rest = max_term_ * (moment == 1 ? 2.0 * l : 1.0) * power /
                          (one_minus_exp(s) * (moment == 1 ? one_minus_exp(s) : 1.0));
      if (rest < 1e-18 * sum) break;
    }
  }
  return sum;
}

Interval LoopGF::value(double s) const {
  if (infinite() && s < 0.0) return {kInf, kInf};
  double adjust = 0.0;
  for (const auto& [l, u] : adjustments_) adjust += u * std::exp(-s * l);
  if (unit_at_radius_ && s == 0.0) {
    const double v = scale_ * (1.0 + adjust);
    return {v, v};
  }
  const double sum = adjust + sum_terms(s, 0);
  const Interval tail = tail_value(s);
  return {scale_ * (sum + tail.lo), scale_ * (sum + tail.hi)};
}

Interval LoopGF::mean(double s) const {
  if (infinite() && s < 0.0) return {kInf, kInf};
  double sum = sum_terms(s, 1);
  for (const auto& [l, u] : adjustments_) sum += l * u * std::exp(-s * l);
  const Interval tail = tail_mean(s);
  return {scale_ * (sum + tail.lo), scale_ * (sum + tail.hi)};
}

LoopGF::Root LoopGF::root() const {
  Root out;
  const auto lower = [this](double s) { return value(s).lo; };
  const auto upper = [this](double s) { return value(s).hi; };
  if (!infinite()) {
    double lo = -1.0;
    while (value(lo).lo <= 1.0) lo *= 2;
    double hi = 1.0;
    while (value(hi).lo > 1.0) hi *= 2;
    out.kind = RootKind::kInterior;
    out.s = bisect_decreasing(lower, lo, hi);
    out.bracket = {out.s, out.s};
    return out;
  }
  out.f_at_radius = value(0.0);
  const Interval& f0 = out.f_at_radius;
  if (f0.lo > 1.0) {
    double hi = 1.0;
    while (value(hi).hi > 1.0) hi *= 2;
    const double a = bisect_decreasing(lower, 0.0, hi);
    const double b = bisect_decreasing(upper, 0.0, hi);
    out.kind = RootKind::kInterior;
    out.bracket = {std::min(a, b), std::max(a, b)};
    out.s = out.bracket.mid();
    return out;
  }
  if (f0.exact() && f0.lo == 1.0) {
    out.kind = RootKind::kCritical;
    return out;
  }
  out.kind = f0.hi < 1.0 ? RootKind::kNone : RootKind::kUndetermined;
  return out;
}

double LoopGF::log_spectral() const {
  const Root r = root();
  if (r.kind == RootKind::kInterior && (!infinite() || r.s > 0.0)) return log_growth_ + r.s;
  return log_growth_;
}

}  // namespace cms
