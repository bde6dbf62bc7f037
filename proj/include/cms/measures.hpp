#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cms/graph.hpp"
#include "cms/loop_gf.hpp"

namespace cms {

// A shift-invariant probability measure (or sub-probability, for mixtures
// in progress) known through its cylinder masses.
class InvariantMeasure {
 public:
  virtual ~InvariantMeasure() = default;
  virtual double entropy() const = 0;
  // Mass of the cylinder [w_0 ... w_{k-1}] in ambient symbols.
  virtual double cylinder_mass(std::span<const Symbol> word) const = 0;
  // Sum of the masses of [a] over symbols a <= q.
  virtual double prefix_mass(const BigInt& q) const = 0;
  virtual std::string describe() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using MeasurePtr = std::shared_ptr<const InvariantMeasure>;

struct Transition {
  Symbol from = 0;
  Symbol to = 0;
  double p = 0.0;
};

// Stationary Markov chain on finitely many states. Each state carries an
// ambient label; with distinct labels the chain is a Markov measure on the
// ambient shift, otherwise it is its image under the labeling (a factor of
// the chain, entropy-preserving when the labeling has no diamonds).
class MarkovMeasure final : public InvariantMeasure {
 public:
  // States are the symbols of `support` (any distinct positive integers);
  // `pi` is indexed like support.symbols(). Validates sum(pi) = 1,
  // stochastic rows, pi P = pi to 1e-10 and that P lives on support edges.
  MarkovMeasure(FiniteGraph support, std::vector<double> pi, const std::vector<Transition>& P,
                std::vector<Symbol> labels = {});

  // Stationary distribution solved from P (the support must be irreducible).
  static MarkovMeasure from_transitions(FiniteGraph support, const std::vector<Transition>& P,
                                        std::vector<Symbol> labels = {});
  // i.i.d. measure on the full shift over `symbols`.
  static MarkovMeasure bernoulli(const std::vector<Symbol>& symbols,
                                 const std::vector<double>& probs);
  // Uniform measure on the periodic orbit of a cycle word (c_0 ... c_{p-1}).
  static MarkovMeasure periodic_orbit(const Word& cycle);

  const FiniteGraph& support() const { return support_; }
  const std::vector<double>& stationary() const { return pi_; }
  // Row of P for the state with index i: (state index, probability).
  const std::vector<std::pair<std::size_t, double>>& row(std::size_t i) const { return rows_[i]; }
  double transition(Symbol from, Symbol to) const;
  Symbol label(std::size_t i) const { return labels_[i]; }
  bool labels_injective() const { return injective_; }
  // Every labeled transition is an edge of the ambient graph.
  bool lives_on(const CmsGraph& ambient) const;

  double entropy() const override;
  double cylinder_mass(std::span<const Symbol> word) const override;
  double prefix_mass(const BigInt& q) const override;
  std::string describe() const override;
  nlohmann::json to_json() const override;

  static MarkovMeasure from_json(const nlohmann::json& doc);

 private:
  FiniteGraph support_;
  std::vector<double> pi_;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows_;
  std::vector<Symbol> labels_;
  bool injective_ = true;
  std::vector<std::pair<Symbol, std::size_t>> by_label_;  // sorted (label, state)
};

// Parry (maximal-entropy) measure of a sub-loop-system: all loops of the
// ambient system with lengths in `range`, each loop of length l chosen at
// the base with probability x^l where sum a_l x^l = 1.
class LoopMarkovMeasure final : public InvariantMeasure {
 public:
  LoopMarkovMeasure(const LoopSystem& ambient, LengthRange range);

  const LengthRange& range() const { return range_; }
  double base_mass() const { return pi_base_; }
  // log(1/x): the entropy, kept as log(growth) + s for precision.
  double log_growth() const { return log_growth_; }
  double excess() const { return s_; }

  double entropy() const override { return log_growth_ + s_; }
  double cylinder_mass(std::span<const Symbol> word) const override;
  double prefix_mass(const BigInt& q) const override;
  std::string describe() const override;
  nlohmann::json to_json() const override;

 private:
  bool in_range(std::uint64_t length) const;
  // Probability of entering a given loop of this length from the base.
  double loop_probability(std::uint64_t length) const;

  LoopSystem ambient_;
  LengthRange range_;
  double log_growth_ = 0.0;
  double s_ = 0.0;
  double pi_base_ = 0.0;
};

// Finite convex combination sum_i w_i mu_i; masses are linear and entropy is
// affine in the weights.
class MeasureMixture final : public InvariantMeasure {
 public:
  explicit MeasureMixture(std::vector<std::pair<double, MeasurePtr>> parts);

  const std::vector<std::pair<double, MeasurePtr>>& parts() const { return parts_; }

  double entropy() const override;
  double cylinder_mass(std::span<const Symbol> word) const override;
  double prefix_mass(const BigInt& q) const override;
  std::string describe() const override;
  nlohmann::json to_json() const override;

 private:
  std::vector<std::pair<double, MeasurePtr>> parts_;
};

struct MeasureSequence {
  std::vector<MeasurePtr> measures;
  std::string tag;
};

// Maximal-entropy measure of a strongly connected finite graph.
MarkovMeasure parry_measure(const FiniteGraph& graph);

struct PerronData {
  double lambda = 0.0;
  std::vector<double> right;  // A v = lambda v
  std::vector<double> left;   // u A = lambda u
  std::size_t period = 1;
};
// Perron eigendata of a strongly connected graph, computed on the cyclic
// classes so that periodic graphs converge.
PerronData perron_data(const FiniteGraph& graph);

// Cylinder masses and the mass of a weak* (cylinder) limit.
struct CylinderLimit {
  Word word;
  double limit = 0.0;
  double spread = 0.0;  // max deviation from the limit over the final third
  bool converged = false;
};

struct MassLadderStep {
  BigInt q;
  double limit = 0.0;
  bool converged = false;
};

struct LimitReport {
  std::vector<CylinderLimit> cylinders;
  std::vector<MassLadderStep> ladder;
  double mass = 0.0;  // |mu|
  std::vector<Word> non_convergent;
  // mu/|mu| when the mass is positive and the limit is identified.
  MeasurePtr normalized;
  std::string normalized_method;  // "persistent-components", "markov-fit" or ""

  nlohmann::json to_json() const;
};

// Default prefix-mass ladder: symbols 1..S for finite graphs; for loop
// systems the last symbol of loops of length <= L for L = 1, 2, 4, ..., 128.
std::vector<BigInt> default_mass_ladder(const CmsGraph& ambient);

LimitReport cylinder_limit(const MeasureSequence& seq, const std::vector<Word>& cylinders,
                           double tolerance, const std::vector<BigInt>& ladder,
                           const FiniteGraph* finite_ambient = nullptr);

// Truncated rho distance: admissible cylinders of the ambient graph up to
// `depth` symbols, ordered by length then lexicographically, the k-th with
// weight 2^-k.
struct RhoDistance {
  double value = 0.0;
  std::size_t cylinders = 0;
  double omitted_weight = 0.0;  // bound on the contribution of the rest
};
RhoDistance rho_distance(const InvariantMeasure& mu, const InvariantMeasure& nu,
                         const FiniteGraph& ambient, std::size_t depth);

}  // namespace cms
