#pragma once

// Time-varying treatment regimes: natural-value (MTP) rules, stochastic
// draws, incremental propensity-score interventions, the extended g-formula
// and the sequential exchangeability conditions that license it.
//
// Time points are t = 0..K-1; point t carries covariates L_t (possibly
// several variables, possibly none) followed by a treatment A_t. The outcome
// comes last. The history at t is (L_0, A_0, ..., L_{t-1}, A_{t-1}, L_t),
// where treatment coordinates are the assigned values under a regime.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "causal_ident/joint_pmf.hpp"
#include "causal_ident/model.hpp"
#include "causal_ident/regime.hpp"
#include "causal_ident/verdict.hpp"

namespace causal_ident {

struct TimePoint {
  std::vector<std::string> covariates;
  std::string treatment;
};

struct LongitudinalFrame {
  std::vector<TimePoint> points;
  std::string outcome;

  std::size_t horizon() const noexcept { return points.size(); }
  /// History variable names at time t, in temporal order.
  std::vector<std::string> history(std::size_t t) const;
  /// Every frame variable in temporal order, outcome last.
  std::vector<std::string> ordered() const;
};

/// Checks temporal order, that all treatments share a domain, and that
/// frame variables are observed. Throws Error(InvalidArgument).
void validate_frame(const Model& model, const LongitudinalFrame& frame);

/// Per-time tables indexed by history cell (mixed radix over the history's
/// domains, last variable fastest). An empty optional marks a history where
/// the density is undefined.
template <class S>
struct RegimeDensitySet {
  struct Slice {
    std::vector<std::string> history;
    std::vector<Domain> domains;
    std::vector<std::optional<std::vector<S>>> tables;

    std::size_t cell(const std::vector<int>& labels) const;
    std::vector<int> labels(std::size_t cell) const;
  };
  std::vector<Slice> slices;
  std::vector<std::string> undefined;  // human-readable list of undefined histories
};

/// Table-to-table map phi applied to a conditional treatment pmf: every kind
/// is a row-stochastic kernel q(a') = sum_a p(a) K[a][a'].
struct TreatmentMap {
  enum class Kind { Identity, Map, Kernel };
  Kind kind = Kind::Identity;
  std::vector<std::vector<Rational>> kernel;  // empty for Identity

  static TreatmentMap identity();
  /// Push-forward through a label map: label a moves to targets[a].
  static TreatmentMap map(std::vector<int> targets, std::size_t domain_size);
  static TreatmentMap from_kernel(std::vector<std::vector<Rational>> kernel);

  template <class S>
  std::vector<S> apply(const std::vector<S>& pmf) const;
};

template <class S>
RegimeDensitySet<S> apply_map(const RegimeDensitySet<S>& tables, const TreatmentMap& phi);

/// E[Y^g] by unrolling the regime in every noise configuration.
template <class S>
S regime_mean(const Model& model, const LongitudinalFrame& frame, const Regime& regime);

/// Effective assigned-treatment densities. Static and dynamic rules give
/// indicators, stochastic rules give their declared tables. When any rule
/// reads natural values the recursion over natural treatment laws under the
/// partial static regimes is used for every t; histories where it is
/// undefined are listed in `undefined`.
template <class S>
RegimeDensitySet<S> compute_q_tilde(const Model& model, const LongitudinalFrame& frame,
                                    const Regime& regime);

/// Factual P(A_t | history); undefined where the history has no mass.
template <class S>
RegimeDensitySet<S> treatment_law(const JointPmf<S>& law, const LongitudinalFrame& frame);

/// Law of the natural treatment A_t^g given the assigned history under g,
/// by exact unrolling of the full law.
template <class S>
RegimeDensitySet<S> natural_treatment_law(const Model& model, const LongitudinalFrame& frame,
                                          const Regime& regime);

template <class S>
struct GFormulaValue {
  S value;     // sum form
  S weighted;  // E[Y prod q/p]
};

/// Extended g-formula in both forms; they are required to agree within 1e-10
/// (exactly in rational mode). Throws Error(PositivityViolation) when q puts
/// mass on a history the law does not support, Error(ZeroMassEvent) when q is
/// undefined where it is needed.
template <class S>
GFormulaValue<S> extended_g_formula(const JointPmf<S>& law, const LongitudinalFrame& frame,
                                    const RegimeDensitySet<S>& q);

/// Psi_g with q = phi(P_{A_t | history}).
template <class S>
S psi_g(const JointPmf<S>& law, const LongitudinalFrame& frame, const TreatmentMap& phi);

/// q(1|h) = beta p(1|h) / (beta p(1|h) + 1 - p(1|h)); binary treatments only.
template <class S>
RegimeDensitySet<S> incremental_ps_densities(const JointPmf<S>& law,
                                             const LongitudinalFrame& frame, const S& beta);

/// Stochastic regime whose draw tables are `tables` (undefined histories stay
/// undefined and are noted in the regime's warnings).
template <class S>
Regime stochastic_regime(const Model& model, const LongitudinalFrame& frame,
                         const RegimeDensitySet<S>& tables, std::string name);

template <class S>
Regime incremental_ps_regime(const Model& model, const JointPmf<S>& law,
                             const LongitudinalFrame& frame, const S& beta);

template <class S>
struct MtpParameters {
  S gamma_mtp;
  S gamma_mtp_si_g1;
  S gamma_mtp_si;
  std::vector<std::string> warnings;
};

/// gamma_MTP = E[Y^{g1}]; gamma_MTP-SI^{g1} draws from phi(P^{g1}); gamma_MTP-SI
/// draws from phi(P).
template <class S>
MtpParameters<S> mtp_parameters(const Model& model, const LongitudinalFrame& frame,
                                const Regime& g1, const TreatmentMap& phi);

struct ZSets {
  std::vector<std::string> z;
  std::vector<std::string> s;
  std::vector<std::vector<std::string>> z_k;
  std::vector<std::vector<std::string>> s_k;
};

/// Node sets of the intervened graph G(g). Natural treatment nodes carry the
/// treatment's name, assigned nodes append "+". Latent variables are traversed
/// but not listed.
ZSets z_sets(const Model& model, const LongitudinalFrame& frame, const Regime& regime);

struct BReport {
  ConditionVerdict b11;
  ConditionVerdict b12;
  ConditionVerdict b13;
  ConditionVerdict b14;
  ZSets sets;
  std::vector<std::string> skipped;
};

template <class S>
BReport check_b(const Model& model, const LongitudinalFrame& frame, const Regime& regime,
                double tol);

}  // namespace causal_ident
