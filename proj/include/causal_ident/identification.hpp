#pragma once

// Identification claims checked against sampled model classes: evidence
// gathering for "gamma is identified by Psi under M", counterexample search
// for the negation, and the structural audit of identity slippage.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal_ident/longitudinal.hpp"
#include "causal_ident/mediation.hpp"
#include "causal_ident/model.hpp"
#include "causal_ident/spec_io.hpp"
#include "causal_ident/verdict.hpp"

namespace causal_ident {

inline constexpr std::uint64_t kDefaultSeed = 20240611;

// --- selectors ----------------------------------------------------------------

/// Signed sum of named parameters and functionals, e.g. "gamma_rde+gamma_rie"
/// or "psi_rde_w". Parameters are evaluated on the full law, functionals on
/// the observed law of the same model.
struct Quantity {
  struct Term {
    int sign = 1;
    std::string id;
  };
  std::vector<Term> terms;

  /// Throws Error(InvalidArgument) on unknown identifiers.
  static Quantity parse(std::string_view text);
  std::string text() const;
  bool only_parameters() const;
  bool only_functionals() const;
};

bool is_parameter_id(std::string_view id);
bool is_functional_id(std::string_view id);

/// Everything a selector may need beyond the model itself.
struct EvalContext {
  std::optional<MediationFrame> mediation;
  std::optional<LongitudinalFrame> longitudinal;
  std::optional<RegimeSpec> g1;  // natural-value regime for the MTP parameters
  TreatmentMap phi = TreatmentMap::identity();
};

template <class S>
S evaluate(const Quantity& q, const Model& model, const EvalContext& ctx);

// --- model classes ----------------------------------------------------------------

struct SkeletonVar {
  std::string name;
  std::size_t domain_size = 2;
  std::vector<std::string> parents;
  std::size_t noise_size = 4;
  bool observed = true;
  bool randomized = false;  // structural function reads its own noise only
  std::string role;
};

/// Named assumption check: m1, m2, A1.1 ... A2.2, B1.1 ... B1.4 or "positivity"
/// (every treatment value possible at every observed history), optionally negated.
struct Predicate {
  std::string condition;
  bool negate = false;
  double tol = 1e-9;
};

struct ModelClass {
  std::string name;
  std::vector<SkeletonVar> skeleton;
  std::vector<Predicate> predicates;
  EvalContext context;
  std::optional<RegimeSpec> b_regime;  // regime used for B1.2 predicates
  std::size_t max_attempts = 500;
  std::uint32_t weight_max = 16;  // noise weights are drawn from {1..weight_max}
};

/// Built-in classes: "m1", "m2", "mediation", "figure1", "recanting",
/// "long_observed", "w2". Throws Error(InvalidArgument) for other names.
ModelClass builtin_class(std::string_view name);
std::vector<std::string> builtin_class_names();

ModelClass model_class_from_json(const nlohmann::ordered_json& j, std::string name,
                                 const SpecDocument& doc, std::string_view pointer);

/// Builds an unvalidated-but-well-formed spec from skeleton, weights and tables.
struct ModelParameters {
  std::vector<std::vector<std::uint32_t>> weights;  // per variable, per noise label
  std::vector<std::vector<int>> tables;             // per variable, dense rows
};
Model build_model(const ModelClass& cls, const ModelParameters& params);

/// Does `model` satisfy every predicate of the class? Fills `report` with the
/// per-predicate outcome when given.
template <class S>
bool satisfies(const ModelClass& cls, const Model& model, MembershipReport* report = nullptr);

/// Draws a model of the class. Throws Error(GenerationFailed) after
/// cls.max_attempts rejected draws.
Model sample_model(const ModelClass& cls, std::uint64_t seed);

/// Seed of the i-th sample under a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t i);

// --- identification ------------------------------------------------------------

struct VerifyResult {
  bool holds_on_sample = true;
  double max_gap = 0.0;
  std::size_t n = 0;
  std::size_t worst_index = 0;
  std::optional<Model> worst_model;
  std::uint64_t seed = kDefaultSeed;
};

/// Samples n models and checks |gamma - psi| <= tol on each. A ZeroMassEvent
/// is rethrown with the offending model's JSON appended to the detail.
template <class S>
VerifyResult verify_identification(const Quantity& gamma, const Quantity& psi,
                                   const ModelClass& cls, std::size_t n, double tol,
                                   std::uint64_t seed);

struct SearchOptions {
  double clamp = 1e-4;          // noise probabilities stay in [clamp, 1-clamp]
  double initial_step = 0.5;    // multiplicative weight step
  double min_step = 1e-3;
  std::uint32_t grid = 1u << 20;  // pmfs are rounded to multiples of 1/grid
};

struct SearchResult {
  std::optional<Model> best_model;
  double gap = 0.0;
  std::size_t evaluations = 0;
  std::size_t restarts = 0;
  std::size_t rejected = 0;  // candidates failing evaluation or class predicates
  std::vector<std::string> warnings;
};

/// Maximises objective(model) over the class: random restarts plus
/// coordinate hill-climbing on noise weights and single-cell table relabels.
/// Candidates are accepted only if they satisfy the class predicates; the
/// returned model is re-validated and re-checked. Deterministic in `seed`.
SearchResult search_maximum(const ModelClass& cls,
                            const std::function<double(const Model&)>& objective,
                            std::size_t budget, std::uint64_t seed,
                            const SearchOptions& options = {});

/// |gamma - psi| maximised over the class (float arithmetic).
SearchResult find_counterexample(const Quantity& gamma, const Quantity& psi,
                                 const ModelClass& cls, std::size_t budget,
                                 std::uint64_t seed, const SearchOptions& options = {});

// --- identity slippage ------------------------------------------------------------

struct AuditConfig {
  std::size_t n = 100;
  std::size_t budget = 50000;
  double tol = 1e-9;
  double gap_floor = 0.01;
  std::uint64_t seed = kDefaultSeed;
};

struct AuditCondition {
  std::string name;  // I1..I4
  bool certified = false;
  std::string summary;
  nlohmann::ordered_json evidence;
};

struct AuditReport {
  std::vector<AuditCondition> conditions;
  bool all_certified = false;
  std::uint64_t seed = kDefaultSeed;
  std::string scope_note;
};

AuditReport audit_slippage(const ModelClass& m1, const ModelClass& m2, const Quantity& gamma1,
                           const Quantity& gamma2, const Quantity& psi1, const Quantity& psi2,
                           const AuditConfig& config);

nlohmann::ordered_json to_json(const MembershipReport& report);
nlohmann::ordered_json to_json(const ConditionVerdict& verdict);
nlohmann::ordered_json to_json(const AuditReport& report);

}  // namespace causal_ident
