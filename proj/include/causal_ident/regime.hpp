#pragma once

// Intervention plans. A Regime holds at most one rule per intervened variable.
// Rules read a declared list of input variables; an input that is itself
// intervened contributes its assigned value.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causal_ident/model.hpp"
#include "causal_ident/numeric.hpp"

namespace causal_ident {

enum class RuleKind { Static, Dynamic, NaturalValue, Stochastic };

const char* to_string(RuleKind kind);

struct Rule {
  RuleKind kind = RuleKind::Static;
  std::size_t target = 0;
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> input_strides;  // mixed radix, last input fastest
  std::size_t key_count = 1;

  int value = 0;            // Static
  std::vector<int> assign;  // Dynamic: [key]; NaturalValue: [natural * key_count + key]
  // Stochastic: one pmf per input key; nullopt marks a history the rule does
  // not define (reaching it with positive mass is a ZeroMassEvent).
  std::vector<std::optional<std::vector<Rational>>> draws;
  std::vector<std::vector<double>> draws_f;

  std::size_t key(std::span<const int> values) const;

  template <class S>
  S draw_prob(std::size_t key, int label) const {
    if constexpr (is_exact_v<S>) {
      return (*draws[key])[static_cast<std::size_t>(label)];
    } else {
      return draws_f[key][static_cast<std::size_t>(label)];
    }
  }

  bool defined(std::size_t key) const {
    return kind != RuleKind::Stochastic || draws[key].has_value();
  }

  bool operator==(const Rule& other) const;
};

class Regime {
 public:
  Regime() = default;
  explicit Regime(std::string name) : name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  const std::vector<Rule>& rules() const noexcept { return rules_; }
  const Rule* rule_for(std::size_t var) const;
  bool empty() const noexcept { return rules_.empty(); }
  bool has_stochastic() const;
  bool has_natural_value() const;
  std::size_t stochastic_count() const;

  Regime& set_static(std::size_t var, int label);
  Regime& set_static(const Model& model, std::string_view var, std::string_view label);
  Regime& set_dynamic(std::size_t var, std::vector<std::size_t> inputs, std::vector<int> table,
                      const Model& model);
  Regime& set_natural_value(std::size_t var, std::vector<std::size_t> inputs,
                            std::vector<int> table, const Model& model);
  Regime& set_stochastic(std::size_t var, std::vector<std::size_t> inputs,
                         std::vector<std::optional<std::vector<Rational>>> tables,
                         const Model& model);

  /// Canonical description, e.g. "do(A=1,M=0)"; used when no name is set.
  std::string describe(const Model& model) const;

  /// Notes recorded while building the regime (e.g. histories left undefined).
  std::vector<std::string>& warnings() noexcept { return warnings_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Content equality; names and warnings are ignored.
  bool same_rules(const Regime& other) const { return rules_ == other.rules_; }

 private:
  Rule& slot(std::size_t var);

  std::string name_;
  std::vector<Rule> rules_;
  std::vector<std::string> warnings_;
};

/// Checks that rules only read variables preceding their target and that
/// every defined stochastic slice is a pmf. Throws Error(InvalidArgument |
/// InvalidPMF).
void validate_regime(const Model& model, const Regime& regime);

/// Number of label combinations of `vars` and their mixed-radix strides.
std::size_t mixed_radix(const Model& model, std::span<const std::size_t> vars,
                        std::vector<std::size_t>& strides);

}  // namespace causal_ident
