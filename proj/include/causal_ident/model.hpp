#pragma once

// Finite-domain structural causal models with independent exogenous noise.
//
// A ModelSpec is the unvalidated, name-based description (what the JSON file
// holds). validate_model() turns it into an immutable Model with dense
// structural tables indexed by label position.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causal_ident/numeric.hpp"

namespace causal_ident {

/// Ordered set of distinct symbolic labels. Label order is canonical for
/// enumeration and tie-breaking.
class Domain {
 public:
  Domain() = default;
  explicit Domain(std::vector<std::string> labels);

  static Domain binary();
  static Domain range(std::size_t n);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<int> find(std::string_view label) const;

  bool operator==(const Domain&) const = default;

 private:
  std::vector<std::string> labels_;
};

struct NoiseSpec {
  std::string name;
  Domain domain;
  std::vector<Rational> pmf;
};

struct TableEntry {
  std::vector<std::string> parents;  // one label per parent, in parent order
  std::string noise;
  std::string out;
};

struct VariableSpec {
  std::string name;
  Domain domain;
  std::vector<std::string> parents;
  NoiseSpec noise;
  std::vector<TableEntry> table;
  bool observed = true;
  std::string role;  // baseline | treatment | post-treatment | mediator | outcome | time-index | ""
};

struct ModelSpec {
  std::vector<VariableSpec> variables;
};

class Model {
 public:
  struct Variable {
    std::string name;
    Domain domain;
    std::vector<std::size_t> parents;
    Domain noise_domain;
    std::vector<Rational> noise_pmf;
    std::vector<double> noise_pmf_f;
    // Dense structural table, row = mixed radix over (parent labels..., noise),
    // noise fastest.
    std::vector<int> table;
    std::vector<std::size_t> parent_strides;
    bool observed = true;
    std::string role;
    std::vector<std::optional<Rational>> numeric_labels;

    std::size_t row(std::span<const int> values, int noise) const;
    std::size_t row_count() const { return table.size(); }
  };

  std::size_t size() const noexcept { return vars_.size(); }
  const Variable& operator[](std::size_t i) const { return vars_[i]; }
  const std::vector<Variable>& variables() const noexcept { return vars_; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws Error(UnknownVariable).
  std::size_t index(std::string_view name) const;

  /// Canonical topological order: stable with respect to declaration order.
  const std::vector<std::size_t>& topological_order() const noexcept { return order_; }

  /// f_V evaluated on a full assignment (indexed by variable) and a noise label.
  int structural(std::size_t var, std::span<const int> values, int noise) const {
    const Variable& v = vars_[var];
    return v.table[v.row(values, noise)];
  }

  template <class S>
  S noise_prob(std::size_t var, int label) const {
    if constexpr (is_exact_v<S>) {
      return vars_[var].noise_pmf[static_cast<std::size_t>(label)];
    } else {
      return vars_[var].noise_pmf_f[static_cast<std::size_t>(label)];
    }
  }

  /// Numeric value of a label (labels such as "0", "1", "2.5"). Throws
  /// Error(InvalidArgument) when the label is not numeric.
  template <class S>
  S numeric_value(std::size_t var, int label) const {
    const auto& v = vars_[var].numeric_labels[static_cast<std::size_t>(label)];
    if (!v) throw_non_numeric(var, label);
    return from_rational<S>(*v);
  }

  /// True when every noise pmf sums to exactly one.
  bool exact_pmfs() const noexcept { return exact_; }

  /// Rational-mode computations require exact pmfs; throws InvalidPMF otherwise.
  template <class S>
  void require_mode() const {
    if constexpr (is_exact_v<S>) require_exact();
  }

  std::uint64_t noise_configurations() const;

  /// Copy with one variable's noise pmf replaced (must be a valid pmf).
  Model with_noise_pmf(std::size_t var, std::vector<Rational> pmf) const;
  /// Copy with one structural table cell relabelled.
  Model with_table_cell(std::size_t var, std::size_t row, int label) const;

  ModelSpec to_spec() const;

 private:
  friend Model validate_model(const ModelSpec&, Arithmetic);
  [[noreturn]] void throw_non_numeric(std::size_t var, int label) const;
  void require_exact() const;

  std::vector<Variable> vars_;
  std::vector<std::size_t> order_;
  bool exact_ = true;
};

/// Certifies acyclicity, table totality and pmf validity. Float mode accepts
/// pmfs within 1e-12 of one; rational mode requires exact sums.
/// Throws Error(CyclicGraph | IncompleteTable | InvalidTable | InvalidPMF |
/// UnknownVariable), naming the offending variable.
Model validate_model(const ModelSpec& spec, Arithmetic mode = Arithmetic::Float);

}  // namespace causal_ident
