#pragma once

#include <span>
#include <string>
#include <vector>

#include "causal_ident/joint_pmf.hpp"
#include "causal_ident/model.hpp"
#include "causal_ident/regime.hpp"

namespace causal_ident {

/// One requested coordinate of a cross-world joint: the value of `variable`
/// in the world of `regime`. With `natural` set, the natural value f_V of an
/// intervened variable is returned instead of its assigned value.
struct QueryItem {
  std::string variable;
  Regime regime;
  bool natural = false;
};

/// Key under which a query item appears in the resulting JointPmf: the bare
/// name for the empty regime, "V@<regime>" otherwise, "V~nat@<regime>" for
/// natural values.
std::string query_key(const Model& model, const QueryItem& item);

/// Exact cross-world joint. Each distinct regime is evaluated once per noise
/// configuration; stochastic rules are integrated analytically, independently
/// across regimes.
template <class S>
JointPmf<S> counterfactual_joint(const Model& model, std::span<const QueryItem> query);

template <class S>
JointPmf<S> counterfactual_joint(const Model& model, const std::vector<QueryItem>& query) {
  return counterfactual_joint<S>(model, std::span<const QueryItem>(query));
}

/// Joint of the observed variables under the empty regime, latents summed out.
template <class S>
JointPmf<S> observed_law(const Model& model);

/// E[V^regime] for a numeric-labelled variable.
template <class S>
S counterfactual_mean(const Model& model, std::string_view variable, const Regime& regime);

}  // namespace causal_ident
