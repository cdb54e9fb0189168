#pragma once

// Counterfactual worlds by recursive substitution, plus the exact enumeration
// primitives every functional in the engine is built from.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "causal_ident/error.hpp"
#include "causal_ident/model.hpp"
#include "causal_ident/regime.hpp"

namespace causal_ident {

/// Full assignment produced by one regime under one noise configuration.
/// `natural[v]` is f_V evaluated in that world; it differs from `values[v]`
/// only for intervened variables.
struct World {
  std::vector<int> values;
  std::vector<int> natural;
};

/// Pointwise evaluation. `randomizer` holds one uniform draw in [0,1) per
/// stochastic rule, in rule order; it must be supplied iff the regime has
/// stochastic rules. A binary stochastic rule assigns label 1 iff the draw is
/// below its probability (higher labels are matched first in general).
/// Throws Error(MissingNoise | MissingRandomizer | ZeroMassEvent).
World evaluate_world(const Model& model, std::span<const int> noise, const Regime& regime,
                     std::span<const double> randomizer = {});

/// Same, following an explicit topological order instead of the canonical one.
World evaluate_world_in_order(const Model& model, std::span<const int> noise,
                              const Regime& regime, std::span<const double> randomizer,
                              std::span<const std::size_t> order);

namespace detail {

template <class S, class Fn>
void noise_recurse(const Model& model, std::size_t pos, std::vector<int>& noise, const S& mass,
                   Fn& fn) {
  if (pos == model.size()) {
    fn(std::span<const int>(noise), mass);
    return;
  }
  const auto& var = model[pos];
  for (int e = 0; e < static_cast<int>(var.noise_domain.size()); ++e) {
    S p = model.template noise_prob<S>(pos, e);
    if (is_zero(p)) continue;
    noise[pos] = e;
    noise_recurse<S>(model, pos + 1, noise, S(mass * p), fn);
  }
}

template <class S, class Fn>
void branch_recurse(const Model& model, const Regime& regime, std::span<const int> noise,
                    std::size_t pos, World& world, const S& weight, Fn& fn) {
  const auto& order = model.topological_order();
  for (; pos < order.size(); ++pos) {
    const std::size_t v = order[pos];
    const int nat = model.structural(v, world.values, noise[v]);
    world.natural[v] = nat;
    const Rule* rule = regime.rule_for(v);
    if (rule == nullptr) {
      world.values[v] = nat;
      continue;
    }
    switch (rule->kind) {
      case RuleKind::Static:
        world.values[v] = rule->value;
        break;
      case RuleKind::Dynamic:
        world.values[v] = rule->assign[rule->key(world.values)];
        break;
      case RuleKind::NaturalValue:
        world.values[v] =
            rule->assign[static_cast<std::size_t>(nat) * rule->key_count + rule->key(world.values)];
        break;
      case RuleKind::Stochastic: {
        const std::size_t key = rule->key(world.values);
        if (!rule->defined(key)) {
          throw Error(ErrorKind::ZeroMassEvent, model[v].name,
                      "stochastic rule reached a history it does not define");
        }
        const int labels = static_cast<int>(model[v].domain.size());
        for (int a = 0; a < labels; ++a) {
          S p = rule->template draw_prob<S>(key, a);
          if (is_zero(p)) continue;
          World branch = world;
          branch.values[v] = a;
          branch_recurse<S>(model, regime, noise, pos + 1, branch, S(weight * p), fn);
        }
        return;
      }
    }
  }
  fn(static_cast<const World&>(world), weight);
}

}  // namespace detail

/// Calls fn(noise, probability) for every noise configuration with positive
/// probability, in canonical order (last variable fastest).
template <class S, class Fn>
void for_each_noise(const Model& model, Fn&& fn) {
  std::vector<int> noise(model.size(), 0);
  detail::noise_recurse<S>(model, 0, noise, S(1), fn);
}

/// Calls fn(world, weight) for every world the regime can produce under a
/// fixed noise configuration. Deterministic regimes yield one world with
/// weight 1; stochastic rules branch analytically over their draw tables.
template <class S, class Fn>
void for_each_branch(const Model& model, std::span<const int> noise, const Regime& regime,
                     Fn&& fn) {
  World world{std::vector<int>(model.size(), 0), std::vector<int>(model.size(), 0)};
  detail::branch_recurse<S>(model, regime, noise, 0, world, S(1), fn);
}

}  // namespace causal_ident
