#include "causal_ident/world.hpp"

#include <algorithm>

namespace causal_ident {

namespace {

int draw_label(const Rule& rule, std::size_t key, int labels, double u) {
  // Higher labels are matched first so that a binary rule assigns 1 iff u < p(1).
  double upper = 0.0;
  for (int a = labels - 1; a >= 0; --a) {
    upper += rule.draws_f[key][static_cast<std::size_t>(a)];
    if (u < upper) return a;
  }
  // u sits in the rounding gap just below one; take the last positive label.
  for (int a = 0; a < labels; ++a) {
    if (rule.draws_f[key][static_cast<std::size_t>(a)] > 0.0) return a;
  }
  return 0;
}

}  // namespace

World evaluate_world_in_order(const Model& model, std::span<const int> noise,
                              const Regime& regime, std::span<const double> randomizer,
                              std::span<const std::size_t> order) {
  if (noise.size() != model.size()) {
    throw Error(ErrorKind::MissingNoise, std::to_string(noise.size()) + " of " + std::to_string(model.size()),
                "noise assignment must cover every variable");
  }
  for (std::size_t v = 0; v < model.size(); ++v) {
    if (noise[v] < 0 || noise[v] >= static_cast<int>(model[v].noise_domain.size())) {
      throw Error(ErrorKind::MissingNoise, model[v].name, "noise label out of range");
    }
  }
  const std::size_t stochastic = regime.stochastic_count();
  if (randomizer.size() != stochastic) {
    throw Error(ErrorKind::MissingRandomizer, regime.describe(model),
                "expected " + std::to_string(stochastic) + " randomizer draws, got " +
                    std::to_string(randomizer.size()));
  }

  World world{std::vector<int>(model.size(), 0), std::vector<int>(model.size(), 0)};
  for (const std::size_t v : order) {
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
        const auto& rules = regime.rules();
        std::size_t slot = 0;
        for (const auto& r : rules) {
          if (&r == rule) break;
          if (r.kind == RuleKind::Stochastic) ++slot;
        }
        world.values[v] = draw_label(*rule, key, static_cast<int>(model[v].domain.size()), randomizer[slot]);
        break;
      }
    }
  }
  return world;
}

World evaluate_world(const Model& model, std::span<const int> noise, const Regime& regime,
                     std::span<const double> randomizer) {
  return evaluate_world_in_order(model, noise, regime, randomizer, model.topological_order());
}

}  // namespace causal_ident
