#include "causal_ident/counterfactual.hpp"

#include "causal_ident/world.hpp"

namespace causal_ident {

std::string query_key(const Model& model, const QueryItem& item) {
  if (item.regime.empty() && !item.natural) return item.variable;
  std::string key = item.variable;
  if (item.natural) key += "~nat";
  return key + "@" + item.regime.describe(model);
}

namespace {

template <class S>
struct JointAccumulator {
  const Model& model;
  std::span<const int> noise;
  std::vector<const Regime*> regimes;
  std::vector<std::size_t> which;    // query item -> regime slot
  std::vector<std::size_t> target;   // query item -> model variable
  std::vector<bool> natural;
  JointPmf<S>& pmf;
  std::vector<int> labels;

  void recurse(std::size_t r, const S& weight) {
    if (r == regimes.size()) {
      pmf.add(labels, weight);
      return;
    }
    for_each_branch<S>(model, noise, *regimes[r], [&](const World& w, const S& bw) {
      for (std::size_t i = 0; i < which.size(); ++i) {
        if (which[i] == r) labels[i] = natural[i] ? w.natural[target[i]] : w.values[target[i]];
      }
      recurse(r + 1, S(weight * bw));
    });
  }
};

}  // namespace

template <class S>
JointPmf<S> counterfactual_joint(const Model& model, std::span<const QueryItem> query) {
  model.require_mode<S>();
  std::vector<const Regime*> regimes;
  std::vector<std::size_t> which(query.size()), target(query.size());
  std::vector<bool> natural(query.size());
  std::vector<typename JointPmf<S>::Var> vars;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const auto& item = query[i];
    target[i] = model.index(item.variable);
    natural[i] = item.natural;
    std::size_t slot = regimes.size();
    for (std::size_t r = 0; r < regimes.size(); ++r) {
      if (regimes[r]->same_rules(item.regime)) {
        slot = r;
        break;
      }
    }
    if (slot == regimes.size()) {
      validate_regime(model, item.regime);
      regimes.push_back(&item.regime);
    }
    which[i] = slot;
    std::string key = query_key(model, item);
    for (const auto& v : vars) {
      if (v.key == key) throw Error(ErrorKind::InvalidArgument, key, "query item listed twice");
    }
    vars.push_back({std::move(key), model[target[i]].domain});
  }
  JointPmf<S> pmf(std::move(vars));
  for_each_noise<S>(model, [&](std::span<const int> noise, const S& p) {
    JointAccumulator<S> acc{model, noise, regimes, which, target, natural, pmf,
                            std::vector<int>(query.size(), 0)};
    acc.recurse(0, p);
  });
  return pmf;
}

template <class S>
JointPmf<S> observed_law(const Model& model) {
  std::vector<QueryItem> items;
  for (const auto& v : model.variables()) {
    if (v.observed) items.push_back({v.name, Regime{}, false});
  }
  return counterfactual_joint<S>(model, items);
}

template <class S>
S counterfactual_mean(const Model& model, std::string_view variable, const Regime& regime) {
  model.require_mode<S>();
  validate_regime(model, regime);
  const std::size_t y = model.index(variable);
  S mean(0);
  for_each_noise<S>(model, [&](std::span<const int> noise, const S& p) {
    for_each_branch<S>(model, noise, regime, [&](const World& w, const S& bw) {
      mean += p * bw * model.numeric_value<S>(y, w.values[y]);
    });
  });
  return mean;
}

template JointPmf<double> counterfactual_joint<double>(const Model&, std::span<const QueryItem>);
template JointPmf<Rational> counterfactual_joint<Rational>(const Model&, std::span<const QueryItem>);
template JointPmf<double> observed_law<double>(const Model&);
template JointPmf<Rational> observed_law<Rational>(const Model&);
template double counterfactual_mean<double>(const Model&, std::string_view, const Regime&);
template Rational counterfactual_mean<Rational>(const Model&, std::string_view, const Regime&);

}  // namespace causal_ident
