#include "causal_ident/regime.hpp"

#include <algorithm>

#include "causal_ident/error.hpp"

namespace causal_ident {

const char* to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::Static: return "static";
    case RuleKind::Dynamic: return "dynamic";
    case RuleKind::NaturalValue: return "natural";
    case RuleKind::Stochastic: return "stochastic";
  }
  return "unknown";
}

std::size_t mixed_radix(const Model& model, std::span<const std::size_t> vars,
                        std::vector<std::size_t>& strides) {
  strides.assign(vars.size(), 1);
  std::size_t n = 1;
  for (std::size_t j = vars.size(); j-- > 0;) {
    strides[j] = n;
    n *= model[vars[j]].domain.size();
  }
  return n;
}

std::size_t Rule::key(std::span<const int> values) const {
  std::size_t k = 0;
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    k += static_cast<std::size_t>(values[inputs[j]]) * input_strides[j];
  }
  return k;
}

bool Rule::operator==(const Rule& o) const {
  return kind == o.kind && target == o.target && inputs == o.inputs && value == o.value &&
         assign == o.assign && draws == o.draws;
}

const Rule* Regime::rule_for(std::size_t var) const {
  for (const auto& r : rules_) {
    if (r.target == var) return &r;
  }
  return nullptr;
}

bool Regime::has_stochastic() const {
  return std::any_of(rules_.begin(), rules_.end(),
                     [](const Rule& r) { return r.kind == RuleKind::Stochastic; });
}

bool Regime::has_natural_value() const {
  return std::any_of(rules_.begin(), rules_.end(),
                     [](const Rule& r) { return r.kind == RuleKind::NaturalValue; });
}

std::size_t Regime::stochastic_count() const {
  return static_cast<std::size_t>(std::count_if(
      rules_.begin(), rules_.end(), [](const Rule& r) { return r.kind == RuleKind::Stochastic; }));
}

Rule& Regime::slot(std::size_t var) {
  for (auto& r : rules_) {
    if (r.target == var) {
      r = Rule{};
      r.target = var;
      return r;
    }
  }
  Rule r;
  r.target = var;
  // Keep rules sorted by target so equal regimes compare equal.
  auto pos = std::find_if(rules_.begin(), rules_.end(), [&](const Rule& x) { return x.target > var; });
  return *rules_.insert(pos, r);
}

Regime& Regime::set_static(std::size_t var, int label) {
  Rule& r = slot(var);
  r.kind = RuleKind::Static;
  r.value = label;
  return *this;
}

Regime& Regime::set_static(const Model& model, std::string_view var, std::string_view label) {
  const std::size_t v = model.index(var);
  auto l = model[v].domain.find(label);
  if (!l) {
    throw Error(ErrorKind::InvalidArgument, std::string(var),
                "label '" + std::string(label) + "' not in domain");
  }
  return set_static(v, *l);
}

Regime& Regime::set_dynamic(std::size_t var, std::vector<std::size_t> inputs,
                            std::vector<int> table, const Model& model) {
  Rule& r = slot(var);
  r.kind = RuleKind::Dynamic;
  r.inputs = std::move(inputs);
  r.key_count = mixed_radix(model, r.inputs, r.input_strides);
  if (table.size() != r.key_count) {
    throw Error(ErrorKind::InvalidArgument, model[var].name, "dynamic rule table has the wrong size");
  }
  r.assign = std::move(table);
  return *this;
}

Regime& Regime::set_natural_value(std::size_t var, std::vector<std::size_t> inputs,
                                  std::vector<int> table, const Model& model) {
  Rule& r = slot(var);
  r.kind = RuleKind::NaturalValue;
  r.inputs = std::move(inputs);
  r.key_count = mixed_radix(model, r.inputs, r.input_strides);
  if (table.size() != r.key_count * model[var].domain.size()) {
    throw Error(ErrorKind::InvalidArgument, model[var].name, "natural-value rule table has the wrong size");
  }
  r.assign = std::move(table);
  return *this;
}

Regime& Regime::set_stochastic(std::size_t var, std::vector<std::size_t> inputs,
                               std::vector<std::optional<std::vector<Rational>>> tables,
                               const Model& model) {
  Rule& r = slot(var);
  r.kind = RuleKind::Stochastic;
  r.inputs = std::move(inputs);
  r.key_count = mixed_radix(model, r.inputs, r.input_strides);
  if (tables.size() != r.key_count) {
    throw Error(ErrorKind::InvalidArgument, model[var].name, "stochastic rule needs one table per history");
  }
  r.draws = std::move(tables);
  r.draws_f.assign(r.key_count, {});
  for (std::size_t k = 0; k < r.key_count; ++k) {
    if (!r.draws[k]) continue;
    for (const auto& p : *r.draws[k]) r.draws_f[k].push_back(p.get_d());
  }
  return *this;
}

std::string Regime::describe(const Model& model) const {
  if (!name_.empty()) return name_;
  std::string out = "do(";
  bool first = true;
  for (const auto& r : rules_) {
    if (!first) out += ",";
    first = false;
    out += model[r.target].name;
    if (r.kind == RuleKind::Static) {
      out += "=" + model[r.target].domain.label(r.value);
    } else {
      out += ":";
      out += to_string(r.kind);
    }
  }
  return out + ")";
}

void validate_regime(const Model& model, const Regime& regime) {
  const auto& order = model.topological_order();
  auto position = [&](std::size_t v) {
    return static_cast<std::size_t>(std::find(order.begin(), order.end(), v) - order.begin());
  };
  for (const auto& r : regime.rules()) {
    if (r.target >= model.size()) throw Error(ErrorKind::InvalidArgument, "?", "rule target out of range");
    const auto& name = model[r.target].name;
    for (auto in : r.inputs) {
      if (in == r.target || position(in) >= position(r.target)) {
        throw Error(ErrorKind::InvalidArgument, name,
                    "rule reads '" + model[in].name + "', which does not precede it");
      }
    }
    const int labels = static_cast<int>(model[r.target].domain.size());
    switch (r.kind) {
      case RuleKind::Static:
        if (r.value < 0 || r.value >= labels) throw Error(ErrorKind::InvalidArgument, name, "static value out of range");
        break;
      case RuleKind::Dynamic:
      case RuleKind::NaturalValue:
        for (int a : r.assign) {
          if (a < 0 || a >= labels) throw Error(ErrorKind::InvalidArgument, name, "rule assigns a label outside the domain");
        }
        break;
      case RuleKind::Stochastic:
        for (const auto& slice : r.draws) {
          if (!slice) continue;
          if (slice->size() != static_cast<std::size_t>(labels)) {
            throw Error(ErrorKind::InvalidPMF, name, "draw table has the wrong arity");
          }
          Rational sum(0);
          for (const auto& p : *slice) {
            if (p < 0 || p > 1) throw Error(ErrorKind::InvalidPMF, name, "draw probability outside [0,1]");
            sum += p;
          }
          if (sum != 1 && std::abs(sum.get_d() - 1.0) > 1e-12) {
            throw Error(ErrorKind::InvalidPMF, name, "draw table does not sum to one");
          }
        }
        break;
    }
  }
}

}  // namespace causal_ident
