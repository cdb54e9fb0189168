#include "causal_ident/longitudinal.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#include "causal_ident/counterfactual.hpp"
#include "causal_ident/error.hpp"
#include "causal_ident/world.hpp"

namespace causal_ident {

std::vector<std::string> LongitudinalFrame::history(std::size_t t) const {
  std::vector<std::string> h;
  for (std::size_t m = 0; m <= t && m < points.size(); ++m) {
    h.insert(h.end(), points[m].covariates.begin(), points[m].covariates.end());
    if (m < t) h.push_back(points[m].treatment);
  }
  return h;
}

std::vector<std::string> LongitudinalFrame::ordered() const {
  std::vector<std::string> all;
  for (const auto& p : points) {
    all.insert(all.end(), p.covariates.begin(), p.covariates.end());
    all.push_back(p.treatment);
  }
  all.push_back(outcome);
  return all;
}

void validate_frame(const Model& model, const LongitudinalFrame& frame) {
  if (frame.points.empty()) throw Error(ErrorKind::InvalidArgument, "frame", "needs at least one time point");
  const auto names = frame.ordered();
  std::set<std::string> seen;
  std::size_t last = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::size_t v = model.index(names[i]);
    if (!seen.insert(names[i]).second) {
      throw Error(ErrorKind::InvalidArgument, names[i], "listed twice in the frame");
    }
    if (i > 0 && v <= last) {
      throw Error(ErrorKind::InvalidArgument, names[i], "frame order disagrees with declaration order");
    }
    if (!model[v].observed) throw Error(ErrorKind::InvalidArgument, names[i], "frame variables must be observed");
    last = v;
  }
  const Domain& d0 = model[model.index(frame.points[0].treatment)].domain;
  for (const auto& p : frame.points) {
    if (!(model[model.index(p.treatment)].domain == d0)) {
      throw Error(ErrorKind::InvalidArgument, p.treatment, "treatments must share a domain");
    }
  }
}

template <class S>
std::size_t RegimeDensitySet<S>::Slice::cell(const std::vector<int>& labels) const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < domains.size(); ++i) c = c * domains[i].size() + static_cast<std::size_t>(labels[i]);
  return c;
}

template <class S>
std::vector<int> RegimeDensitySet<S>::Slice::labels(std::size_t cell) const {
  std::vector<int> out(domains.size());
  for (std::size_t i = domains.size(); i-- > 0;) {
    out[i] = static_cast<int>(cell % domains[i].size());
    cell /= domains[i].size();
  }
  return out;
}

TreatmentMap TreatmentMap::identity() { return {}; }

TreatmentMap TreatmentMap::map(std::vector<int> targets, std::size_t domain_size) {
  if (targets.size() != domain_size) {
    throw Error(ErrorKind::InvalidArgument, "phi", "label map must cover the treatment domain");
  }
  TreatmentMap m;
  m.kind = Kind::Map;
  m.kernel.assign(domain_size, std::vector<Rational>(domain_size, Rational(0)));
  for (std::size_t a = 0; a < domain_size; ++a) {
    if (targets[a] < 0 || static_cast<std::size_t>(targets[a]) >= domain_size) {
      throw Error(ErrorKind::InvalidArgument, "phi", "label map target outside the domain");
    }
    m.kernel[a][static_cast<std::size_t>(targets[a])] = 1;
  }
  return m;
}

TreatmentMap TreatmentMap::from_kernel(std::vector<std::vector<Rational>> kernel) {
  for (const auto& row : kernel) {
    if (row.size() != kernel.size()) throw Error(ErrorKind::InvalidArgument, "phi", "kernel must be square");
    Rational sum(0);
    for (const auto& k : row) {
      if (k < 0 || k > 1) throw Error(ErrorKind::InvalidPMF, "phi", "kernel entry outside [0,1]");
      sum += k;
    }
    if (sum != 1) throw Error(ErrorKind::InvalidPMF, "phi", "kernel row does not sum to one");
  }
  TreatmentMap m;
  m.kind = Kind::Kernel;
  m.kernel = std::move(kernel);
  return m;
}

template <class S>
std::vector<S> TreatmentMap::apply(const std::vector<S>& pmf) const {
  if (kind == Kind::Identity) return pmf;
  if (pmf.size() != kernel.size()) {
    throw Error(ErrorKind::InvalidArgument, "phi", "kernel size differs from the treatment domain");
  }
  std::vector<S> out(pmf.size(), S(0));
  for (std::size_t a = 0; a < pmf.size(); ++a) {
    if (is_zero(pmf[a])) continue;
    for (std::size_t b = 0; b < pmf.size(); ++b) out[b] += pmf[a] * from_rational<S>(kernel[a][b]);
  }
  return out;
}

template <class S>
RegimeDensitySet<S> apply_map(const RegimeDensitySet<S>& tables, const TreatmentMap& phi) {
  RegimeDensitySet<S> out = tables;
  for (auto& slice : out.slices) {
    for (auto& t : slice.tables) {
      if (t) t = phi.apply(*t);
    }
  }
  return out;
}

namespace {

/// Marginals of a joint onto every prefix of a fixed variable order.
template <class S>
class PrefixLaw {
 public:
  PrefixLaw(const JointPmf<S>& joint, const std::vector<std::string>& keys) {
    for (std::size_t k = 0; k <= keys.size(); ++k) {
      prefixes_.push_back(joint.marginal(std::span<const std::string>(keys.data(), k)));
    }
  }

  S mass(std::span<const int> labels) const { return prefixes_[labels.size()].mass(labels); }

  /// P(last label | earlier labels); nullopt when the conditioning prefix is null.
  std::optional<S> conditional(std::span<const int> labels) const {
    const S den = mass(labels.first(labels.size() - 1));
    if (is_zero(den)) return std::nullopt;
    return S(mass(labels) / den);
  }

  const JointPmf<S>& full() const { return prefixes_.back(); }
  const Domain& domain(std::size_t pos) const { return prefixes_.back().vars()[pos].domain; }

 private:
  std::vector<JointPmf<S>> prefixes_;
};

std::string describe_history(const std::vector<std::string>& names, const std::vector<Domain>& domains,
                             std::span<const int> labels) {
  std::string out = "{";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ",";
    out += names[i] + "=" + domains[i].label(labels[i]);
  }
  return out + "}";
}

template <class S>
RegimeDensitySet<S> empty_slices(const std::vector<std::vector<std::string>>& histories,
                                 const std::function<Domain(const std::string&)>& domain_of) {
  RegimeDensitySet<S> out;
  for (const auto& h : histories) {
    typename RegimeDensitySet<S>::Slice slice;
    slice.history = h;
    std::size_t cells = 1;
    for (const auto& name : h) {
      slice.domains.push_back(domain_of(name));
      cells *= slice.domains.back().size();
    }
    slice.tables.assign(cells, std::nullopt);
    out.slices.push_back(std::move(slice));
  }
  return out;
}

std::vector<std::vector<std::string>> all_histories(const LongitudinalFrame& frame) {
  std::vector<std::vector<std::string>> h;
  for (std::size_t t = 0; t < frame.horizon(); ++t) h.push_back(frame.history(t));
  return h;
}

template <class S>
RegimeDensitySet<S> model_slices(const Model& model, const LongitudinalFrame& frame) {
  return empty_slices<S>(all_histories(frame),
                         [&](const std::string& n) { return model[model.index(n)].domain; });
}

template <class S>
RegimeDensitySet<S> law_slices(const JointPmf<S>& law, const LongitudinalFrame& frame) {
  return empty_slices<S>(all_histories(frame),
                         [&](const std::string& n) { return law.vars()[law.var_index(n)].domain; });
}

void note_undefined(std::vector<std::string>& undefined, std::size_t t, const std::vector<std::string>& names,
                    const std::vector<Domain>& domains, std::span<const int> labels) {
  undefined.push_back("t=" + std::to_string(t) + " " + describe_history(names, domains, labels));
}

/// Every combination of treatment labels for the first `n` time points.
std::vector<std::vector<int>> treatment_vectors(std::size_t n, std::size_t labels) {
  std::vector<std::vector<int>> out{{}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::vector<int>> next;
    for (const auto& v : out) {
      for (std::size_t a = 0; a < labels; ++a) {
        next.push_back(v);
        next.back().push_back(static_cast<int>(a));
      }
    }
    out = std::move(next);
  }
  return out;
}

Regime static_regime(const Model& model, const LongitudinalFrame& frame, const std::vector<int>& a_plus) {
  Regime r;
  for (std::size_t m = 0; m < a_plus.size(); ++m) r.set_static(model.index(frame.points[m].treatment), a_plus[m]);
  return r;
}

/// Positions of treatments within history(t) and the time point owning each position.
struct HistoryLayout {
  std::vector<std::size_t> treatment_pos;  // m < t
  std::vector<std::size_t> point_end;      // m <= t: index one past L_m's covariates
};

HistoryLayout layout(const LongitudinalFrame& frame, std::size_t t) {
  HistoryLayout lay;
  std::size_t pos = 0;
  for (std::size_t m = 0; m <= t; ++m) {
    pos += frame.points[m].covariates.size();
    lay.point_end.push_back(pos);
    if (m < t) lay.treatment_pos.push_back(pos++);
  }
  return lay;
}

void check_rule_inputs(const Model& model, const LongitudinalFrame& frame, const Regime& regime) {
  std::set<std::size_t> treatments;
  for (std::size_t t = 0; t < frame.horizon(); ++t) {
    const std::size_t a = model.index(frame.points[t].treatment);
    treatments.insert(a);
    const Rule* rule = regime.rule_for(a);
    if (!rule) continue;
    const auto h = frame.history(t);
    for (auto in : rule->inputs) {
      if (std::find(h.begin(), h.end(), model[in].name) == h.end()) {
        throw Error(ErrorKind::InvalidArgument, model[a].name,
                    "rule reads '" + model[in].name + "', which is not in its frame history");
      }
    }
  }
  for (const auto& r : regime.rules()) {
    if (!treatments.count(r.target)) {
      throw Error(ErrorKind::InvalidArgument, model[r.target].name, "regime intervenes on a non-treatment variable");
    }
  }
}

/// q_m^g(a^+ | a natural, history) for one rule; nullopt where a stochastic
/// rule leaves the history undefined. A missing rule keeps the natural value.
template <class S>
std::optional<S> rule_density(const Rule* rule, std::span<const int> values, int natural, int a_plus) {
  auto indicator = [&](int target) { return S(target == a_plus ? 1 : 0); };
  if (!rule) return indicator(natural);
  switch (rule->kind) {
    case RuleKind::Static:
      return indicator(rule->value);
    case RuleKind::Dynamic:
      return indicator(rule->assign[rule->key(values)]);
    case RuleKind::NaturalValue:
      return indicator(rule->assign[static_cast<std::size_t>(natural) * rule->key_count + rule->key(values)]);
    case RuleKind::Stochastic: {
      const std::size_t key = rule->key(values);
      if (!rule->defined(key)) return std::nullopt;
      return rule->template draw_prob<S>(key, a_plus);
    }
  }
  return std::nullopt;
}

std::vector<int> model_values(const Model& model, const std::vector<std::string>& names, std::span<const int> labels) {
  std::vector<int> values(model.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) values[model.index(names[i])] = labels[i];
  return values;
}

}  // namespace

template <class S>
S regime_mean(const Model& model, const LongitudinalFrame& frame, const Regime& regime) {
  validate_frame(model, frame);
  return counterfactual_mean<S>(model, frame.outcome, regime);
}

template <class S>
RegimeDensitySet<S> compute_q_tilde(const Model& model, const LongitudinalFrame& frame, const Regime& regime) {
  model.require_mode<S>();
  validate_frame(model, frame);
  validate_regime(model, regime);
  check_rule_inputs(model, frame, regime);
  const std::size_t K = frame.horizon();
  const std::size_t n_a = model[model.index(frame.points[0].treatment)].domain.size();
  auto out = model_slices<S>(model, frame);

  std::vector<const Rule*> rules;
  bool natural = false;
  for (std::size_t t = 0; t < K; ++t) {
    rules.push_back(regime.rule_for(model.index(frame.points[t].treatment)));
    natural = natural || !rules.back() || rules.back()->kind == RuleKind::NaturalValue;
  }

  if (!natural) {
    for (std::size_t t = 0; t < K; ++t) {
      auto& slice = out.slices[t];
      for (std::size_t c = 0; c < slice.tables.size(); ++c) {
        const auto labels = slice.labels(c);
        const auto values = model_values(model, slice.history, labels);
        std::vector<S> table(n_a);
        bool defined = true;
        for (std::size_t a = 0; a < n_a && defined; ++a) {
          auto q = rule_density<S>(rules[t], values, 0, static_cast<int>(a));
          if (!q) defined = false;
          else table[a] = *q;
        }
        if (defined) slice.tables[c] = std::move(table);
        else note_undefined(out.undefined, t, slice.history, slice.domains, labels);
      }
    }
    return out;
  }

  for (std::size_t t = 0; t < K; ++t) {
    const HistoryLayout lay = layout(frame, t);
    auto& slice = out.slices[t];
    // Positional joint in the static partial world: [L_0, A_0, ..., L_t, A_t], natural treatments.
    std::map<std::vector<int>, PrefixLaw<S>> worlds;
    auto world_for = [&](const std::vector<int>& a_plus) -> const PrefixLaw<S>& {
      auto it = worlds.find(a_plus);
      if (it != worlds.end()) return it->second;
      const Regime partial = static_regime(model, frame, a_plus);
      std::vector<QueryItem> q;
      for (std::size_t m = 0; m <= t; ++m) {
        for (const auto& l : frame.points[m].covariates) q.push_back({l, partial, false});
        q.push_back({frame.points[m].treatment, partial, m < t});
      }
      const auto joint = counterfactual_joint<S>(model, q);
      std::vector<std::string> keys;
      for (const auto& v : joint.vars()) keys.push_back(v.key);
      return worlds.emplace(a_plus, PrefixLaw<S>(joint, keys)).first->second;
    };

    const auto naturals = treatment_vectors(t + 1, n_a);
    for (std::size_t c = 0; c < slice.tables.size(); ++c) {
      const auto h = slice.labels(c);
      std::vector<int> a_plus;
      for (auto p : lay.treatment_pos) a_plus.push_back(h[p]);

      // Denominator: product of earlier q-tilde along this history.
      bool defined = true;
      S den(1);
      for (std::size_t m = 0; m < t && defined; ++m) {
        const auto& prev = out.slices[m];
        const std::vector<int> prefix(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(lay.treatment_pos[m]));
        const auto& table = prev.tables[prev.cell(prefix)];
        if (!table || is_zero((*table)[static_cast<std::size_t>(a_plus[m])])) defined = false;
        else den *= (*table)[static_cast<std::size_t>(a_plus[m])];
      }

      std::vector<S> table(n_a, S(0));
      if (defined) {
        const PrefixLaw<S>& world = world_for(a_plus);
        std::vector<int> assigned = h;  // history labels with a candidate a_t^+ appended below
        std::vector<int> joint_labels(h.size() + 1);
        for (std::size_t a_t = 0; a_t < n_a && defined; ++a_t) {
          std::vector<int> full_plus = a_plus;
          full_plus.push_back(static_cast<int>(a_t));
          S num(0);
          for (const auto& nat : naturals) {
            // Joint labels: history covariates with natural treatments in place of assigned ones.
            for (std::size_t i = 0; i < h.size(); ++i) joint_labels[i] = h[i];
            for (std::size_t m = 0; m < t; ++m) joint_labels[lay.treatment_pos[m]] = nat[m];
            joint_labels[h.size()] = nat[t];
            S term(1);
            for (std::size_t m = 0; m <= t; ++m) {
              const std::size_t hist_len = m < t ? lay.treatment_pos[m] : h.size();
              const auto values = model_values(model, slice.history, std::span<const int>(h).first(hist_len));
              auto q = rule_density<S>(rules[m], values, nat[m], full_plus[m]);
              if (!q) {
                defined = false;
                break;
              }
              if (is_zero(*q)) {
                term = S(0);
                break;
              }
              auto p = world.conditional(std::span<const int>(joint_labels).first(hist_len + 1));
              if (!p) {
                defined = false;
                break;
              }
              if (is_zero(*p)) {
                term = S(0);
                break;
              }
              term *= *q * *p;
            }
            if (!defined) break;
            num += term;
          }
          table[a_t] = S(num / den);
        }
      }
      if (defined) slice.tables[c] = std::move(table);
      else note_undefined(out.undefined, t, slice.history, slice.domains, h);
    }
  }
  return out;
}

template <class S>
RegimeDensitySet<S> treatment_law(const JointPmf<S>& law, const LongitudinalFrame& frame) {
  const PrefixLaw<S> prefix(law, frame.ordered());
  auto out = law_slices<S>(law, frame);
  for (std::size_t t = 0; t < frame.horizon(); ++t) {
    auto& slice = out.slices[t];
    const std::size_t n_a = law.vars()[law.var_index(frame.points[t].treatment)].domain.size();
    for (std::size_t c = 0; c < slice.tables.size(); ++c) {
      auto labels = slice.labels(c);
      if (is_zero(prefix.mass(labels))) {
        note_undefined(out.undefined, t, slice.history, slice.domains, labels);
        continue;
      }
      std::vector<S> table(n_a);
      labels.push_back(0);
      for (std::size_t a = 0; a < n_a; ++a) {
        labels.back() = static_cast<int>(a);
        table[a] = *prefix.conditional(labels);
      }
      slice.tables[c] = std::move(table);
    }
  }
  return out;
}

template <class S>
RegimeDensitySet<S> natural_treatment_law(const Model& model, const LongitudinalFrame& frame, const Regime& regime) {
  validate_frame(model, frame);
  validate_regime(model, regime);
  auto out = model_slices<S>(model, frame);
  const std::size_t n_a = model[model.index(frame.points[0].treatment)].domain.size();
  for (std::size_t t = 0; t < frame.horizon(); ++t) {
    auto& slice = out.slices[t];
    std::vector<QueryItem> q;
    for (const auto& name : slice.history) q.push_back({name, regime, false});
    q.push_back({frame.points[t].treatment, regime, true});
    const auto joint = counterfactual_joint<S>(model, q);
    std::vector<std::string> keys;
    for (const auto& v : joint.vars()) keys.push_back(v.key);
    const PrefixLaw<S> prefix(joint, keys);
    for (std::size_t c = 0; c < slice.tables.size(); ++c) {
      auto labels = slice.labels(c);
      if (is_zero(prefix.mass(labels))) {
        note_undefined(out.undefined, t, slice.history, slice.domains, labels);
        continue;
      }
      std::vector<S> table(n_a);
      labels.push_back(0);
      for (std::size_t a = 0; a < n_a; ++a) {
        labels.back() = static_cast<int>(a);
        table[a] = *prefix.conditional(labels);
      }
      slice.tables[c] = std::move(table);
    }
  }
  return out;
}

template <class S>
GFormulaValue<S> extended_g_formula(const JointPmf<S>& law, const LongitudinalFrame& frame,
                                    const RegimeDensitySet<S>& q) {
  const auto names = frame.ordered();
  const PrefixLaw<S> prefix(law, names);
  if (q.slices.size() != frame.horizon()) {
    throw Error(ErrorKind::InvalidArgument, "q", "density set does not match the frame horizon");
  }
  std::vector<Domain> domains;
  for (std::size_t i = 0; i < names.size(); ++i) domains.push_back(prefix.domain(i));
  std::vector<S> yvals;
  for (const auto& l : domains.back().labels()) {
    try {
      yvals.push_back(from_rational<S>(parse_rational(l)));
    } catch (const std::invalid_argument&) {
      throw Error(ErrorKind::InvalidArgument, frame.outcome, "label '" + l + "' has no numeric value");
    }
  }
  // position -> time index of treatment, or npos
  std::vector<std::size_t> time_of(names.size(), static_cast<std::size_t>(-1));
  {
    std::size_t pos = 0;
    for (std::size_t t = 0; t < frame.horizon(); ++t) {
      pos += frame.points[t].covariates.size();
      time_of[pos++] = t;
    }
  }
  const std::size_t y_pos = names.size() - 1;

  auto table_at = [&](std::size_t t, std::span<const int> hist) -> const std::vector<S>& {
    const auto& slice = q.slices[t];
    const auto& table = slice.tables[slice.cell(std::vector<int>(hist.begin(), hist.end()))];
    if (!table) {
      throw Error(ErrorKind::ZeroMassEvent, "t=" + std::to_string(t) + " " + describe_history(names, domains, hist),
                  "regime density undefined at a history it reaches");
    }
    return *table;
  };

  GFormulaValue<S> result{S(0), S(0)};
  std::vector<int> labels(names.size(), 0);
  std::function<void(std::size_t, const S&)> recurse = [&](std::size_t pos, const S& weight) {
    const std::span<const int> hist(labels.data(), pos);
    if (pos == y_pos) {
      const S den = prefix.mass(hist);
      S ey(0);
      for (std::size_t y = 0; y < yvals.size(); ++y) {
        labels[pos] = static_cast<int>(y);
        ey += yvals[y] * prefix.mass(std::span<const int>(labels.data(), pos + 1));
      }
      result.value += weight * ey / den;
      return;
    }
    const std::size_t t = time_of[pos];
    const S den = prefix.mass(hist);
    if (t != static_cast<std::size_t>(-1)) {
      const auto& table = table_at(t, hist);
      for (std::size_t a = 0; a < table.size(); ++a) {
        if (is_zero(table[a])) continue;
        labels[pos] = static_cast<int>(a);
        if (is_zero(prefix.mass(std::span<const int>(labels.data(), pos + 1)))) {
          throw Error(ErrorKind::PositivityViolation,
                      "t=" + std::to_string(t) + " " + describe_history(names, domains, hist),
                      "regime assigns " + names[pos] + "=" + domains[pos].label(static_cast<int>(a)) +
                          " where the observed law gives it zero probability");
        }
        recurse(pos + 1, S(weight * table[a]));
      }
      return;
    }
    for (std::size_t l = 0; l < domains[pos].size(); ++l) {
      labels[pos] = static_cast<int>(l);
      const S m = prefix.mass(std::span<const int>(labels.data(), pos + 1));
      if (is_zero(m)) continue;
      recurse(pos + 1, S(weight * (m / den)));
    }
  };
  recurse(0, S(1));

  // Importance-weighted form over the support of the law.
  const auto& full = prefix.full();
  for (std::size_t cell = 0; cell < full.cells(); ++cell) {
    const S& mass = full.mass_at(cell);
    if (is_zero(mass)) continue;
    const auto cl = full.decode(cell);
    S w(1);
    for (std::size_t pos = 0; pos < y_pos && !is_zero(w); ++pos) {
      const std::size_t t = time_of[pos];
      if (t == static_cast<std::size_t>(-1)) continue;
      const std::span<const int> hist(cl.data(), pos);
      const auto& table = table_at(t, hist);
      const S p = *prefix.conditional(std::span<const int>(cl.data(), pos + 1));
      w *= table[static_cast<std::size_t>(cl[pos])] / p;
    }
    result.weighted += mass * w * yvals[static_cast<std::size_t>(cl[y_pos])];
  }
  result.weighted /= prefix.mass(std::span<const int>());

  bool agree;
  if constexpr (is_exact_v<S>) {
    agree = result.value == result.weighted;
  } else {
    agree = within(S(result.value - result.weighted), 1e-10);
  }
  if (!agree) {
    throw std::logic_error("extended g-formula: sum and weighted forms disagree (" +
                           std::to_string(to_double(result.value)) + " vs " +
                           std::to_string(to_double(result.weighted)) + ")");
  }
  return result;
}

template <class S>
S psi_g(const JointPmf<S>& law, const LongitudinalFrame& frame, const TreatmentMap& phi) {
  return extended_g_formula<S>(law, frame, apply_map(treatment_law<S>(law, frame), phi)).value;
}

template <class S>
RegimeDensitySet<S> incremental_ps_densities(const JointPmf<S>& law, const LongitudinalFrame& frame, const S& beta) {
  if (!(beta > S(0))) throw Error(ErrorKind::InvalidArgument, "beta", "must be positive");
  const Domain& d = law.vars()[law.var_index(frame.points[0].treatment)].domain;
  if (d.size() != 2) throw Error(ErrorKind::InvalidArgument, frame.points[0].treatment, "incremental regimes need a binary treatment");
  const std::size_t treated = static_cast<std::size_t>(d.find("1").value_or(1));
  auto out = treatment_law<S>(law, frame);
  for (auto& slice : out.slices) {
    for (auto& table : slice.tables) {
      if (!table) continue;
      const S p1 = (*table)[treated];
      const S q1 = beta * p1 / (beta * p1 + S(1) - p1);
      (*table)[treated] = q1;
      (*table)[1 - treated] = S(1) - q1;
    }
  }
  return out;
}

template <class S>
Regime stochastic_regime(const Model& model, const LongitudinalFrame& frame, const RegimeDensitySet<S>& tables,
                         std::string name) {
  Regime regime(std::move(name));
  for (std::size_t t = 0; t < frame.horizon(); ++t) {
    const auto& slice = tables.slices.at(t);
    std::vector<std::size_t> inputs;
    for (const auto& h : slice.history) inputs.push_back(model.index(h));
    std::vector<std::optional<std::vector<Rational>>> draws;
    for (std::size_t c = 0; c < slice.tables.size(); ++c) {
      if (!slice.tables[c]) {
        draws.emplace_back(std::nullopt);
        regime.warnings().push_back("t=" + std::to_string(t) + " " +
                                    describe_history(slice.history, slice.domains, slice.labels(c)) +
                                    " left undefined");
        continue;
      }
      std::vector<Rational> row;
      for (const auto& p : *slice.tables[c]) row.push_back(Rational(p));
      draws.emplace_back(std::move(row));
    }
    regime.set_stochastic(model.index(frame.points[t].treatment), std::move(inputs), std::move(draws), model);
  }
  validate_regime(model, regime);
  return regime;
}

template <class S>
Regime incremental_ps_regime(const Model& model, const JointPmf<S>& law, const LongitudinalFrame& frame, const S& beta) {
  return stochastic_regime<S>(model, frame, incremental_ps_densities<S>(law, frame, beta),
                              "ips(beta=" + std::to_string(to_double(beta)) + ")");
}

template <class S>
MtpParameters<S> mtp_parameters(const Model& model, const LongitudinalFrame& frame, const Regime& g1,
                                const TreatmentMap& phi) {
  MtpParameters<S> out;
  out.gamma_mtp = regime_mean<S>(model, frame, g1);
  const Regime g2 = stochastic_regime<S>(model, frame, apply_map(natural_treatment_law<S>(model, frame, g1), phi), "g2");
  const Regime g3 = stochastic_regime<S>(model, frame, apply_map(treatment_law<S>(observed_law<S>(model), frame), phi), "g3");
  for (const auto& w : g2.warnings()) out.warnings.push_back("g2: " + w);
  for (const auto& w : g3.warnings()) out.warnings.push_back("g3: " + w);
  out.gamma_mtp_si_g1 = regime_mean<S>(model, frame, g2);
  out.gamma_mtp_si = regime_mean<S>(model, frame, g3);
  return out;
}

ZSets z_sets(const Model& model, const LongitudinalFrame& frame, const Regime& regime) {
  validate_frame(model, frame);
  const std::size_t n = model.size();
  // Nodes 0..n-1 are natural nodes; n + v is the assigned node of an intervened v.
  std::vector<std::vector<std::size_t>> parents(2 * n);
  auto source = [&](std::size_t v) { return regime.rule_for(v) ? n + v : v; };
  for (std::size_t v = 0; v < n; ++v) {
    for (auto p : model[v].parents) parents[v].push_back(source(p));
    if (const Rule* r = regime.rule_for(v)) {
      for (auto in : r->inputs) parents[n + v].push_back(source(in));
      if (r->kind == RuleKind::NaturalValue) parents[n + v].push_back(v);
    }
  }
  std::vector<bool> anc(2 * n, false);
  std::vector<std::size_t> stack{model.index(frame.outcome)};
  anc[stack.back()] = true;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (auto p : parents[v]) {
      if (!anc[p]) {
        anc[p] = true;
        stack.push_back(p);
      }
    }
  }
  ZSets sets;
  for (std::size_t v : model.topological_order()) {
    if (anc[v] && model[v].observed) sets.z.push_back(model[v].name);
  }
  const auto frame_vars = frame.ordered();
  for (const auto& name : frame_vars) {
    if (std::find(sets.z.begin(), sets.z.end(), name) == sets.z.end()) sets.s.push_back(name);
  }
  std::set<std::string> past;
  for (std::size_t k = 0; k < frame.horizon(); ++k) {
    for (const auto& l : frame.points[k].covariates) past.insert(l);
    past.insert(frame.points[k].treatment);
    std::vector<std::string> zk, sk;
    for (const auto& z : sets.z) if (!past.count(z)) zk.push_back(z);
    for (const auto& s : sets.s) if (!past.count(s)) sk.push_back(s);
    sets.z_k.push_back(std::move(zk));
    sets.s_k.push_back(std::move(sk));
  }
  return sets;
}

namespace {

ConditionVerdict verdict(std::string name) {
  ConditionVerdict v;
  v.name = std::move(name);
  return v;
}

template <class S>
void merge(ConditionVerdict& v, const CiResult<S>& ci) {
  v.holds = v.holds && ci.holds;
  v.max_deviation = std::max(v.max_deviation, to_double(ci.max_deviation));
  v.zero_mass_strata += ci.zero_mass_strata;
}

}  // namespace

template <class S>
BReport check_b(const Model& model, const LongitudinalFrame& frame, const Regime& regime, double tol) {
  model.require_mode<S>();
  validate_frame(model, frame);
  validate_regime(model, regime);
  BReport report;
  report.b11 = verdict("B1.1");
  report.b12 = verdict("B1.2");
  report.b13 = verdict("B1.3");
  report.b14 = verdict("B1.4");
  report.sets = z_sets(model, frame, regime);

  const std::size_t K = frame.horizon();
  const std::size_t n_a = model[model.index(frame.points[0].treatment)].domain.size();
  std::set<std::string> treatments;
  for (const auto& p : frame.points) treatments.insert(p.treatment);

  for (const auto& a_plus : treatment_vectors(K, n_a)) {
    const Regime fixed = static_regime(model, frame, a_plus);
    auto key = [&](const std::string& name) {
      return query_key(model, {name, fixed, treatments.count(name) > 0});
    };
    for (std::size_t m = 0; m < K; ++m) {
      std::vector<QueryItem> q;
      std::vector<std::string> past_l, future_l, future_a;
      Assignment given;
      for (std::size_t j = 0; j <= m; ++j) {
        for (const auto& l : frame.points[j].covariates) {
          q.push_back({l, fixed, false});
          past_l.push_back(key(l));
        }
        if (j < m) {
          q.push_back({frame.points[j].treatment, fixed, true});
          given.emplace_back(key(frame.points[j].treatment), a_plus[j]);
        }
      }
      const std::string a_key = key(frame.points[m].treatment);
      q.push_back({frame.points[m].treatment, fixed, true});
      std::set<std::string> listed;
      for (const auto& it : q) listed.insert(it.variable);
      auto add_future = [&](const std::string& name, std::vector<std::string>& into) {
        if (listed.insert(name).second) q.push_back({name, fixed, treatments.count(name) > 0});
        into.push_back(key(name));
      };
      for (std::size_t j = m + 1; j < K; ++j) {
        for (const auto& l : frame.points[j].covariates) add_future(l, future_l);
        add_future(frame.points[j].treatment, future_a);
      }
      add_future(frame.outcome, future_l);
      std::vector<std::string> z_m;
      for (const auto& z : report.sets.z_k[m]) {
        if (listed.insert(z).second) q.push_back({z, fixed, treatments.count(z) > 0});
        z_m.push_back(key(z));
      }

      const auto joint = counterfactual_joint<S>(model, q);
      if (is_zero(joint.event_mass(given))) {
        report.skipped.push_back("m=" + std::to_string(m) + " under " + fixed.describe(model) +
                                 ": natural treatment history has zero mass");
        continue;
      }
      std::vector<std::string> keep = past_l;
      keep.push_back(a_key);
      std::vector<std::string> future_all = future_l;
      future_all.insert(future_all.end(), future_a.begin(), future_a.end());
      for (const auto& z : z_m) {
        if (std::find(future_all.begin(), future_all.end(), z) == future_all.end() &&
            std::find(keep.begin(), keep.end(), z) == keep.end()) {
          keep.push_back(z);
        }
      }
      for (const auto& f : future_all) keep.push_back(f);
      const auto cond = query_pmf<S>(joint, keep, given);
      std::vector<int> mapping(n_a, 0);
      mapping[static_cast<std::size_t>(a_plus[m])] = 1;
      const std::string ind = "I(" + a_key + "=" + model[model.index(frame.points[m].treatment)].domain.label(a_plus[m]) + ")";
      const auto indicator = cond.coarsen(a_key, ind, Domain::binary(), mapping);
      const std::vector<std::string> ind_set{ind};

      merge(report.b13, conditional_independent<S>(indicator, future_all, ind_set, past_l, tol));
      merge(report.b14, conditional_independent<S>(indicator, future_l, ind_set, past_l, tol));
      if (!z_m.empty()) merge(report.b11, conditional_independent<S>(indicator, z_m, ind_set, past_l, tol));
    }
  }

  // B1.2: q-tilde > 0 implies p > 0 on every history the law supports.
  const auto law = observed_law<S>(model);
  const auto q = compute_q_tilde<S>(model, frame, regime);
  const auto p = treatment_law<S>(law, frame);
  for (const auto& u : q.undefined) report.skipped.push_back("q-tilde undefined at " + u);
  std::size_t violations = 0;
  std::string first;
  for (std::size_t t = 0; t < K; ++t) {
    const auto& qs = q.slices[t];
    const auto& ps = p.slices[t];
    for (std::size_t c = 0; c < ps.tables.size(); ++c) {
      if (!ps.tables[c] || !qs.tables[c]) continue;
      for (std::size_t a = 0; a < n_a; ++a) {
        if (!is_zero((*qs.tables[c])[a]) && is_zero((*ps.tables[c])[a])) {
          ++violations;
          if (first.empty()) {
            first = "t=" + std::to_string(t) + " " + describe_history(ps.history, ps.domains, ps.labels(c)) +
                    " assigns " + frame.points[t].treatment + "=" +
                    model[model.index(frame.points[t].treatment)].domain.label(static_cast<int>(a));
          }
        }
      }
    }
  }
  report.b12.holds = violations == 0;
  report.b12.max_deviation = violations == 0 ? 0.0 : 1.0;
  report.b12.detail = violations == 0 ? "every assigned treatment has positive observed probability"
                                      : std::to_string(violations) + " positivity violation(s); first: " + first;
  return report;
}

#define CAUSAL_IDENT_INSTANTIATE(S)                                                                          \
  template struct RegimeDensitySet<S>;                                                                       \
  template std::vector<S> TreatmentMap::apply<S>(const std::vector<S>&) const;                               \
  template RegimeDensitySet<S> apply_map<S>(const RegimeDensitySet<S>&, const TreatmentMap&);                \
  template S regime_mean<S>(const Model&, const LongitudinalFrame&, const Regime&);                          \
  template RegimeDensitySet<S> compute_q_tilde<S>(const Model&, const LongitudinalFrame&, const Regime&);    \
  template RegimeDensitySet<S> treatment_law<S>(const JointPmf<S>&, const LongitudinalFrame&);               \
  template RegimeDensitySet<S> natural_treatment_law<S>(const Model&, const LongitudinalFrame&, const Regime&); \
  template GFormulaValue<S> extended_g_formula<S>(const JointPmf<S>&, const LongitudinalFrame&,              \
                                                  const RegimeDensitySet<S>&);                               \
  template S psi_g<S>(const JointPmf<S>&, const LongitudinalFrame&, const TreatmentMap&);                    \
  template RegimeDensitySet<S> incremental_ps_densities<S>(const JointPmf<S>&, const LongitudinalFrame&, const S&); \
  template Regime stochastic_regime<S>(const Model&, const LongitudinalFrame&, const RegimeDensitySet<S>&,   \
                                       std::string);                                                         \
  template Regime incremental_ps_regime<S>(const Model&, const JointPmf<S>&, const LongitudinalFrame&, const S&); \
  template MtpParameters<S> mtp_parameters<S>(const Model&, const LongitudinalFrame&, const Regime&,         \
                                              const TreatmentMap&);                                          \
  template BReport check_b<S>(const Model&, const LongitudinalFrame&, const Regime&, double);

CAUSAL_IDENT_INSTANTIATE(double)
CAUSAL_IDENT_INSTANTIATE(Rational)

#undef CAUSAL_IDENT_INSTANTIATE

}  // namespace causal_ident
