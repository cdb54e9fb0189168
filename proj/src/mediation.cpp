#include "causal_ident/mediation.hpp"

#include <algorithm>
#include <functional>

#include "causal_ident/counterfactual.hpp"
#include "causal_ident/error.hpp"
#include "causal_ident/world.hpp"

namespace causal_ident {

namespace {

int frame_label(const Model& model, const std::string& var, const std::string& label) {
  const std::size_t v = model.index(var);
  auto l = model[v].domain.find(label);
  if (!l) throw Error(ErrorKind::InvalidArgument, var, "treatment label '" + label + "' not in domain");
  return *l;
}

bool is_ancestor(const Model& model, std::size_t anc, std::size_t node) {
  std::vector<std::size_t> stack{node};
  std::vector<bool> seen(model.size(), false);
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (auto p : model[v].parents) {
      if (p == anc) return true;
      if (!seen[p]) {
        seen[p] = true;
        stack.push_back(p);
      }
    }
  }
  return false;
}

/// Visits every joint label combination of `domains` (last fastest).
void for_each_stratum(const std::vector<Domain>& domains,
                      const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> labels(domains.size(), 0);
  while (true) {
    fn(labels);
    std::size_t i = domains.size();
    while (i > 0) {
      --i;
      if (++labels[i] < static_cast<int>(domains[i].size())) break;
      labels[i] = 0;
      if (i == 0) return;
    }
    if (domains.empty()) return;
  }
}

Assignment assign(const std::vector<std::string>& keys, const std::vector<int>& labels) {
  Assignment a;
  for (std::size_t i = 0; i < keys.size(); ++i) a.emplace_back(keys[i], labels[i]);
  return a;
}

Assignment concat(Assignment a, const Assignment& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

template <class S>
std::vector<S> outcome_values(const Model& model, std::size_t y) {
  std::vector<S> vals;
  for (int i = 0; i < static_cast<int>(model[y].domain.size()); ++i) {
    vals.push_back(model.numeric_value<S>(y, i));
  }
  return vals;
}

template <class S>
std::vector<S> outcome_values(const Domain& d, const std::string& name) {
  std::vector<S> vals;
  for (const auto& l : d.labels()) {
    try {
      vals.push_back(from_rational<S>(parse_rational(l)));
    } catch (const std::invalid_argument&) {
      throw Error(ErrorKind::InvalidArgument, name, "label '" + l + "' has no numeric value");
    }
  }
  return vals;
}

/// E[Y | given] from a joint; ZeroMassEvent when the event is null.
template <class S>
S cond_mean(const JointPmf<S>& pmf, const std::string& ykey, const std::vector<S>& yvals,
            const Assignment& given) {
  const std::size_t yi = pmf.var_index(ykey);
  std::vector<std::pair<std::size_t, int>> g;
  for (const auto& [k, l] : given) g.emplace_back(pmf.var_index(k), l);
  S num(0), den(0);
  for (std::size_t cell = 0; cell < pmf.cells(); ++cell) {
    const S& m = pmf.mass_at(cell);
    if (is_zero(m)) continue;
    bool match = true;
    for (const auto& [i, l] : g) {
      if (pmf.label_of(cell, i) != l) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    den += m;
    num += m * yvals[static_cast<std::size_t>(pmf.label_of(cell, yi))];
  }
  if (is_zero(den)) {
    throw Error(ErrorKind::ZeroMassEvent, describe_assignment(given), "conditional mean of " + ykey);
  }
  return S(num / den);
}

/// P(event | given); ZeroMassEvent when the conditioning event is null.
template <class S>
S cond_prob(const JointPmf<S>& pmf, const Assignment& event, const Assignment& given) {
  const S den = pmf.event_mass(given);
  if (is_zero(den)) {
    throw Error(ErrorKind::ZeroMassEvent, describe_assignment(given), "conditioning event has zero mass");
  }
  return S(pmf.event_mass(concat(given, event)) / den);
}

std::vector<Domain> domains_of(const Model& model, const std::vector<std::string>& vars) {
  std::vector<Domain> d;
  for (const auto& v : vars) d.push_back(model[model.index(v)].domain);
  return d;
}

std::vector<std::string> keyed(const Model& model, const std::vector<std::string>& vars,
                               const Regime& regime) {
  std::vector<std::string> keys;
  for (const auto& v : vars) keys.push_back(query_key(model, {v, regime, false}));
  return keys;
}

std::vector<QueryItem> items(const std::vector<std::string>& vars, const Regime& regime) {
  std::vector<QueryItem> out;
  for (const auto& v : vars) out.push_back({v, regime, false});
  return out;
}

Regime do_treatment(const Model& model, const MediationFrame& frame, int a) {
  Regime r;
  r.set_static(model.index(frame.treatment), a);
  return r;
}

Regime do_treatment_mediator(const Model& model, const MediationFrame& frame, int a, int m) {
  Regime r;
  r.set_static(model.index(frame.treatment), a);
  r.set_static(model.index(frame.mediator), m);
  return r;
}

}  // namespace

int active_label(const Model& model, const MediationFrame& frame) {
  return frame_label(model, frame.treatment, frame.active);
}

int reference_label(const Model& model, const MediationFrame& frame) {
  return frame_label(model, frame.treatment, frame.reference);
}

void validate_frame(const Model& model, const MediationFrame& frame) {
  const std::size_t a = model.index(frame.treatment);
  const std::size_t m = model.index(frame.mediator);
  const std::size_t y = model.index(frame.outcome);
  if (frame.active == frame.reference) {
    throw Error(ErrorKind::InvalidArgument, frame.treatment, "active and reference values coincide");
  }
  active_label(model, frame);
  reference_label(model, frame);
  auto check_before = [&](std::size_t x, std::size_t z) {
    if (x >= z) {
      throw Error(ErrorKind::InvalidArgument, model[x].name,
                  "frame order requires it before '" + model[z].name + "'");
    }
  };
  for (const auto& l : frame.baseline) {
    const std::size_t li = model.index(l);
    check_before(li, a);
    if (is_ancestor(model, a, li)) {
      throw Error(ErrorKind::InvalidArgument, l, "baseline covariate is a descendant of treatment");
    }
  }
  for (const auto& w : frame.post_treatment) {
    const std::size_t wi = model.index(w);
    check_before(a, wi);
    check_before(wi, m);
    if (is_ancestor(model, m, wi)) {
      throw Error(ErrorKind::InvalidArgument, w, "post-treatment covariate is a descendant of the mediator");
    }
  }
  check_before(a, m);
  check_before(m, y);
  for (const auto& v : {frame.treatment, frame.mediator, frame.outcome}) {
    if (!model[model.index(v)].observed) {
      throw Error(ErrorKind::InvalidArgument, v, "frame variables must be observed");
    }
  }
  for (int i = 0; i < static_cast<int>(model[y].domain.size()); ++i) model.numeric_value<double>(y, i);
}

template <class S>
S gamma_ate(const Model& model, const MediationFrame& frame) {
  const int a = active_label(model, frame), as = reference_label(model, frame);
  return S(counterfactual_mean<S>(model, frame.outcome, do_treatment(model, frame, a)) -
           counterfactual_mean<S>(model, frame.outcome, do_treatment(model, frame, as)));
}

template <class S>
S gamma_cmn(const Model& model, const MediationFrame& frame) {
  return psi_cmn<S>(observed_law<S>(model), frame);
}

template <class S>
S nested_mean(const Model& model, const MediationFrame& frame, int a, int a_star) {
  model.require_mode<S>();
  const std::size_t mi = model.index(frame.mediator);
  const std::size_t yi = model.index(frame.outcome);
  const Regime inner = do_treatment(model, frame, a_star);
  std::vector<Regime> outer;
  for (int m = 0; m < static_cast<int>(model[mi].domain.size()); ++m) {
    outer.push_back(do_treatment_mediator(model, frame, a, m));
  }
  const auto yvals = outcome_values<S>(model, yi);
  S mean(0);
  for_each_noise<S>(model, [&](std::span<const int> noise, const S& p) {
    const int m = evaluate_world(model, noise, inner).values[mi];
    const int y = evaluate_world(model, noise, outer[static_cast<std::size_t>(m)]).values[yi];
    mean += p * yvals[static_cast<std::size_t>(y)];
  });
  return mean;
}

template <class S>
S gamma_nde(const Model& model, const MediationFrame& frame) {
  const int a = active_label(model, frame), as = reference_label(model, frame);
  return S(nested_mean<S>(model, frame, a, as) - nested_mean<S>(model, frame, as, as));
}

template <class S>
S gamma_nie(const Model& model, const MediationFrame& frame) {
  const int a = active_label(model, frame), as = reference_label(model, frame);
  return S(nested_mean<S>(model, frame, a, a) - nested_mean<S>(model, frame, a, as));
}

template <class S>
S interventional_mean(const Model& model, const MediationFrame& frame, int a, int a_star) {
  const std::size_t mi = model.index(frame.mediator);
  const std::size_t yi = model.index(frame.outcome);
  const auto yvals = outcome_values<S>(model, yi);

  const Regime star = do_treatment(model, frame, a_star);
  auto q_star = items(frame.baseline, star);
  q_star.push_back({frame.mediator, star, false});
  const auto mediator_law = counterfactual_joint<S>(model, q_star);
  const auto l_star = keyed(model, frame.baseline, star);
  const std::string m_key = query_key(model, {frame.mediator, star, false});

  std::vector<JointPmf<S>> outcome_laws;
  for (int m = 0; m < static_cast<int>(model[mi].domain.size()); ++m) {
    const Regime am = do_treatment_mediator(model, frame, a, m);
    auto q = items(frame.baseline, am);
    q.push_back({frame.outcome, am, false});
    outcome_laws.push_back(counterfactual_joint<S>(model, q));
  }

  S total(0);
  for_each_stratum(domains_of(model, frame.baseline), [&](const std::vector<int>& l) {
    const Assignment given_star = assign(l_star, l);
    const S pl = mediator_law.event_mass(given_star);
    if (is_zero(pl)) return;
    for (int m = 0; m < static_cast<int>(model[mi].domain.size()); ++m) {
      const S pm = cond_prob<S>(mediator_law, {{m_key, m}}, given_star);
      if (is_zero(pm)) continue;
      const Regime am = do_treatment_mediator(model, frame, a, m);
      const auto& law = outcome_laws[static_cast<std::size_t>(m)];
      const S ey = cond_mean<S>(law, query_key(model, {frame.outcome, am, false}), yvals,
                                assign(keyed(model, frame.baseline, am), l));
      total += pl * pm * ey;
    }
  });
  return total;
}

template <class S>
S gamma_rde(const Model& model, const MediationFrame& frame) {
  const int a = active_label(model, frame), as = reference_label(model, frame);
  return S(interventional_mean<S>(model, frame, a, as) - interventional_mean<S>(model, frame, as, as));
}

template <class S>
S gamma_rie(const Model& model, const MediationFrame& frame) {
  const int a = active_label(model, frame), as = reference_label(model, frame);
  return S(interventional_mean<S>(model, frame, a, a) - interventional_mean<S>(model, frame, a, as));
}

template <class S>
S conditional_interventional_mean(const Model& model, const MediationFrame& frame, int a,
                                  int a_star) {
  const std::size_t mi = model.index(frame.mediator);
  const std::size_t yi = model.index(frame.outcome);
  const auto yvals = outcome_values<S>(model, yi);

  std::vector<std::string> lw = frame.baseline;
  lw.insert(lw.end(), frame.post_treatment.begin(), frame.post_treatment.end());

  const Regime star = do_treatment(model, frame, a_star);
  auto q_star = items(lw, star);
  q_star.push_back({frame.mediator, star, false});
  const auto mediator_law = counterfactual_joint<S>(model, q_star);
  const auto lw_star = keyed(model, lw, star);
  const std::string m_key = query_key(model, {frame.mediator, star, false});

  std::vector<JointPmf<S>> outcome_laws;
  std::vector<Regime> am_regimes;
  for (int m = 0; m < static_cast<int>(model[mi].domain.size()); ++m) {
    am_regimes.push_back(do_treatment_mediator(model, frame, a, m));
    auto q = items(lw, am_regimes.back());
    q.push_back({frame.outcome, am_regimes.back(), false});
    outcome_laws.push_back(counterfactual_joint<S>(model, q));
  }

  S total(0);
  for_each_stratum(domains_of(model, lw), [&](const std::vector<int>& lw_labels) {
    // W^{a,m} = W^a because W precedes M; any m gives the stratum mass.
    const Assignment given_a = assign(keyed(model, lw, am_regimes[0]), lw_labels);
    const S p_stratum = outcome_laws[0].event_mass(given_a);
    if (is_zero(p_stratum)) return;
    const Assignment given_star = assign(lw_star, lw_labels);
    if (is_zero(mediator_law.event_mass(given_star))) {
      throw Error(ErrorKind::ZeroMassEvent, describe_assignment(given_star),
                  "W-stratum reachable under a has no mass under a*");
    }
    for (int m = 0; m < static_cast<int>(model[mi].domain.size()); ++m) {
      const S pm = cond_prob<S>(mediator_law, {{m_key, m}}, given_star);
      if (is_zero(pm)) continue;
      const auto& reg = am_regimes[static_cast<std::size_t>(m)];
      const S ey = cond_mean<S>(outcome_laws[static_cast<std::size_t>(m)],
                                query_key(model, {frame.outcome, reg, false}), yvals,
                                assign(keyed(model, lw, reg), lw_labels));
      total += p_stratum * pm * ey;
    }
  });
  return total;
}

template <class S>
S gamma_rde_w(const Model& model, const MediationFrame& frame) {
  const int a = active_label(model, frame), as = reference_label(model, frame);
  return S(conditional_interventional_mean<S>(model, frame, a, as) -
           conditional_interventional_mean<S>(model, frame, as, as));
}

// --- observed-data functionals ------------------------------------------------

namespace {

template <class S>
struct LawView {
  const JointPmf<S>& law;
  const MediationFrame& frame;
  std::vector<S> yvals;
  int a_active, a_reference;
  int m_labels;

  LawView(const JointPmf<S>& l, const MediationFrame& f) : law(l), frame(f) {
    const auto& yvar = law.vars()[law.var_index(frame.outcome)];
    yvals = outcome_values<S>(yvar.domain, frame.outcome);
    const auto& avar = law.vars()[law.var_index(frame.treatment)].domain;
    auto fa = avar.find(frame.active);
    auto fr = avar.find(frame.reference);
    if (!fa || !fr) throw Error(ErrorKind::InvalidArgument, frame.treatment, "treatment label not in domain");
    a_active = *fa;
    a_reference = *fr;
    m_labels = static_cast<int>(law.vars()[law.var_index(frame.mediator)].domain.size());
  }

  std::vector<Domain> domains(const std::vector<std::string>& vars) const {
    std::vector<Domain> d;
    for (const auto& v : vars) d.push_back(law.vars()[law.var_index(v)].domain);
    return d;
  }
};

}  // namespace

template <class S>
S psi_cmn(const JointPmf<S>& law, const MediationFrame& frame) {
  LawView<S> v(law, frame);
  S total(0);
  for_each_stratum(v.domains(frame.baseline), [&](const std::vector<int>& l) {
    const Assignment gl = assign(frame.baseline, l);
    const S pl = law.event_mass(gl);
    if (is_zero(pl)) return;
    const S e1 = cond_mean<S>(law, frame.outcome, v.yvals, concat(gl, {{frame.treatment, v.a_active}}));
    const S e0 = cond_mean<S>(law, frame.outcome, v.yvals, concat(gl, {{frame.treatment, v.a_reference}}));
    total += pl * (e1 - e0);
  });
  return total;
}

template <class S>
S psi_mediation(const JointPmf<S>& law, const MediationFrame& frame) {
  LawView<S> v(law, frame);
  S total(0);
  for_each_stratum(v.domains(frame.baseline), [&](const std::vector<int>& l) {
    const Assignment gl = assign(frame.baseline, l);
    const S pl = law.event_mass(gl);
    if (is_zero(pl)) return;
    const Assignment ref = concat(gl, {{frame.treatment, v.a_reference}});
    for (int m = 0; m < v.m_labels; ++m) {
      const S pm = cond_prob<S>(law, {{frame.mediator, m}}, ref);
      if (is_zero(pm)) continue;
      const Assignment mm{{frame.mediator, m}};
      const S e1 = cond_mean<S>(law, frame.outcome, v.yvals,
                                concat(concat(gl, {{frame.treatment, v.a_active}}), mm));
      const S e0 = cond_mean<S>(law, frame.outcome, v.yvals, concat(ref, mm));
      total += pl * pm * (e1 - e0);
    }
  });
  return total;
}

namespace {

template <class S>
S psi_rde_impl(const JointPmf<S>& law, const MediationFrame& frame, int a, int a_star,
               bool w_conditional) {
  LawView<S> v(law, frame);
  S total(0);
  const auto wdom = v.domains(frame.post_treatment);
  for_each_stratum(v.domains(frame.baseline), [&](const std::vector<int>& l) {
    const Assignment gl = assign(frame.baseline, l);
    const S pl = law.event_mass(gl);
    if (is_zero(pl)) return;
    const Assignment la = concat(gl, {{frame.treatment, a}});
    const Assignment ls = concat(gl, {{frame.treatment, a_star}});
    for_each_stratum(wdom, [&](const std::vector<int>& w) {
      const Assignment gw = assign(frame.post_treatment, w);
      const S pw = cond_prob<S>(law, gw, la);
      if (is_zero(pw)) return;
      for (int m = 0; m < v.m_labels; ++m) {
        const Assignment mm{{frame.mediator, m}};
        const S pm = w_conditional ? cond_prob<S>(law, mm, concat(ls, gw)) : cond_prob<S>(law, mm, ls);
        if (is_zero(pm)) continue;
        const S ey = cond_mean<S>(law, frame.outcome, v.yvals, concat(concat(la, gw), mm));
        total += pl * pw * pm * ey;
      }
    });
  });
  return total;
}

}  // namespace

template <class S>
S psi_rde(const JointPmf<S>& law, const MediationFrame& frame, int a, int a_star) {
  return psi_rde_impl<S>(law, frame, a, a_star, false);
}

template <class S>
S psi_rde_w(const JointPmf<S>& law, const MediationFrame& frame, int a, int a_star) {
  return psi_rde_impl<S>(law, frame, a, a_star, true);
}

template <class S>
S psi_rde_contrast(const JointPmf<S>& law, const MediationFrame& frame) {
  LawView<S> v(law, frame);
  return S(psi_rde<S>(law, frame, v.a_active, v.a_reference) -
           psi_rde<S>(law, frame, v.a_reference, v.a_reference));
}

template <class S>
S psi_rde_w_contrast(const JointPmf<S>& law, const MediationFrame& frame) {
  LawView<S> v(law, frame);
  return S(psi_rde_w<S>(law, frame, v.a_active, v.a_reference) -
           psi_rde_w<S>(law, frame, v.a_reference, v.a_reference));
}

// --- membership -------------------------------------------------------------------

namespace {

ConditionVerdict named(std::string name) {
  ConditionVerdict v;
  v.name = std::move(name);
  return v;
}

template <class S>
void merge(ConditionVerdict& verdict, const CiResult<S>& ci) {
  verdict.holds = verdict.holds && ci.holds;
  verdict.max_deviation = std::max(verdict.max_deviation, to_double(ci.max_deviation));
  verdict.zero_mass_strata += ci.zero_mass_strata;
}

template <class S>
void add_m1_conditions(const Model& model, const MediationFrame& frame, double tol,
                       MembershipReport& report) {
  validate_frame(model, frame);
  const std::size_t mi = model.index(frame.mediator);
  const int m_labels = static_cast<int>(model[mi].domain.size());
  const std::vector<int> values{active_label(model, frame), reference_label(model, frame)};
  std::vector<std::string> lw = frame.baseline;
  lw.insert(lw.end(), frame.post_treatment.begin(), frame.post_treatment.end());

  ConditionVerdict a11 = named("A1.1"), a12 = named("A1.2"), a13 = named("A1.3");
  const auto observed = observed_law<S>(model);
  for (int a : values) {
    const Regime do_a = do_treatment(model, frame, a);
    const std::string m_key = query_key(model, {frame.mediator, do_a, false});
    for (int m = 0; m < m_labels; ++m) {
      const Regime do_am = do_treatment_mediator(model, frame, a, m);
      const std::string y_key = query_key(model, {frame.outcome, do_am, false});
      auto q = items(lw, Regime{});
      q.push_back({frame.treatment, Regime{}, false});
      q.push_back({frame.outcome, do_am, false});
      q.push_back({frame.mediator, do_a, false});
      const auto joint = counterfactual_joint<S>(model, q);
      merge(a11, conditional_independent<S>(joint, {y_key, m_key}, {frame.treatment}, frame.baseline, tol));
      if (is_zero(joint.event_mass({{frame.treatment, a}}))) {
        ++a12.zero_mass_strata;
        continue;
      }
      std::vector<std::string> keep = lw;
      keep.push_back(y_key);
      keep.push_back(m_key);
      const auto given_a = query_pmf<S>(joint, keep, {{frame.treatment, a}});
      merge(a12, conditional_independent<S>(given_a, {y_key}, {m_key}, lw, tol));
    }
  }

  // Positivity: P(A=a | l) > 0 and P(M=m | w, a, l) > 0 wherever the condition has mass.
  std::size_t violations = 0;
  std::string first;
  for (int a : values) {
    for_each_stratum(domains_of(model, frame.baseline), [&](const std::vector<int>& labels) {
      const Assignment l = assign(frame.baseline, labels);
      if (is_zero(observed.event_mass(l))) return;
      if (is_zero(observed.event_mass(concat(l, {{frame.treatment, a}})))) {
        ++violations;
        if (first.empty()) {
          first = "P(" + frame.treatment + "=" + model[model.index(frame.treatment)].domain.label(a) + " | " +
                  describe_assignment(l) + ")=0";
        }
      }
    });
    for_each_stratum(domains_of(model, lw), [&](const std::vector<int>& labels) {
      const Assignment g = concat(assign(lw, labels), {{frame.treatment, a}});
      const S pg = observed.event_mass(g);
      if (is_zero(pg)) return;
      // The (W, L) stratum must be reachable under every treatment value.
      for (int other : values) {
        const Assignment g_other = concat(assign(lw, labels), {{frame.treatment, other}});
        if (is_zero(observed.event_mass(g_other))) {
          ++violations;
          if (first.empty()) first = "P(" + describe_assignment(g_other) + ")=0 while P(" + describe_assignment(g) + ")>0";
        }
      }
      for (int m = 0; m < m_labels; ++m) {
        if (is_zero(observed.event_mass(concat(g, {{frame.mediator, m}})))) {
          ++violations;
          if (first.empty()) first = "P(" + frame.mediator + "=" + model[mi].domain.label(m) + " | " + describe_assignment(g) + ")=0";
        }
      }
    });
  }
  a13.holds = violations == 0;
  a13.max_deviation = violations == 0 ? 0.0 : 1.0;
  a13.detail = violations == 0 ? "all required events have positive probability"
                                : std::to_string(violations) + " positivity violation(s); first: " + first;
  report.conditions.push_back(a11);
  report.conditions.push_back(a12);
  report.conditions.push_back(a13);
}

}  // namespace

template <class S>
MembershipReport check_m1(const Model& model, const MediationFrame& frame, double tol) {
  MembershipReport report;
  report.class_name = "M1";
  add_m1_conditions<S>(model, frame, tol, report);
  report.holds = std::all_of(report.conditions.begin(), report.conditions.end(),
                             [](const ConditionVerdict& c) { return c.holds; });
  return report;
}

template <class S>
MembershipReport check_m2(const Model& model, const MediationFrame& frame, double tol) {
  MembershipReport report;
  report.class_name = "M2";
  add_m1_conditions<S>(model, frame, tol, report);

  const std::size_t mi = model.index(frame.mediator);
  const int m_labels = static_cast<int>(model[mi].domain.size());
  const std::vector<int> values{active_label(model, frame), reference_label(model, frame)};
  std::vector<std::string> lw = frame.baseline;
  lw.insert(lw.end(), frame.post_treatment.begin(), frame.post_treatment.end());
  std::vector<std::string> lwa = lw;
  lwa.push_back(frame.treatment);

  ConditionVerdict a21 = named("A2.1"), a22 = named("A2.2");
  for (int a : values) {
    for (int a_star : values) {
      const Regime do_star = do_treatment(model, frame, a_star);
      const std::string m_key = query_key(model, {frame.mediator, do_star, false});
      for (int m = 0; m < m_labels; ++m) {
        const Regime do_am = do_treatment_mediator(model, frame, a, m);
        const std::string y_key = query_key(model, {frame.outcome, do_am, false});
        auto q = items(lw, Regime{});
        q.push_back({frame.treatment, Regime{}, false});
        q.push_back({frame.outcome, do_am, false});
        q.push_back({frame.mediator, do_star, false});
        const auto joint = counterfactual_joint<S>(model, q);
        merge(a21, conditional_independent<S>(joint, {y_key, m_key}, {frame.treatment}, lw, tol));
        merge(a22, conditional_independent<S>(joint, {y_key}, {m_key}, lwa, tol));
      }
    }
  }
  report.conditions.push_back(a21);
  report.conditions.push_back(a22);
  report.holds = std::all_of(report.conditions.begin(), report.conditions.end(),
                             [](const ConditionVerdict& c) { return c.holds; });
  return report;
}

#define CAUSAL_IDENT_INSTANTIATE(S)                                                           \
  template S gamma_ate<S>(const Model&, const MediationFrame&);                               \
  template S gamma_cmn<S>(const Model&, const MediationFrame&);                               \
  template S nested_mean<S>(const Model&, const MediationFrame&, int, int);                   \
  template S gamma_nde<S>(const Model&, const MediationFrame&);                               \
  template S gamma_nie<S>(const Model&, const MediationFrame&);                               \
  template S interventional_mean<S>(const Model&, const MediationFrame&, int, int);           \
  template S gamma_rde<S>(const Model&, const MediationFrame&);                               \
  template S gamma_rie<S>(const Model&, const MediationFrame&);                               \
  template S conditional_interventional_mean<S>(const Model&, const MediationFrame&, int, int); \
  template S gamma_rde_w<S>(const Model&, const MediationFrame&);                             \
  template S psi_cmn<S>(const JointPmf<S>&, const MediationFrame&);                           \
  template S psi_mediation<S>(const JointPmf<S>&, const MediationFrame&);                     \
  template S psi_rde<S>(const JointPmf<S>&, const MediationFrame&, int, int);                 \
  template S psi_rde_w<S>(const JointPmf<S>&, const MediationFrame&, int, int);               \
  template S psi_rde_contrast<S>(const JointPmf<S>&, const MediationFrame&);                  \
  template S psi_rde_w_contrast<S>(const JointPmf<S>&, const MediationFrame&);                \
  template MembershipReport check_m1<S>(const Model&, const MediationFrame&, double);         \
  template MembershipReport check_m2<S>(const Model&, const MediationFrame&, double);

CAUSAL_IDENT_INSTANTIATE(double)
CAUSAL_IDENT_INSTANTIATE(Rational)

#undef CAUSAL_IDENT_INSTANTIATE

}  // namespace causal_ident
