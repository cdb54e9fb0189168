#include "causal_ident/run.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "causal_ident/counterfactual.hpp"
#include "causal_ident/error.hpp"
#include "causal_ident/identification.hpp"
#include "causal_ident/longitudinal.hpp"
#include "causal_ident/mediation.hpp"

namespace causal_ident {

using json = nlohmann::ordered_json;

namespace {

const std::vector<std::string> kVerbs = {"eval", "check", "ident", "counterexample", "audit", "report"};
const std::vector<std::string> kOptions = {"param", "psi",    "gamma", "class",        "regime",    "n",    "budget",
                                           "tol",   "seed",   "mode",  "b_conditions", "g_formula", "beta", "floor"};

struct Options {
  std::vector<std::string> param, psi, gamma, classes;
  std::optional<std::string> regime;
  std::size_t n = 100;
  std::size_t budget = 50000;
  double tol = 1e-9;
  std::uint64_t seed = kDefaultSeed;
  Arithmetic mode = Arithmetic::Float;
  bool b_conditions = false;
  bool g_formula = false;
  std::optional<std::string> beta;
  double floor = 0.01;
};

[[noreturn]] void bad_request(const std::string& subject, const std::string& detail) {
  throw Error(ErrorKind::InvalidArgument, subject, detail);
}

std::vector<std::string> string_array(const json& j, const std::string& key) {
  if (j.is_string()) return {j.get<std::string>()};
  if (!j.is_array()) bad_request("--" + key, "expected a string or a list of strings");
  std::vector<std::string> out;
  for (const auto& x : j) {
    if (!x.is_string()) bad_request("--" + key, "expected strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

Options parse_options(const json& request) {
  Options o;
  if (!request.contains("options")) return o;
  const json& j = request["options"];
  if (!j.is_object()) bad_request("options", "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(kOptions.begin(), kOptions.end(), it.key()) == kOptions.end()) {
      bad_request("--" + it.key(), "unknown option");
    }
  }
  try {
    if (j.contains("param")) o.param = string_array(j["param"], "param");
    if (j.contains("psi")) o.psi = string_array(j["psi"], "psi");
    if (j.contains("gamma")) o.gamma = string_array(j["gamma"], "gamma");
    if (j.contains("class")) o.classes = string_array(j["class"], "class");
    if (j.contains("regime")) o.regime = j["regime"].get<std::string>();
    if (j.contains("n")) o.n = j["n"].get<std::size_t>();
    if (j.contains("budget")) o.budget = j["budget"].get<std::size_t>();
    if (j.contains("tol")) o.tol = j["tol"].get<double>();
    if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("mode")) o.mode = parse_arithmetic(j["mode"].get<std::string>());
    if (j.contains("b_conditions")) o.b_conditions = j["b_conditions"].get<bool>();
    if (j.contains("g_formula")) o.g_formula = j["g_formula"].get<bool>();
    if (j.contains("beta")) {
      o.beta = j["beta"].is_string() ? j["beta"].get<std::string>() : j["beta"].dump();
    }
    if (j.contains("floor")) o.floor = j["floor"].get<double>();
  } catch (const json::exception& e) {
    bad_request("options", std::string("malformed option value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    bad_request("--mode", e.what());
  }
  if (!(o.tol >= 0)) bad_request("--tol", "must be non-negative");
  return o;
}

template <class S>
json number(const S& v) {
  json j;
  j["value"] = to_double(v);
  if constexpr (is_exact_v<S>) j["exact"] = rational_to_string(v);
  return j;
}

EvalContext document_context(const SpecDocument& doc, const Model& model) {
  EvalContext ctx;
  ctx.mediation = doc.mediation;
  ctx.longitudinal = doc.longitudinal;
  if (doc.meta.contains("g1")) {
    const auto name = doc.meta["g1"].get<std::string>();
    auto it = doc.regimes.find(name);
    if (it == doc.regimes.end()) throw Error(ErrorKind::SchemaError, "/meta/g1", "unknown regime '" + name + "'");
    ctx.g1 = it->second;
  }
  if (doc.meta.contains("phi")) {
    if (!doc.longitudinal) throw Error(ErrorKind::SchemaError, "/meta/phi", "phi needs a longitudinal frame");
    const auto& a0 = model[model.index(doc.longitudinal->points.front().treatment)].domain;
    ctx.phi = treatment_map_from_json(doc.meta["phi"], a0, "/meta/phi");
  }
  return ctx;
}

const RegimeSpec& regime_spec(const SpecDocument& doc, const std::string& name) {
  auto it = doc.regimes.find(name);
  if (it == doc.regimes.end()) bad_request("--regime", "unknown regime '" + name + "'");
  return it->second;
}

ModelClass resolve_class(const SpecDocument& doc, const std::string& name) {
  if (doc.classes.contains(name)) return model_class_from_json(doc.classes[name], name, doc, "/classes/" + name);
  const auto names = builtin_class_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    bad_request("--class", "unknown class '" + name + "'; built-in classes: " + known);
  }
  return builtin_class(name);
}

void note_membership(const MembershipReport& r, std::vector<std::string>& warnings) {
  for (const auto& c : r.conditions) {
    if (c.zero_mass_strata) {
      warnings.push_back(r.class_name + " " + c.name + ": skipped " + std::to_string(c.zero_mass_strata) +
                         " zero-mass strata");
    }
  }
}

std::string outcome_of(const SpecDocument& doc, const Model& model) {
  if (doc.longitudinal) return doc.longitudinal->outcome;
  if (doc.mediation) return doc.mediation->outcome;
  for (const auto& v : model.variables()) {
    if (v.role == "outcome") return v.name;
  }
  bad_request("--regime", "no outcome variable: declare a frame or a variable with role \"outcome\"");
}

json regime_block(const Model& model, const Regime& regime) {
  json j;
  j["name"] = regime.name();
  j["description"] = regime.describe(model);
  return j;
}

template <class S>
json eval_verb(const SpecDocument& doc, const Model& model, const Options& o, std::vector<std::string>& warnings) {
  EvalContext ctx = document_context(doc, model);
  if (o.regime && doc.longitudinal) ctx.g1 = regime_spec(doc, *o.regime);
  json payload;
  payload["mode"] = to_string(o.mode);
  json values = json::array();
  std::vector<std::string> selectors = o.param;
  selectors.insert(selectors.end(), o.psi.begin(), o.psi.end());
  for (const auto& text : selectors) {
    const Quantity q = Quantity::parse(text);
    json v;
    v["quantity"] = q.text();
    v.update(number(evaluate<S>(q, model, ctx)));
    values.push_back(std::move(v));
  }
  if (!selectors.empty()) payload["values"] = std::move(values);

  if (o.regime && !o.g_formula) {
    Regime regime = bind_regime(model, regime_spec(doc, *o.regime));
    const std::string y = outcome_of(doc, model);
    const S mean = doc.longitudinal ? regime_mean<S>(model, *doc.longitudinal, regime)
                                    : counterfactual_mean<S>(model, y, regime);
    json r = regime_block(model, regime);
    r["outcome"] = y;
    r["mean"] = number(mean);
    payload["regime"] = std::move(r);
    for (const auto& w : regime.warnings()) warnings.push_back(w);
  }

  if (o.g_formula) {
    if (!doc.longitudinal) bad_request("--g-formula", "needs meta.longitudinal_frame");
    const auto& frame = *doc.longitudinal;
    const auto law = observed_law<S>(model);
    json g;
    RegimeDensitySet<S> q;
    if (o.beta) {
      if (o.regime) bad_request("--beta", "cannot be combined with --regime");
      S beta;
      try {
        beta = from_rational<S>(parse_rational(*o.beta));
      } catch (const std::invalid_argument&) {
        bad_request("--beta", "not a number: " + *o.beta);
      }
      q = incremental_ps_densities<S>(law, frame, beta);
      g["densities"] = "incremental propensity score, beta=" + *o.beta;
    } else if (o.regime) {
      Regime regime = bind_regime(model, regime_spec(doc, *o.regime));
      q = compute_q_tilde<S>(model, frame, regime);
      g["densities"] = "q-tilde of regime " + regime.name();
      g["regime"] = regime_block(model, regime);
      g["regime_mean"] = number(regime_mean<S>(model, frame, regime));
      for (const auto& w : regime.warnings()) warnings.push_back(w);
    } else {
      q = apply_map(treatment_law<S>(law, frame), ctx.phi);
      g["densities"] = "phi applied to the factual treatment law";
    }
    for (const auto& h : q.undefined) warnings.push_back("density undefined at history " + h);
    const auto value = extended_g_formula<S>(law, frame, q);
    g["value"] = number(value.value);
    g["weighted"] = number(value.weighted);
    payload["g_formula"] = std::move(g);
  }
  if (selectors.empty() && !o.regime && !o.g_formula) {
    bad_request("eval", "nothing to evaluate: give --param, --psi, --regime or --g-formula");
  }
  return payload;
}

template <class S>
json check_verb(const SpecDocument& doc, const Model& model, const Options& o, std::vector<std::string>& warnings,
                bool& refuted) {
  json payload;
  payload["mode"] = to_string(o.mode);
  const EvalContext ctx = document_context(doc, model);
  json memberships = json::array();
  for (const auto& name : o.classes) {
    MembershipReport r;
    if ((name == "m1" || name == "m2") && !doc.classes.contains(name)) {
      if (!ctx.mediation) bad_request("--class", name + " needs meta.mediation_frame");
      validate_frame(model, *ctx.mediation);
      r = name == "m1" ? check_m1<S>(model, *ctx.mediation, o.tol) : check_m2<S>(model, *ctx.mediation, o.tol);
      r.class_name = name;
    } else {
      ModelClass cls = resolve_class(doc, name);
      if (ctx.mediation) cls.context.mediation = ctx.mediation;
      if (ctx.longitudinal) cls.context.longitudinal = ctx.longitudinal;
      for (auto& p : cls.predicates) p.tol = o.tol;
      satisfies<S>(cls, model, &r);
    }
    note_membership(r, warnings);
    refuted = refuted || !r.holds;
    memberships.push_back(to_json(r));
  }
  if (!o.classes.empty()) payload["membership"] = std::move(memberships);

  if (o.b_conditions) {
    if (!doc.longitudinal) bad_request("--b-conditions", "needs meta.longitudinal_frame");
    std::optional<RegimeSpec> spec = ctx.g1;
    if (o.regime) spec = regime_spec(doc, *o.regime);
    if (!spec) bad_request("--b-conditions", "needs --regime or meta.g1");
    Regime regime = bind_regime(model, *spec);
    const auto b = check_b<S>(model, *doc.longitudinal, regime, o.tol);
    json j;
    j["regime"] = regime_block(model, regime);
    j["conditions"] = json::array({to_json(b.b11), to_json(b.b12), to_json(b.b13), to_json(b.b14)});
    j["z"] = b.sets.z;
    j["s"] = b.sets.s;
    j["z_k"] = b.sets.z_k;
    j["s_k"] = b.sets.s_k;
    for (const auto& s : b.skipped) warnings.push_back(s);
    for (const auto* c : {&b.b11, &b.b12, &b.b13, &b.b14}) {
      refuted = refuted || !c->holds;
      if (c->zero_mass_strata) {
        warnings.push_back(c->name + ": skipped " + std::to_string(c->zero_mass_strata) + " zero-mass strata");
      }
    }
    payload["b_conditions"] = std::move(j);
  }
  if (o.classes.empty() && !o.b_conditions) bad_request("check", "give --class and/or --b-conditions");
  return payload;
}

const std::string& single(const std::vector<std::string>& v, const char* flag) {
  if (v.size() != 1) bad_request(flag, "expected exactly one value");
  return v.front();
}

template <class S>
json ident_verb(const SpecDocument& doc, const Options& o, bool& refuted) {
  const Quantity gamma = Quantity::parse(single(o.gamma, "--gamma"));
  const Quantity psi = Quantity::parse(single(o.psi, "--psi"));
  const ModelClass cls = resolve_class(doc, single(o.classes, "--class"));
  const auto r = verify_identification<S>(gamma, psi, cls, o.n, o.tol, o.seed);
  refuted = !r.holds_on_sample;
  json j;
  j["claim"] = gamma.text() + " == " + psi.text();
  j["class"] = cls.name;
  j["n"] = o.n;
  j["tol"] = o.tol;
  j["holds"] = r.holds_on_sample;
  j["max_gap"] = r.max_gap;
  j["witness_model"] = refuted && r.worst_model ? model_to_json(*r.worst_model) : json(nullptr);
  j["seed"] = o.seed;
  j["mode"] = to_string(o.mode);
  j["worst_index"] = r.worst_index;
  return j;
}

json counterexample_verb(const SpecDocument& doc, const Options& o, std::vector<std::string>& warnings,
                         bool& refuted) {
  const Quantity gamma = Quantity::parse(single(o.gamma, "--gamma"));
  const Quantity psi = Quantity::parse(single(o.psi, "--psi"));
  const ModelClass cls = resolve_class(doc, single(o.classes, "--class"));
  const auto r = find_counterexample(gamma, psi, cls, o.budget, o.seed);
  for (const auto& w : r.warnings) warnings.push_back(w);
  refuted = r.best_model && r.gap > o.tol;
  json j;
  j["claim"] = gamma.text() + " == " + psi.text();
  j["class"] = cls.name;
  j["budget"] = o.budget;
  j["tol"] = o.tol;
  j["refuted"] = refuted;
  j["gap"] = r.gap;
  if (r.best_model) {
    j["gamma_value"] = evaluate<double>(gamma, *r.best_model, cls.context);
    j["psi_value"] = evaluate<double>(psi, *r.best_model, cls.context);
  }
  j["evaluations"] = r.evaluations;
  j["restarts"] = r.restarts;
  j["rejected"] = r.rejected;
  j["witness_model"] = r.best_model ? model_to_json(*r.best_model) : json(nullptr);
  j["seed"] = o.seed;
  return j;
}

json audit_verb(const SpecDocument& doc, const Options& o, bool& refuted) {
  if (o.classes.size() != 2) bad_request("--class", "audit needs two classes: the wider one first");
  if (o.gamma.size() != 2) bad_request("--gamma", "audit needs two parameters: gamma1, gamma2");
  if (o.psi.empty() || o.psi.size() > 2) bad_request("--psi", "audit needs one or two functionals: psi1[, psi2]");
  const ModelClass m1 = resolve_class(doc, o.classes[0]);
  const ModelClass m2 = resolve_class(doc, o.classes[1]);
  const Quantity g1 = Quantity::parse(o.gamma[0]), g2 = Quantity::parse(o.gamma[1]);
  const Quantity p1 = Quantity::parse(o.psi[0]);
  const Quantity p2 = Quantity::parse(o.psi.size() == 2 ? o.psi[1] : o.psi[0]);
  AuditConfig config;
  config.n = o.n;
  config.budget = o.budget;
  config.tol = o.tol;
  config.gap_floor = o.floor;
  config.seed = o.seed;
  const auto report = audit_slippage(m1, m2, g1, g2, p1, p2, config);
  refuted = !report.all_certified;
  json j;
  j["m1"] = m1.name;
  j["m2"] = m2.name;
  j["gamma1"] = g1.text();
  j["gamma2"] = g2.text();
  j["psi1"] = p1.text();
  j["psi2"] = p2.text();
  j.update(to_json(report));
  return j;
}

template <class S>
json report_verb(const SpecDocument& doc, const Model& model, const Options& o, std::vector<std::string>& warnings) {
  const EvalContext ctx = document_context(doc, model);
  json payload;
  payload["mode"] = to_string(o.mode);
  json vars = json::array();
  for (const auto& v : model.variables()) {
    json x;
    x["name"] = v.name;
    x["domain"] = v.domain.labels();
    json parents = json::array();
    for (auto p : v.parents) parents.push_back(model[p].name);
    x["parents"] = std::move(parents);
    x["noise_size"] = v.noise_domain.size();
    x["observed"] = v.observed;
    x["role"] = v.role;
    vars.push_back(std::move(x));
  }
  payload["variables"] = std::move(vars);
  payload["noise_configurations"] = model.noise_configurations();

  auto attempt = [&](const std::string& id, json& into) {
    try {
      into[id] = number(evaluate<S>(Quantity::parse(id), model, ctx));
    } catch (const Error& e) {
      if (!e.is_positivity()) throw;
      into[id] = nullptr;
      warnings.push_back(id + " not evaluated: " + e.what());
    }
  };
  if (ctx.mediation) {
    validate_frame(model, *ctx.mediation);
    json m;
    for (const char* id : {"gamma_ate", "gamma_nde", "gamma_nie", "gamma_rde", "gamma_rie", "gamma_rde_w", "psi_cmn",
                           "psi_mediation", "psi_rde", "psi_rde_w"}) {
      attempt(id, m);
    }
    const auto m1 = check_m1<S>(model, *ctx.mediation, o.tol);
    const auto m2 = check_m2<S>(model, *ctx.mediation, o.tol);
    note_membership(m1, warnings);
    note_membership(m2, warnings);
    m["m1"] = to_json(m1);
    m["m2"] = to_json(m2);
    payload["mediation"] = std::move(m);
  }
  if (ctx.longitudinal) {
    validate_frame(model, *ctx.longitudinal);
    json l;
    attempt("psi_g", l);
    if (ctx.g1) {
      for (const char* id : {"gamma_mtp", "gamma_mtp_si_g1", "gamma_mtp_si"}) attempt(id, l);
      Regime regime = bind_regime(model, *ctx.g1);
      const auto b = check_b<S>(model, *ctx.longitudinal, regime, o.tol);
      l["b_conditions"] = json::array({to_json(b.b11), to_json(b.b12), to_json(b.b13), to_json(b.b14)});
      for (const auto& s : b.skipped) warnings.push_back(s);
    }
    payload["longitudinal"] = std::move(l);
  }
  return payload;
}

const char* status_of(int code) {
  switch (code) {
    case kExitOk:
      return "ok";
    case kExitRefuted:
      return "refuted";
    case kExitPositivity:
      return "positivity";
    default:
      return "input_error";
  }
}

json base_record(const json& request, int code) {
  json record;
  json command;
  command["verb"] = request.value("verb", std::string{});
  command["spec"] = request.value("spec", std::string{});
  if (request.contains("argv")) command["argv"] = request["argv"];
  command["options"] = request.contains("options") ? request["options"] : json::object();
  record["command"] = std::move(command);
  record["version"] = kVersion;
  std::uint64_t seed = kDefaultSeed;
  if (request.contains("options") && request["options"].is_object() && request["options"].contains("seed") &&
      request["options"]["seed"].is_number_unsigned()) {
    seed = request["options"]["seed"].get<std::uint64_t>();
  }
  record["seed"] = seed;
  record["status"] = status_of(code);
  record["exit_code"] = code;
  return record;
}

template <class S>
json dispatch(const std::string& verb, const SpecDocument& doc, const Model& model, const Options& o,
              std::vector<std::string>& warnings, bool& refuted) {
  if (verb == "eval") return eval_verb<S>(doc, model, o, warnings);
  if (verb == "check") return check_verb<S>(doc, model, o, warnings, refuted);
  if (verb == "ident") return ident_verb<S>(doc, o, refuted);
  if (verb == "counterexample") return counterexample_verb(doc, o, warnings, refuted);
  if (verb == "audit") return audit_verb(doc, o, refuted);
  return report_verb<S>(doc, model, o, warnings);
}

}  // namespace

json error_record(const json& request, int exit_code, const std::string& kind, const std::string& subject,
                  const std::string& detail) {
  json record = base_record(request, exit_code);
  record["payload"] = nullptr;
  record["warnings"] = json::array();
  record["error"] = {{"kind", kind}, {"subject", subject}, {"detail", detail}};
  return record;
}

RunOutcome run_request(const SpecDocument& doc, const Model& model, const json& request) {
  RunOutcome out;
  try {
    if (!request.is_object()) bad_request("request", "expected a JSON object");
    const std::string verb = request.value("verb", std::string{});
    if (std::find(kVerbs.begin(), kVerbs.end(), verb) == kVerbs.end()) bad_request("verb", "unknown verb '" + verb + "'");
    const Options o = parse_options(request);
    std::vector<std::string> warnings;
    bool refuted = false;
    json payload = o.mode == Arithmetic::Rational ? dispatch<Rational>(verb, doc, model, o, warnings, refuted)
                                                  : dispatch<double>(verb, doc, model, o, warnings, refuted);
    out.exit_code = refuted ? kExitRefuted : kExitOk;
    out.record = base_record(request, out.exit_code);
    out.record["payload"] = std::move(payload);
    out.record["warnings"] = warnings;
  } catch (const Error& e) {
    out.exit_code = e.is_positivity() ? kExitPositivity : kExitInput;
    out.record = error_record(request, out.exit_code, to_string(e.kind()), e.subject(), e.detail());
  } catch (const json::exception& e) {
    out.exit_code = kExitInput;
    out.record = error_record(request, out.exit_code, "SchemaError", "", e.what());
  } catch (const std::exception& e) {
    out.exit_code = kExitInput;
    out.record = error_record(request, out.exit_code, "InternalError", "", e.what());
  }
  return out;
}

std::string render_machine(const json& record) { return record.dump(2) + "\n"; }

namespace {

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v.get<double>());
    return buf;
  }
  if (v.is_null()) return "-";
  if (v.is_object() && v.contains("value") && v.size() <= 2) {
    std::string s = scalar_text(v["value"]);
    if (v.contains("exact")) s += "  (" + v["exact"].get<std::string>() + ")";
    return s;
  }
  if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_primitive(); })) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + scalar_text(v[i]);
    return s + "]";
  }
  return v.dump();
}

bool is_leaf(const json& v) {
  return v.is_primitive() || (v.is_object() && v.contains("value") && v.size() <= 2 && v["value"].is_number()) ||
         (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_primitive(); }));
}

bool is_table(const json& v) {
  if (!v.is_array() || v.empty()) return false;
  for (const auto& row : v) {
    if (!row.is_object()) return false;
    for (auto it = row.begin(); it != row.end(); ++it) {
      if (!is_leaf(it.value())) return false;
    }
  }
  return true;
}

void render_table(std::ostringstream& os, const json& rows, const std::string& indent) {
  std::vector<std::string> columns;
  for (const auto& row : rows) {
    for (auto it = row.begin(); it != row.end(); ++it) {
      if (std::find(columns.begin(), columns.end(), it.key()) == columns.end()) columns.push_back(it.key());
    }
  }
  std::vector<std::size_t> width;
  for (const auto& c : columns) {
    std::size_t w = c.size();
    for (const auto& row : rows) {
      if (row.contains(c)) w = std::max(w, scalar_text(row[c]).size());
    }
    width.push_back(w);
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s = indent;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      s += cells[i];
      if (i + 1 < cells.size()) s += std::string(width[i] - cells[i].size() + 2, ' ');
    }
    os << s << "\n";
  };
  line(columns);
  std::vector<std::string> rule;
  for (auto w : width) rule.push_back(std::string(w, '-'));
  line(rule);
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    for (const auto& c : columns) cells.push_back(row.contains(c) ? scalar_text(row[c]) : "");
    line(cells);
  }
}

void render_object(std::ostringstream& os, const json& obj, const std::string& pointer, const std::string& indent) {
  std::size_t key_width = 0;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (is_leaf(it.value())) key_width = std::max(key_width, it.key().size());
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    const std::string here = pointer + "/" + key;
    if ((key == "witness_model" || key == "evidence") && !v.is_null()) {
      os << indent << key << ": see " << here << " in --output json\n";
    } else if (is_leaf(v)) {
      os << indent << key << std::string(key_width - key.size() + 2, ' ') << scalar_text(v) << "\n";
    } else if (is_table(v)) {
      os << indent << key << ":\n";
      render_table(os, v, indent + "  ");
    } else if (v.is_object()) {
      os << indent << key << ":\n";
      render_object(os, v, here, indent + "  ");
    } else {
      os << indent << key << ":\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = here + "/" + std::to_string(i);
        if (v[i].is_object()) {
          os << indent << "  [" << i << "]\n";
          render_object(os, v[i], p, indent + "    ");
        } else {
          os << indent << "  " << scalar_text(v[i]) << "\n";
        }
      }
    }
  }
}

}  // namespace

std::string render_human(const json& record, double wall_seconds) {
  std::ostringstream os;
  const json& cmd = record["command"];
  std::string echo = "causal_ident";
  if (cmd.contains("argv")) {
    for (const auto& a : cmd["argv"]) echo += " " + a.get<std::string>();
  } else {
    echo += " " + cmd.value("verb", std::string{}) + " " + cmd.value("spec", std::string{});
  }
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f s", wall_seconds);
  os << "command   " << echo << "\n";
  os << "version   " << record.value("version", std::string{}) << "\n";
  os << "seed      " << record["seed"].dump() << "\n";
  os << "wall time " << wall << "\n";
  os << "status    " << record.value("status", std::string{}) << " (exit " << record["exit_code"].dump() << ")\n";
  if (record.contains("error")) {
    const json& e = record["error"];
    os << "\nerror     " << e.value("kind", std::string{});
    const std::string subject = e.value("subject", std::string{});
    if (!subject.empty()) os << " at " << subject;
    os << "\n          " << e.value("detail", std::string{}) << "\n";
  }
  if (record.contains("payload") && record["payload"].is_object()) {
    os << "\n";
    render_object(os, record["payload"], "/payload", "");
  }
  const json& warnings = record.contains("warnings") ? record["warnings"] : json::array();
  os << "\nwarnings  " << warnings.size() << "\n";
  for (const auto& w : warnings) os << "  - " << w.get<std::string>() << "\n";
  return os.str();
}

}  // namespace causal_ident
