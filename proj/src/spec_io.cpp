#include "causal_ident/spec_io.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "causal_ident/error.hpp"

namespace causal_ident {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void schema(std::string_view pointer, const std::string& detail) {
  throw Error(ErrorKind::SchemaError, std::string(pointer), detail);
}

std::string ptr(std::string_view base, std::string_view key) {
  return std::string(base) + "/" + std::string(key);
}

std::string ptr(std::string_view base, std::size_t i) { return ptr(base, std::to_string(i)); }

const json& require(const json& j, const char* key, std::string_view pointer) {
  if (!j.is_object()) schema(pointer, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema(ptr(pointer, key), "missing required key");
  return *it;
}

/// Labels may be written as strings or numbers; numbers use their JSON text.
std::string label_from_json(const json& j, std::string_view pointer) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer() || j.is_number_unsigned()) return j.dump();
  if (j.is_boolean()) return j.get<bool>() ? "1" : "0";
  if (j.is_number_float()) return j.dump();
  schema(pointer, "expected a label (string or number)");
}

std::string string_from_json(const json& j, std::string_view pointer) {
  if (!j.is_string()) schema(pointer, "expected a string");
  return j.get<std::string>();
}

std::vector<std::string> string_list(const json& j, std::string_view pointer, bool labels = false) {
  if (!j.is_array()) schema(pointer, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(labels ? label_from_json(j[i], ptr(pointer, i)) : string_from_json(j[i], ptr(pointer, i)));
  }
  return out;
}

Domain domain_from_json(const json& j, std::string_view pointer) {
  auto labels = string_list(j, pointer, true);
  if (labels.empty()) schema(pointer, "domain needs at least one label");
  try {
    return Domain(std::move(labels));
  } catch (const std::invalid_argument& e) {
    schema(pointer, e.what());
  }
}

json domain_to_json(const Domain& d) {
  json out = json::array();
  for (const auto& l : d.labels()) out.push_back(l);
  return out;
}

std::vector<Rational> pmf_from_json(const json& j, std::string_view pointer) {
  if (!j.is_array()) schema(pointer, "expected an array of probabilities");
  std::vector<Rational> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(probability_from_json(j[i], ptr(pointer, i)));
  return out;
}

json pmf_to_json(const std::vector<Rational>& pmf) {
  json out = json::array();
  for (const auto& p : pmf) out.push_back(probability_to_json(p));
  return out;
}

int label_index(const Domain& d, const std::string& label, const std::string& var, std::string_view pointer) {
  auto l = d.find(label);
  if (!l) schema(pointer, "label '" + label + "' is not in the domain of " + var);
  return *l;
}

}  // namespace

Rational probability_from_json(const json& j, std::string_view pointer) {
  if (j.is_number_integer() || j.is_number_unsigned()) return Rational(j.dump());
  if (j.is_number_float()) return rational_from_double(j.get<double>());
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const std::exception&) {
      schema(pointer, "malformed probability '" + j.get<std::string>() + "'");
    }
  }
  schema(pointer, "expected a probability (number, decimal string or \"p/q\")");
}

json probability_to_json(const Rational& p) { return rational_to_string(p); }

ModelSpec model_spec_from_json(const json& variables, std::string_view pointer) {
  if (!variables.is_array()) schema(pointer, "expected an array of variables");
  ModelSpec spec;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    const std::string p = ptr(pointer, i);
    const json& v = variables[i];
    VariableSpec var;
    var.name = string_from_json(require(v, "name", p), ptr(p, "name"));
    var.domain = domain_from_json(require(v, "domain", p), ptr(p, "domain"));
    if (v.contains("parents")) var.parents = string_list(v["parents"], ptr(p, "parents"));
    if (v.contains("noise")) {
      const json& n = v["noise"];
      const std::string np = ptr(p, "noise");
      var.noise.name = n.contains("name") ? string_from_json(n["name"], ptr(np, "name")) : "e_" + var.name;
      var.noise.domain = domain_from_json(require(n, "domain", np), ptr(np, "domain"));
      var.noise.pmf = pmf_from_json(require(n, "pmf", np), ptr(np, "pmf"));
    }
    const json& table = require(v, "table", p);
    if (!table.is_array()) schema(ptr(p, "table"), "expected an array of entries");
    for (std::size_t r = 0; r < table.size(); ++r) {
      const std::string tp = ptr(ptr(p, "table"), r);
      TableEntry e;
      if (table[r].contains("parents")) e.parents = string_list(table[r]["parents"], ptr(tp, "parents"), true);
      e.noise = table[r].contains("noise") ? label_from_json(table[r]["noise"], ptr(tp, "noise")) : "0";
      e.out = label_from_json(require(table[r], "out", tp), ptr(tp, "out"));
      var.table.push_back(std::move(e));
    }
    if (v.contains("observed")) {
      if (!v["observed"].is_boolean()) schema(ptr(p, "observed"), "expected a boolean");
      var.observed = v["observed"].get<bool>();
    }
    if (v.contains("role")) var.role = string_from_json(v["role"], ptr(p, "role"));
    spec.variables.push_back(std::move(var));
  }
  return spec;
}

json model_spec_to_json(const ModelSpec& spec) {
  json vars = json::array();
  for (const auto& v : spec.variables) {
    json j;
    j["name"] = v.name;
    j["domain"] = domain_to_json(v.domain);
    j["parents"] = v.parents;
    j["noise"] = {{"name", v.noise.name}, {"domain", domain_to_json(v.noise.domain)}, {"pmf", pmf_to_json(v.noise.pmf)}};
    json table = json::array();
    for (const auto& e : v.table) table.push_back({{"parents", e.parents}, {"noise", e.noise}, {"out", e.out}});
    j["table"] = std::move(table);
    j["observed"] = v.observed;
    if (!v.role.empty()) j["role"] = v.role;
    vars.push_back(std::move(j));
  }
  return vars;
}

json model_to_json(const Model& model) { return json{{"variables", model_spec_to_json(model.to_spec())}}; }

MediationFrame mediation_frame_from_json(const json& j, std::string_view pointer) {
  MediationFrame f;
  if (j.contains("baseline")) f.baseline = string_list(j["baseline"], ptr(pointer, "baseline"));
  f.treatment = string_from_json(require(j, "treatment", pointer), ptr(pointer, "treatment"));
  if (j.contains("post_treatment")) f.post_treatment = string_list(j["post_treatment"], ptr(pointer, "post_treatment"));
  f.mediator = string_from_json(require(j, "mediator", pointer), ptr(pointer, "mediator"));
  f.outcome = string_from_json(require(j, "outcome", pointer), ptr(pointer, "outcome"));
  if (j.contains("active")) f.active = label_from_json(j["active"], ptr(pointer, "active"));
  if (j.contains("reference")) f.reference = label_from_json(j["reference"], ptr(pointer, "reference"));
  return f;
}

json to_json(const MediationFrame& f) {
  return json{{"baseline", f.baseline},   {"treatment", f.treatment}, {"post_treatment", f.post_treatment},
              {"mediator", f.mediator},   {"outcome", f.outcome},     {"active", f.active},
              {"reference", f.reference}};
}

LongitudinalFrame longitudinal_frame_from_json(const json& j, std::string_view pointer) {
  LongitudinalFrame f;
  const json& points = require(j, "points", pointer);
  if (!points.is_array() || points.empty()) schema(ptr(pointer, "points"), "expected a non-empty array");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string p = ptr(ptr(pointer, "points"), i);
    TimePoint t;
    if (points[i].contains("covariates")) t.covariates = string_list(points[i]["covariates"], ptr(p, "covariates"));
    t.treatment = string_from_json(require(points[i], "treatment", p), ptr(p, "treatment"));
    f.points.push_back(std::move(t));
  }
  f.outcome = string_from_json(require(j, "outcome", pointer), ptr(pointer, "outcome"));
  return f;
}

json to_json(const LongitudinalFrame& f) {
  json points = json::array();
  for (const auto& p : f.points) points.push_back({{"covariates", p.covariates}, {"treatment", p.treatment}});
  return json{{"points", std::move(points)}, {"outcome", f.outcome}};
}

TreatmentMap treatment_map_from_json(const json& j, const Domain& treatment, std::string_view pointer) {
  if (j.is_null() || (j.is_string() && j.get<std::string>() == "identity")) return TreatmentMap::identity();
  if (j.is_object() && j.contains("map")) {
    const json& m = j["map"];
    if (!m.is_object()) schema(ptr(pointer, "map"), "expected an object label -> label");
    std::vector<int> targets(treatment.size());
    for (std::size_t a = 0; a < treatment.size(); ++a) targets[a] = static_cast<int>(a);
    for (auto it = m.begin(); it != m.end(); ++it) {
      const std::string mp = ptr(ptr(pointer, "map"), it.key());
      const int from = label_index(treatment, it.key(), "the treatment", mp);
      targets[static_cast<std::size_t>(from)] = label_index(treatment, label_from_json(it.value(), mp), "the treatment", mp);
    }
    return TreatmentMap::map(std::move(targets), treatment.size());
  }
  if (j.is_object() && j.contains("kernel")) {
    const json& k = j["kernel"];
    if (!k.is_array() || k.size() != treatment.size()) schema(ptr(pointer, "kernel"), "expected one row per treatment label");
    std::vector<std::vector<Rational>> kernel;
    for (std::size_t r = 0; r < k.size(); ++r) kernel.push_back(pmf_from_json(k[r], ptr(ptr(pointer, "kernel"), r)));
    try {
      return TreatmentMap::from_kernel(std::move(kernel));
    } catch (const Error& e) {
      schema(ptr(pointer, "kernel"), e.detail());
    }
  }
  schema(pointer, "expected \"identity\", {\"map\": {...}} or {\"kernel\": [[...]]}");
}

namespace {

std::size_t input_key(const Model& model, const Rule& rule, const std::vector<std::string>& labels,
                      std::string_view pointer) {
  if (labels.size() != rule.inputs.size()) schema(pointer, "expected one label per rule input");
  std::size_t key = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& var = model[rule.inputs[i]];
    key += static_cast<std::size_t>(label_index(var.domain, labels[i], var.name, pointer)) * rule.input_strides[i];
  }
  return key;
}

}  // namespace

Regime bind_regime(const Model& model, const RegimeSpec& spec) {
  const std::string base = "/regimes/" + spec.name;
  Regime regime(spec.name);
  const json& rules = require(spec.body, "rules", base);
  if (!rules.is_array()) schema(ptr(base, "rules"), "expected an array");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string p = ptr(ptr(base, "rules"), i);
    const json& r = rules[i];
    const std::string target_name = string_from_json(require(r, "target", p), ptr(p, "target"));
    auto target = model.find(target_name);
    if (!target) schema(ptr(p, "target"), "unknown variable '" + target_name + "'");
    const auto& tvar = model[*target];
    const std::string kind = string_from_json(require(r, "kind", p), ptr(p, "kind"));
    std::vector<std::size_t> inputs;
    if (r.contains("inputs")) {
      for (const auto& name : string_list(r["inputs"], ptr(p, "inputs"))) {
        auto in = model.find(name);
        if (!in) schema(ptr(p, "inputs"), "unknown variable '" + name + "'");
        inputs.push_back(*in);
      }
    }
    std::vector<std::size_t> strides;
    const std::size_t keys = mixed_radix(model, inputs, strides);
    Rule probe;
    probe.inputs = inputs;
    probe.input_strides = strides;
    const json empty = json::array();
    const json& table = r.contains("table") ? r["table"] : empty;
    if (!table.is_array()) schema(ptr(p, "table"), "expected an array");

    if (kind == "static") {
      regime.set_static(*target, label_index(tvar.domain, label_from_json(require(r, "value", p), ptr(p, "value")),
                                             tvar.name, ptr(p, "value")));
    } else if (kind == "dynamic") {
      std::vector<int> assign(keys, -1);
      for (std::size_t e = 0; e < table.size(); ++e) {
        const std::string ep = ptr(ptr(p, "table"), e);
        const auto in = table[e].contains("inputs") ? string_list(table[e]["inputs"], ptr(ep, "inputs"), true)
                                                    : std::vector<std::string>{};
        assign[input_key(model, probe, in, ep)] =
            label_index(tvar.domain, label_from_json(require(table[e], "out", ep), ptr(ep, "out")), tvar.name, ep);
      }
      if (std::find(assign.begin(), assign.end(), -1) != assign.end()) {
        schema(ptr(p, "table"), "dynamic rule does not cover every input combination");
      }
      regime.set_dynamic(*target, inputs, std::move(assign), model);
    } else if (kind == "natural") {
      const std::size_t n = tvar.domain.size();
      std::vector<int> assign(n * keys, -1);
      if (r.contains("map")) {
        const json& m = r["map"];
        if (!m.is_object()) schema(ptr(p, "map"), "expected an object natural -> assigned");
        for (std::size_t a = 0; a < n; ++a) {
          for (std::size_t k = 0; k < keys; ++k) assign[a * keys + k] = static_cast<int>(a);
        }
        for (auto it = m.begin(); it != m.end(); ++it) {
          const std::string mp = ptr(ptr(p, "map"), it.key());
          const int from = label_index(tvar.domain, it.key(), tvar.name, mp);
          const int to = label_index(tvar.domain, label_from_json(it.value(), mp), tvar.name, mp);
          for (std::size_t k = 0; k < keys; ++k) assign[static_cast<std::size_t>(from) * keys + k] = to;
        }
      }
      for (std::size_t e = 0; e < table.size(); ++e) {
        const std::string ep = ptr(ptr(p, "table"), e);
        const auto in = table[e].contains("inputs") ? string_list(table[e]["inputs"], ptr(ep, "inputs"), true)
                                                    : std::vector<std::string>{};
        const int nat = label_index(tvar.domain, label_from_json(require(table[e], "natural", ep), ptr(ep, "natural")),
                                    tvar.name, ep);
        assign[static_cast<std::size_t>(nat) * keys + input_key(model, probe, in, ep)] =
            label_index(tvar.domain, label_from_json(require(table[e], "out", ep), ptr(ep, "out")), tvar.name, ep);
      }
      if (std::find(assign.begin(), assign.end(), -1) != assign.end()) {
        schema(ptr(p, "table"), "natural-value rule does not cover every (natural, input) combination");
      }
      regime.set_natural_value(*target, inputs, std::move(assign), model);
    } else if (kind == "stochastic") {
      std::vector<std::optional<std::vector<Rational>>> draws(keys);
      if (r.contains("pmf")) {
        const auto pmf = pmf_from_json(r["pmf"], ptr(p, "pmf"));
        for (auto& d : draws) d = pmf;
      }
      for (std::size_t e = 0; e < table.size(); ++e) {
        const std::string ep = ptr(ptr(p, "table"), e);
        const auto in = table[e].contains("inputs") ? string_list(table[e]["inputs"], ptr(ep, "inputs"), true)
                                                    : std::vector<std::string>{};
        draws[input_key(model, probe, in, ep)] = pmf_from_json(require(table[e], "pmf", ep), ptr(ep, "pmf"));
      }
      regime.set_stochastic(*target, inputs, std::move(draws), model);
    } else {
      schema(ptr(p, "kind"), "unknown rule kind '" + kind + "' (static | dynamic | natural | stochastic)");
    }
  }
  try {
    validate_regime(model, regime);
  } catch (const Error& e) {
    throw Error(e.kind(), ptr(base, "rules"), e.subject() + ": " + e.detail());
  }
  return regime;
}

json regime_to_json(const Model& model, const Regime& regime) {
  json rules = json::array();
  for (const auto& r : regime.rules()) {
    const auto& tvar = model[r.target];
    json j;
    j["target"] = tvar.name;
    j["kind"] = to_string(r.kind);
    if (r.kind == RuleKind::Static) {
      j["value"] = tvar.domain.label(r.value);
      rules.push_back(std::move(j));
      continue;
    }
    json inputs = json::array();
    for (auto in : r.inputs) inputs.push_back(model[in].name);
    j["inputs"] = inputs;
    auto labels_of = [&](std::size_t key) {
      json out = json::array();
      for (std::size_t i = 0; i < r.inputs.size(); ++i) {
        const auto& d = model[r.inputs[i]].domain;
        out.push_back(d.label(static_cast<int>((key / r.input_strides[i]) % d.size())));
      }
      return out;
    };
    json table = json::array();
    for (std::size_t k = 0; k < r.key_count; ++k) {
      switch (r.kind) {
        case RuleKind::Dynamic:
          table.push_back({{"inputs", labels_of(k)}, {"out", tvar.domain.label(r.assign[k])}});
          break;
        case RuleKind::NaturalValue:
          for (std::size_t a = 0; a < tvar.domain.size(); ++a) {
            table.push_back({{"natural", tvar.domain.label(static_cast<int>(a))},
                             {"inputs", labels_of(k)},
                             {"out", tvar.domain.label(r.assign[a * r.key_count + k])}});
          }
          break;
        case RuleKind::Stochastic:
          if (r.draws[k]) table.push_back({{"inputs", labels_of(k)}, {"pmf", pmf_to_json(*r.draws[k])}});
          break;
        case RuleKind::Static:
          break;
      }
    }
    j["table"] = std::move(table);
    rules.push_back(std::move(j));
  }
  return json{{"rules", std::move(rules)}};
}

SpecDocument parse_spec_document(const json& doc) {
  if (!doc.is_object()) schema("", "model spec must be a JSON object");
  SpecDocument out;
  out.model = model_spec_from_json(require(doc, "variables", ""), "/variables");
  if (doc.contains("regimes")) {
    const json& regimes = doc["regimes"];
    if (!regimes.is_object()) schema("/regimes", "expected an object name -> regime");
    for (auto it = regimes.begin(); it != regimes.end(); ++it) {
      if (!it.value().is_object()) schema("/regimes/" + it.key(), "expected an object with \"rules\"");
      out.regimes[it.key()] = RegimeSpec{it.key(), it.value()};
    }
  }
  if (doc.contains("classes")) {
    if (!doc["classes"].is_object()) schema("/classes", "expected an object name -> class");
    out.classes = doc["classes"];
  }
  if (doc.contains("meta")) {
    const json& meta = doc["meta"];
    if (!meta.is_object()) schema("/meta", "expected an object");
    out.meta = meta;
    if (meta.contains("mediation_frame")) {
      out.mediation = mediation_frame_from_json(meta["mediation_frame"], "/meta/mediation_frame");
    }
    if (meta.contains("longitudinal_frame")) {
      out.longitudinal = longitudinal_frame_from_json(meta["longitudinal_frame"], "/meta/longitudinal_frame");
    }
  }
  return out;
}

SpecDocument load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::SchemaError, path, "cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, "", std::string("malformed JSON: ") + e.what());
  }
  return parse_spec_document(doc);
}

Model validate_document(const SpecDocument& doc, Arithmetic mode) {
  try {
    return validate_model(doc.model, mode);
  } catch (const Error& e) {
    for (std::size_t i = 0; i < doc.model.variables.size(); ++i) {
      if (doc.model.variables[i].name == e.subject()) {
        throw Error(e.kind(), "/variables/" + std::to_string(i), e.subject() + ": " + e.detail());
      }
    }
    throw;
  }
}

}  // namespace causal_ident
