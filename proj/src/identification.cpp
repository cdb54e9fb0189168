#include "causal_ident/identification.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "causal_ident/counterfactual.hpp"
#include "causal_ident/error.hpp"

namespace causal_ident {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kParameters[] = {
    "gamma_ate",  "gamma_cmn", "gamma_nde",       "gamma_nie",   "gamma_rde",
    "gamma_rie",  "gamma_rde_w", "gamma_mtp", "gamma_mtp_si_g1", "gamma_mtp_si"};
constexpr std::string_view kFunctionals[] = {"psi_cmn", "psi_mediation", "psi_rde", "psi_rde_w", "psi_g",
                                             "extended_g_formula"};

bool is_mtp_id(std::string_view id) { return id.starts_with("gamma_mtp"); }

}  // namespace

bool is_parameter_id(std::string_view id) {
  return std::find(std::begin(kParameters), std::end(kParameters), id) != std::end(kParameters);
}

bool is_functional_id(std::string_view id) {
  return std::find(std::begin(kFunctionals), std::end(kFunctionals), id) != std::end(kFunctionals);
}

Quantity Quantity::parse(std::string_view text) {
  Quantity q;
  std::string current;
  int sign = 1;
  auto flush = [&](char next) {
    if (current.empty()) {
      if (next == '\0' || !q.terms.empty() || sign != 1) {
        throw Error(ErrorKind::InvalidArgument, std::string(text), "empty term in quantity");
      }
      return;
    }
    if (!is_parameter_id(current) && !is_functional_id(current)) {
      throw Error(ErrorKind::InvalidArgument, current,
                  "unknown quantity; expected a gamma_* parameter or a psi_* functional");
    }
    q.terms.push_back({sign, current});
    current.clear();
  };
  for (char c : text) {
    if (c == ' ' || c == '\t') continue;
    if (c == '+' || c == '-') {
      if (current.empty() && q.terms.empty()) {
        sign = c == '-' ? -1 : 1;
        continue;
      }
      flush(c);
      sign = c == '-' ? -1 : 1;
      continue;
    }
    current += c;
  }
  flush('\0');
  return q;
}

std::string Quantity::text() const {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].sign < 0) out += "-";
    else if (i) out += "+";
    out += terms[i].id;
  }
  return out;
}

bool Quantity::only_parameters() const {
  return std::all_of(terms.begin(), terms.end(), [](const Term& t) { return is_parameter_id(t.id); });
}

bool Quantity::only_functionals() const {
  return std::all_of(terms.begin(), terms.end(), [](const Term& t) { return is_functional_id(t.id); });
}

namespace {

const MediationFrame& need_mediation(const EvalContext& ctx, const std::string& id) {
  if (!ctx.mediation) throw Error(ErrorKind::InvalidArgument, id, "quantity needs a mediation frame");
  return *ctx.mediation;
}

const LongitudinalFrame& need_longitudinal(const EvalContext& ctx, const std::string& id) {
  if (!ctx.longitudinal) throw Error(ErrorKind::InvalidArgument, id, "quantity needs a longitudinal frame");
  return *ctx.longitudinal;
}

}  // namespace

template <class S>
S evaluate(const Quantity& q, const Model& model, const EvalContext& ctx) {
  std::optional<JointPmf<S>> law;
  std::optional<MtpParameters<S>> mtp;
  auto observed = [&]() -> const JointPmf<S>& {
    if (!law) law = observed_law<S>(model);
    return *law;
  };
  S total(0);
  for (const auto& term : q.terms) {
    const std::string& id = term.id;
    S v(0);
    if (is_mtp_id(id)) {
      if (!mtp) {
        const auto& frame = need_longitudinal(ctx, id);
        if (!ctx.g1) throw Error(ErrorKind::InvalidArgument, id, "quantity needs a natural-value regime g1");
        mtp = mtp_parameters<S>(model, frame, bind_regime(model, *ctx.g1), ctx.phi);
      }
      v = id == "gamma_mtp" ? mtp->gamma_mtp : id == "gamma_mtp_si_g1" ? mtp->gamma_mtp_si_g1 : mtp->gamma_mtp_si;
    } else if (id == "psi_g" || id == "extended_g_formula") {
      v = psi_g<S>(observed(), need_longitudinal(ctx, id), ctx.phi);
    } else {
      const auto& frame = need_mediation(ctx, id);
      if (id == "gamma_ate") v = gamma_ate<S>(model, frame);
      else if (id == "gamma_cmn") v = gamma_cmn<S>(model, frame);
      else if (id == "gamma_nde") v = gamma_nde<S>(model, frame);
      else if (id == "gamma_nie") v = gamma_nie<S>(model, frame);
      else if (id == "gamma_rde") v = gamma_rde<S>(model, frame);
      else if (id == "gamma_rie") v = gamma_rie<S>(model, frame);
      else if (id == "gamma_rde_w") v = gamma_rde_w<S>(model, frame);
      else if (id == "psi_cmn") v = psi_cmn<S>(observed(), frame);
      else if (id == "psi_mediation") v = psi_mediation<S>(observed(), frame);
      else if (id == "psi_rde") v = psi_rde_contrast<S>(observed(), frame);
      else if (id == "psi_rde_w") v = psi_rde_w_contrast<S>(observed(), frame);
      else throw Error(ErrorKind::InvalidArgument, id, "unknown quantity");
    }
    if (term.sign < 0) total -= v;
    else total += v;
  }
  return total;
}

// --- model classes -------------------------------------------------------------

namespace {

SkeletonVar skel(std::string name, std::vector<std::string> parents, std::size_t noise, std::string role,
                 bool randomized = false, bool observed = true) {
  SkeletonVar v;
  v.name = std::move(name);
  v.parents = std::move(parents);
  v.noise_size = noise;
  v.role = std::move(role);
  v.randomized = randomized;
  v.observed = observed;
  return v;
}

MediationFrame mediation_frame(std::vector<std::string> baseline, std::vector<std::string> post) {
  MediationFrame f;
  f.baseline = std::move(baseline);
  f.treatment = "A";
  f.post_treatment = std::move(post);
  f.mediator = "M";
  f.outcome = "Y";
  return f;
}

LongitudinalFrame two_point_frame() {
  LongitudinalFrame f;
  f.points = {{{"L0"}, "A0"}, {{"L1"}, "A1"}};
  f.outcome = "Y";
  return f;
}

RegimeSpec shift_regime() {
  const json flip = {{"0", "1"}, {"1", "0"}};
  json rules = json::array();
  for (const char* a : {"A0", "A1"}) {
    rules.push_back({{"target", a}, {"kind", "natural"}, {"map", flip}});
  }
  return RegimeSpec{"shift", json{{"rules", rules}}};
}

void set_longitudinal_context(ModelClass& cls) {
  cls.context.longitudinal = two_point_frame();
  cls.context.g1 = shift_regime();
  cls.context.phi = TreatmentMap::map({1, 0}, 2);
  cls.b_regime = shift_regime();
  cls.predicates = {{"positivity", false, 1e-9}, {"B1.2", false, 1e-9}};
}

}  // namespace

std::vector<std::string> builtin_class_names() {
  return {"m1", "m2", "mediation", "figure1", "recanting", "long_observed", "w2"};
}

ModelClass builtin_class(std::string_view name) {
  ModelClass cls;
  cls.name = std::string(name);
  if (name == "m1" || name == "m2") {
    const bool m1 = name == "m1";
    cls.skeleton = {skel("A", {}, 2, "treatment", true),
                    skel("W", m1 ? std::vector<std::string>{"A"} : std::vector<std::string>{}, 4, "post-treatment"),
                    skel("M", {"A", "W"}, 4, "mediator"), skel("Y", {"A", "W", "M"}, 4, "outcome")};
    cls.predicates = {{std::string(name), false, 1e-9}};
    cls.context.mediation = mediation_frame({}, {"W"});
  } else if (name == "recanting") {
    cls.skeleton = {skel("U", {}, 2, "", true, false), skel("A", {}, 2, "treatment", true),
                    skel("W", {"A", "U"}, 4, "post-treatment"), skel("M", {"A", "W"}, 4, "mediator"),
                    skel("Y", {"A", "W", "M", "U"}, 4, "outcome")};
    cls.predicates = {{"m1", false, 1e-9}};
    cls.context.mediation = mediation_frame({}, {"W"});
  } else if (name == "mediation") {
    cls.skeleton = {skel("L", {}, 4, "baseline"), skel("U", {}, 2, "", true, false),
                    skel("A", {"L"}, 4, "treatment"), skel("W", {"A", "L"}, 4, "post-treatment"),
                    skel("M", {"A", "W", "L", "U"}, 4, "mediator"),
                    skel("Y", {"A", "W", "M", "L", "U"}, 4, "outcome")};
    cls.context.mediation = mediation_frame({"L"}, {"W"});
  } else if (name == "figure1") {
    cls.skeleton = {skel("L", {}, 4, "baseline"), skel("A", {"L"}, 4, "treatment"),
                    skel("M", {"A", "L"}, 4, "mediator"), skel("Y", {"A", "M", "L"}, 4, "outcome")};
    cls.predicates = {{"m2", false, 1e-9}};
    cls.context.mediation = mediation_frame({"L"}, {});
  } else if (name == "long_observed") {
    cls.skeleton = {skel("L0", {}, 4, "baseline"), skel("A0", {"L0"}, 4, "treatment"),
                    skel("L1", {"L0", "A0"}, 4, ""), skel("A1", {"L0", "A0", "L1"}, 4, "treatment"),
                    skel("Y", {"L0", "A0", "L1", "A1"}, 4, "outcome")};
    set_longitudinal_context(cls);
  } else if (name == "w2") {
    cls.skeleton = {skel("L0", {}, 4, "baseline"), skel("H", {}, 2, "", true, false),
                    skel("A0", {"L0", "H"}, 4, "treatment"), skel("L1", {"L0", "A0"}, 4, ""),
                    skel("A1", {"L0", "A0", "L1", "H"}, 4, "treatment"),
                    skel("Y", {"L0", "A0", "L1", "A1"}, 4, "outcome")};
    set_longitudinal_context(cls);
  } else {
    throw Error(ErrorKind::InvalidArgument, std::string(name), "unknown model class");
  }
  return cls;
}

namespace {

[[noreturn]] void class_schema(const std::string& pointer, const std::string& detail) {
  throw Error(ErrorKind::SchemaError, pointer, detail);
}

Predicate predicate_from_json(const json& j, const std::string& pointer) {
  Predicate p;
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s.starts_with("!")) {
      p.negate = true;
      s.erase(0, 1);
    }
    p.condition = s;
  } else if (j.is_object() && j.contains("condition") && j["condition"].is_string()) {
    p.condition = j["condition"].get<std::string>();
    if (j.contains("negate")) p.negate = j["negate"].get<bool>();
    if (j.contains("tol")) p.tol = j["tol"].get<double>();
  } else {
    class_schema(pointer, "expected a condition name or {\"condition\", \"negate\", \"tol\"}");
  }
  static const std::vector<std::string> known = {"m1",   "m2",   "A1.1", "A1.2", "A1.3", "A2.1",
                                                 "A2.2", "B1.1", "B1.2", "B1.3", "B1.4", "positivity"};
  if (std::find(known.begin(), known.end(), p.condition) == known.end()) {
    class_schema(pointer, "unknown condition '" + p.condition + "'");
  }
  return p;
}

}  // namespace

ModelClass model_class_from_json(const json& j, std::string name, const SpecDocument& doc,
                                 std::string_view pointer) {
  const std::string base(pointer);
  if (!j.is_object()) class_schema(base, "expected a class object");
  ModelClass cls;
  try {
    if (j.contains("base")) {
      if (!j["base"].is_string()) class_schema(base + "/base", "expected a built-in class name");
      cls = builtin_class(j["base"].get<std::string>());
    }
    cls.name = std::move(name);
    if (!j.contains("base")) {
      cls.context.mediation = doc.mediation;
      cls.context.longitudinal = doc.longitudinal;
    }
    if (j.contains("skeleton")) {
      const json& sk = j["skeleton"];
      if (!sk.is_array() || sk.empty()) class_schema(base + "/skeleton", "expected a non-empty array");
      cls.skeleton.clear();
      for (std::size_t i = 0; i < sk.size(); ++i) {
        const std::string p = base + "/skeleton/" + std::to_string(i);
        const json& v = sk[i];
        if (!v.is_object() || !v.contains("name") || !v["name"].is_string()) class_schema(p, "expected {\"name\", ...}");
        SkeletonVar s;
        s.name = v["name"].get<std::string>();
        s.domain_size = v.value("domain_size", std::size_t{2});
        s.noise_size = v.value("noise_size", std::size_t{4});
        s.observed = v.value("observed", true);
        s.randomized = v.value("randomized", false);
        s.role = v.value("role", std::string{});
        if (v.contains("parents")) s.parents = v["parents"].get<std::vector<std::string>>();
        if (s.domain_size == 0 || s.noise_size == 0) class_schema(p, "domain and noise sizes must be positive");
        cls.skeleton.push_back(std::move(s));
      }
    }
    if (cls.skeleton.empty()) class_schema(base, "class needs a \"skeleton\" or a \"base\"");
    if (j.contains("predicates")) {
      const json& ps = j["predicates"];
      if (!ps.is_array()) class_schema(base + "/predicates", "expected an array");
      cls.predicates.clear();
      for (std::size_t i = 0; i < ps.size(); ++i) {
        cls.predicates.push_back(predicate_from_json(ps[i], base + "/predicates/" + std::to_string(i)));
      }
    }
    if (j.contains("max_attempts")) cls.max_attempts = j["max_attempts"].get<std::size_t>();
    if (j.contains("weight_max")) cls.weight_max = j["weight_max"].get<std::uint32_t>();
    if (cls.weight_max == 0) class_schema(base + "/weight_max", "must be positive");
    if (j.contains("mediation_frame")) {
      cls.context.mediation = mediation_frame_from_json(j["mediation_frame"], base + "/mediation_frame");
    }
    if (j.contains("longitudinal_frame")) {
      cls.context.longitudinal = longitudinal_frame_from_json(j["longitudinal_frame"], base + "/longitudinal_frame");
    }
    auto regime_ref = [&](const char* key) -> RegimeSpec {
      const json& r = j[key];
      if (r.is_string()) {
        auto it = doc.regimes.find(r.get<std::string>());
        if (it == doc.regimes.end()) class_schema(base + "/" + key, "unknown regime '" + r.get<std::string>() + "'");
        return it->second;
      }
      if (r.is_object()) return RegimeSpec{cls.name + "." + key, r};
      class_schema(base + "/" + key, "expected a regime name or a regime object");
    };
    if (j.contains("g1")) cls.context.g1 = regime_ref("g1");
    if (j.contains("b_regime")) cls.b_regime = regime_ref("b_regime");
    if (j.contains("phi")) {
      if (!cls.context.longitudinal) class_schema(base + "/phi", "phi needs a longitudinal frame");
      const std::string& a0 = cls.context.longitudinal->points.front().treatment;
      auto it = std::find_if(cls.skeleton.begin(), cls.skeleton.end(), [&](const SkeletonVar& s) { return s.name == a0; });
      if (it == cls.skeleton.end()) class_schema(base + "/phi", "treatment '" + a0 + "' is not in the skeleton");
      cls.context.phi = treatment_map_from_json(j["phi"], Domain::range(it->domain_size), base + "/phi");
    }
  } catch (const nlohmann::json::exception& e) {
    class_schema(base, std::string("malformed class: ") + e.what());
  }
  return cls;
}

// --- building and sampling ---------------------------------------------------------

namespace {

struct SkeletonShape {
  std::vector<std::size_t> noise;  // effective noise size
  std::vector<std::size_t> rows;   // parent combinations
  std::vector<std::vector<std::size_t>> parents;
};

SkeletonShape shape_of(const ModelClass& cls) {
  SkeletonShape shape;
  for (std::size_t i = 0; i < cls.skeleton.size(); ++i) {
    const auto& v = cls.skeleton[i];
    std::vector<std::size_t> ps;
    std::size_t rows = 1;
    for (const auto& p : v.parents) {
      std::size_t k = 0;
      while (k < i && cls.skeleton[k].name != p) ++k;
      if (k == i) {
        throw Error(ErrorKind::InvalidArgument, v.name, "parent '" + p + "' must be declared earlier in the skeleton");
      }
      ps.push_back(k);
      rows *= cls.skeleton[k].domain_size;
    }
    if (v.randomized && !ps.empty()) {
      throw Error(ErrorKind::InvalidArgument, v.name, "a randomized variable cannot have parents");
    }
    shape.noise.push_back(v.randomized ? v.domain_size : v.noise_size);
    shape.rows.push_back(rows);
    shape.parents.push_back(std::move(ps));
  }
  return shape;
}

Model build_from(const ModelClass& cls, const SkeletonShape& shape, const std::vector<std::vector<Rational>>& pmfs,
                 const std::vector<std::vector<int>>& tables) {
  ModelSpec spec;
  for (std::size_t i = 0; i < cls.skeleton.size(); ++i) {
    const auto& sv = cls.skeleton[i];
    VariableSpec v;
    v.name = sv.name;
    v.domain = Domain::range(sv.domain_size);
    v.parents = sv.parents;
    v.noise = NoiseSpec{"e_" + sv.name, Domain::range(shape.noise[i]), pmfs[i]};
    v.observed = sv.observed;
    v.role = sv.role;
    const std::size_t nn = shape.noise[i];
    for (std::size_t r = 0; r < shape.rows[i]; ++r) {
      std::vector<std::string> parents(sv.parents.size());
      std::size_t rem = r;
      for (std::size_t k = sv.parents.size(); k-- > 0;) {
        const std::size_t d = cls.skeleton[shape.parents[i][k]].domain_size;
        parents[k] = std::to_string(rem % d);
        rem /= d;
      }
      for (std::size_t e = 0; e < nn; ++e) {
        const int out = tables[i][r * nn + e];
        v.table.push_back({parents, std::to_string(e), std::to_string(out)});
      }
    }
    spec.variables.push_back(std::move(v));
  }
  return validate_model(spec, Arithmetic::Float);
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

ModelParameters draw_parameters(const ModelClass& cls, const SkeletonShape& shape, std::mt19937_64& rng) {
  ModelParameters params;
  for (std::size_t i = 0; i < cls.skeleton.size(); ++i) {
    std::vector<std::uint32_t> w(shape.noise[i]);
    for (auto& x : w) x = static_cast<std::uint32_t>(1 + bounded(rng, cls.weight_max));
    std::vector<int> table(shape.rows[i] * shape.noise[i]);
    if (cls.skeleton[i].randomized) {
      for (std::size_t e = 0; e < table.size(); ++e) table[e] = static_cast<int>(e);
    } else {
      for (auto& x : table) x = static_cast<int>(bounded(rng, cls.skeleton[i].domain_size));
    }
    params.weights.push_back(std::move(w));
    params.tables.push_back(std::move(table));
  }
  return params;
}

std::vector<Rational> weights_to_pmf(const std::vector<std::uint32_t>& w) {
  unsigned long total = 0;
  for (auto x : w) total += x;
  std::vector<Rational> pmf;
  for (auto x : w) {
    Rational p(static_cast<unsigned long>(x), total);
    p.canonicalize();
    pmf.push_back(p);
  }
  return pmf;
}

Model build_checked(const ModelClass& cls, const SkeletonShape& shape, const ModelParameters& params) {
  if (params.weights.size() != cls.skeleton.size() || params.tables.size() != cls.skeleton.size()) {
    throw Error(ErrorKind::InvalidArgument, cls.name, "parameter count does not match the skeleton");
  }
  std::vector<std::vector<Rational>> pmfs;
  for (std::size_t i = 0; i < cls.skeleton.size(); ++i) {
    if (params.weights[i].size() != shape.noise[i] || params.tables[i].size() != shape.rows[i] * shape.noise[i]) {
      throw Error(ErrorKind::InvalidArgument, cls.skeleton[i].name, "parameter shape does not match the skeleton");
    }
    for (auto w : params.weights[i]) {
      if (w == 0) throw Error(ErrorKind::InvalidArgument, cls.skeleton[i].name, "noise weights must be positive");
    }
    pmfs.push_back(weights_to_pmf(params.weights[i]));
  }
  return build_from(cls, shape, pmfs, params.tables);
}

Model sample_with(const ModelClass& cls, const SkeletonShape& shape, std::mt19937_64& rng) {
  for (std::size_t attempt = 0; attempt < cls.max_attempts; ++attempt) {
    Model m = build_checked(cls, shape, draw_parameters(cls, shape, rng));
    try {
      if (satisfies<double>(cls, m)) return m;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroMassEvent && e.kind() != ErrorKind::PositivityViolation) throw;
    }
  }
  throw Error(ErrorKind::GenerationFailed, cls.name,
              "no model satisfying the class predicates after " + std::to_string(cls.max_attempts) + " draws");
}

struct PredicateOutcome {
  std::string name;
  bool holds;
  double deviation;
  std::string detail;
};

// Every treatment value has positive probability at every history with mass.
template <class S>
ConditionVerdict treatment_positivity(const Model& model, const LongitudinalFrame& frame) {
  ConditionVerdict v;
  v.name = "positivity";
  const auto law = treatment_law<S>(observed_law<S>(model), frame);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < law.slices.size(); ++t) {
    const auto& slice = law.slices[t];
    for (std::size_t c = 0; c < slice.tables.size(); ++c) {
      if (!slice.tables[c]) continue;
      for (std::size_t a = 0; a < slice.tables[c]->size(); ++a) {
        if (to_double((*slice.tables[c])[a]) > 0) continue;
        if (violations++ == 0) {
          v.detail = "P(" + frame.points[t].treatment + "=" + std::to_string(a) + " | history cell " +
                     std::to_string(c) + ") = 0";
        }
      }
    }
  }
  v.holds = violations == 0;
  v.max_deviation = v.holds ? 0.0 : 1.0;
  if (v.holds) v.detail = "every treatment value has positive probability given each observed history";
  return v;
}

template <class S>
std::vector<PredicateOutcome> predicate_outcomes(const ModelClass& cls, const Model& model) {
  std::vector<PredicateOutcome> out;
  for (const auto& p : cls.predicates) {
    ConditionVerdict verdict;
    verdict.name = p.condition;
    if (p.condition == "m1" || p.condition == "m2" || p.condition.starts_with("A")) {
      if (!cls.context.mediation) {
        throw Error(ErrorKind::InvalidArgument, cls.name, "predicate " + p.condition + " needs a mediation frame");
      }
      const auto report = (p.condition == "m1" || p.condition.starts_with("A1"))
                              ? check_m1<S>(model, *cls.context.mediation, p.tol)
                              : check_m2<S>(model, *cls.context.mediation, p.tol);
      if (p.condition == "m1" || p.condition == "m2") {
        verdict.holds = report.holds;
        for (const auto& c : report.conditions) {
          verdict.max_deviation = std::max(verdict.max_deviation, c.holds ? 0.0 : std::max(c.max_deviation, p.tol));
          if (!c.holds && verdict.detail.empty()) verdict.detail = c.name + ": " + c.detail;
        }
      } else {
        const ConditionVerdict* c = report.find(p.condition);
        if (!c) throw Error(ErrorKind::InvalidArgument, p.condition, "condition not reported");
        verdict = *c;
      }
    } else if (p.condition == "positivity") {
      if (!cls.context.longitudinal) {
        throw Error(ErrorKind::InvalidArgument, cls.name, "predicate positivity needs a longitudinal frame");
      }
      verdict = treatment_positivity<S>(model, *cls.context.longitudinal);
    } else {
      if (!cls.context.longitudinal) {
        throw Error(ErrorKind::InvalidArgument, cls.name, "predicate " + p.condition + " needs a longitudinal frame");
      }
      const auto& spec = cls.b_regime ? cls.b_regime : cls.context.g1;
      const Regime regime = spec ? bind_regime(model, *spec) : Regime{};
      const auto b = check_b<S>(model, *cls.context.longitudinal, regime, p.tol);
      verdict = p.condition == "B1.1" ? b.b11 : p.condition == "B1.2" ? b.b12 : p.condition == "B1.3" ? b.b13 : b.b14;
    }
    const bool holds = verdict.holds != p.negate;
    out.push_back({(p.negate ? "!" : "") + p.condition, holds, holds ? 0.0 : std::max(verdict.max_deviation, p.tol),
                   verdict.detail});
  }
  return out;
}

}  // namespace

Model build_model(const ModelClass& cls, const ModelParameters& params) {
  return build_checked(cls, shape_of(cls), params);
}

template <class S>
bool satisfies(const ModelClass& cls, const Model& model, MembershipReport* report) {
  const auto outcomes = predicate_outcomes<S>(cls, model);
  bool all = true;
  if (report) {
    report->class_name = cls.name;
    report->conditions.clear();
  }
  for (const auto& o : outcomes) {
    all = all && o.holds;
    if (report) {
      ConditionVerdict v;
      v.name = o.name;
      v.holds = o.holds;
      v.max_deviation = o.deviation;
      v.detail = o.detail;
      report->conditions.push_back(std::move(v));
    }
  }
  if (report) report->holds = all;
  return all;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t i) {
  std::uint64_t z = base + (i + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Model sample_model(const ModelClass& cls, std::uint64_t seed) {
  const auto shape = shape_of(cls);
  std::mt19937_64 rng(seed);
  return sample_with(cls, shape, rng);
}

// --- identification ------------------------------------------------------------

namespace {

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CAUSAL_IDENT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs fn(i) for i < n. The exception of the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn fn) {
  const std::size_t workers = worker_count(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

template <class S>
VerifyResult verify_identification(const Quantity& gamma, const Quantity& psi, const ModelClass& cls,
                                   std::size_t n, double tol, std::uint64_t seed) {
  std::vector<double> gaps(n, 0.0);
  std::vector<bool> ok(n, true);
  std::vector<std::optional<Model>> models(n);
  parallel_for(n, [&](std::size_t i) {
    Model model = sample_model(cls, derive_seed(seed, i));
    try {
      const S diff = evaluate<S>(gamma, model, cls.context) - evaluate<S>(psi, model, cls.context);
      gaps[i] = to_double(abs_value(diff));
      ok[i] = within(diff, tol);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroMassEvent) throw;
      throw Error(e.kind(), e.subject(), e.detail() + "; model: " + model_to_json(model).dump());
    }
    models[i] = std::move(model);
  });
  VerifyResult result;
  result.n = n;
  result.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    result.holds_on_sample = result.holds_on_sample && ok[i];
    if (!result.worst_model || gaps[i] > result.max_gap) {
      result.max_gap = gaps[i];
      result.worst_index = i;
      result.worst_model = models[i];
    }
  }
  return result;
}

namespace {

// Rounds a pmf onto the grid with every entry in [clamp, 1-clamp].
std::vector<Rational> quantize(std::vector<double> p, const SearchOptions& opt, bool& clamped) {
  const std::size_t n = p.size();
  if (n == 1) return {Rational(1)};
  auto normalize = [&] {
    double total = 0;
    for (double x : p) total += x;
    for (double& x : p) x /= total;
  };
  normalize();
  for (double& x : p) {
    if (x < opt.clamp) {
      x = opt.clamp;
      clamped = true;
    } else if (x > 1 - opt.clamp) {
      x = 1 - opt.clamp;
      clamped = true;
    }
  }
  normalize();
  const auto grid = static_cast<long>(opt.grid);
  const long lo = static_cast<long>(std::ceil(opt.clamp * static_cast<double>(grid)));
  std::vector<long> q(n);
  long used = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    q[i] = std::max(lo, std::lround(p[i] * static_cast<double>(grid)));
    used += q[i];
  }
  q[n - 1] = grid - used;
  while (q[n - 1] < lo) {
    auto it = std::max_element(q.begin(), q.end() - 1);
    --*it;
    ++q[n - 1];
  }
  std::vector<Rational> out;
  for (long x : q) {
    Rational r(x, grid);
    r.canonicalize();
    out.push_back(r);
  }
  return out;
}

struct Move {
  std::size_t var;
  bool weight;
  std::size_t index;  // noise label or table cell
  int direction;      // weight: +1 / -1; cell: new label
};

std::vector<Move> canonical_moves(const ModelClass& cls, const SkeletonShape& shape) {
  std::vector<Move> moves;
  for (std::size_t v = 0; v < cls.skeleton.size(); ++v) {
    if (shape.noise[v] > 1) {
      for (std::size_t e = 0; e < shape.noise[v]; ++e) {
        moves.push_back({v, true, e, +1});
        moves.push_back({v, true, e, -1});
      }
    }
    if (cls.skeleton[v].randomized) continue;
    const std::size_t cells = shape.rows[v] * shape.noise[v];
    for (std::size_t c = 0; c < cells; ++c) {
      for (std::size_t l = 0; l < cls.skeleton[v].domain_size; ++l) {
        moves.push_back({v, false, c, static_cast<int>(l)});
      }
    }
  }
  return moves;
}

}  // namespace

SearchResult search_maximum(const ModelClass& cls, const std::function<double(const Model&)>& objective,
                            std::size_t budget, std::uint64_t seed, const SearchOptions& options) {
  const auto shape = shape_of(cls);
  const auto moves = canonical_moves(cls, shape);
  std::mt19937_64 rng(seed);
  SearchResult result;
  result.gap = -std::numeric_limits<double>::infinity();
  bool clamped = false;

  auto score = [&](const Model& m) -> std::optional<double> {
    ++result.evaluations;
    try {
      const double v = objective(m);
      if (!std::isfinite(v)) {
        ++result.rejected;
        return std::nullopt;
      }
      return v;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroMassEvent && e.kind() != ErrorKind::PositivityViolation) throw;
      ++result.rejected;
      return std::nullopt;
    }
  };
  auto member = [&](const Model& m) {
    try {
      return satisfies<double>(cls, m);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroMassEvent && e.kind() != ErrorKind::PositivityViolation) throw;
      return false;
    }
  };

  while (result.evaluations < budget) {
    Model current = sample_with(cls, shape, rng);
    auto start = score(current);
    if (!start) continue;
    double value = *start;
    if (value > result.gap) {
      result.gap = value;
      result.best_model = current;
    }
    double step = options.initial_step;
    std::size_t pos = 0;
    std::size_t since_improvement = 0;
    while (result.evaluations < budget && step >= options.min_step) {
      const Move& mv = moves[pos];
      pos = (pos + 1) % moves.size();
      ++since_improvement;
      std::optional<Model> candidate;
      if (mv.weight) {
        std::vector<double> p = current[mv.var].noise_pmf_f;
        p[mv.index] *= mv.direction > 0 ? 1 + step : 1 / (1 + step);
        auto pmf = quantize(std::move(p), options, clamped);
        if (pmf != current[mv.var].noise_pmf) candidate = current.with_noise_pmf(mv.var, std::move(pmf));
      } else if (current[mv.var].table[mv.index] != mv.direction) {
        candidate = current.with_table_cell(mv.var, mv.index, mv.direction);
      }
      if (candidate) {
        auto v = score(*candidate);
        if (v && *v > value + 1e-12) {
          if (member(*candidate)) {
            current = std::move(*candidate);
            value = *v;
            since_improvement = 0;
            if (value > result.gap) {
              result.gap = value;
              result.best_model = current;
            }
          } else {
            ++result.rejected;
          }
        }
      }
      if (since_improvement >= moves.size()) {
        step /= 2;
        since_improvement = 0;
      }
    }
    ++result.restarts;
  }
  if (!result.best_model) {
    result.gap = 0.0;
    result.warnings.push_back("no candidate could be evaluated within the budget");
    return result;
  }
  // Re-validate the witness from its serialized form and re-check membership.
  const Model reloaded = validate_model(result.best_model->to_spec(), Arithmetic::Float);
  if (!member(reloaded)) result.warnings.push_back("best model failed the post-hoc class membership re-check");
  if (clamped) {
    result.warnings.push_back("noise probabilities were clamped to [" + std::to_string(options.clamp) + ", " +
                              std::to_string(1 - options.clamp) + "] during the search");
  }
  return result;
}

SearchResult find_counterexample(const Quantity& gamma, const Quantity& psi, const ModelClass& cls,
                                 std::size_t budget, std::uint64_t seed, const SearchOptions& options) {
  const EvalContext& ctx = cls.context;
  return search_maximum(
      cls,
      [&](const Model& m) { return std::abs(evaluate<double>(gamma, m, ctx) - evaluate<double>(psi, m, ctx)); },
      budget, seed, options);
}

// --- identity slippage ------------------------------------------------------------

namespace {

json search_evidence(const SearchResult& r) {
  json j;
  j["gap"] = r.gap;
  j["evaluations"] = r.evaluations;
  j["restarts"] = r.restarts;
  j["rejected"] = r.rejected;
  j["warnings"] = r.warnings;
  j["witness_model"] = r.best_model ? model_to_json(*r.best_model) : json(nullptr);
  return j;
}

json verify_evidence(const VerifyResult& r, const Quantity& gamma, const Quantity& psi, double tol) {
  json j;
  j["claim"] = gamma.text() + " == " + psi.text();
  j["n"] = r.n;
  j["tol"] = tol;
  j["holds"] = r.holds_on_sample;
  j["max_gap"] = r.max_gap;
  j["worst_index"] = r.worst_index;
  j["seed"] = r.seed;
  return j;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

AuditReport audit_slippage(const ModelClass& m1, const ModelClass& m2, const Quantity& gamma1,
                           const Quantity& gamma2, const Quantity& psi1, const Quantity& psi2,
                           const AuditConfig& config) {
  AuditReport report;
  report.seed = config.seed;
  report.scope_note =
      "Structural preconditions I1-I4 only; whether the two parameters share an interpretation is not checked.";
  const double id_tol = 10 * config.tol;

  {
    AuditCondition c{"I1", false, "", json::object()};
    const std::uint64_t seed = derive_seed(config.seed, 1);
    std::vector<char> inside(config.n, 0);
    parallel_for(config.n, [&](std::size_t i) {
      inside[i] = satisfies<double>(m1, sample_model(m2, derive_seed(seed, i))) ? 1 : 0;
    });
    const auto contained = static_cast<std::size_t>(std::count(inside.begin(), inside.end(), 1));
    ModelClass strict = m1;
    const auto outside = search_maximum(
        strict,
        [&](const Model& m) {
          MembershipReport r;
          if (satisfies<double>(m2, m, &r)) return 0.0;
          double dev = 0;
          for (const auto& v : r.conditions) dev = std::max(dev, v.max_deviation);
          return dev;
        },
        std::min<std::size_t>(config.budget, 200), derive_seed(config.seed, 2));
    bool witness = false;
    if (outside.best_model) {
      witness = satisfies<double>(m1, *outside.best_model) && !satisfies<double>(m2, *outside.best_model);
    }
    c.certified = contained == config.n && witness;
    c.summary = std::to_string(contained) + "/" + std::to_string(config.n) + " sampled " + m2.name +
                " models satisfy " + m1.name + "; " +
                (witness ? "found an " + m1.name + " model outside " + m2.name
                         : "no " + m1.name + " model outside " + m2.name + " found");
    c.evidence["sampled"] = config.n;
    c.evidence["contained"] = contained;
    c.evidence["seed"] = seed;
    c.evidence["strictness_witness"] = search_evidence(outside);
    if (outside.best_model) {
      MembershipReport r;
      satisfies<double>(m2, *outside.best_model, &r);
      c.evidence["strictness_witness"]["membership"] = to_json(r);
    }
    report.conditions.push_back(std::move(c));
  }

  auto identified = [&](const char* name, const Quantity& gamma, const Quantity& psi, const ModelClass& cls,
                        std::uint64_t seed) {
    AuditCondition c{name, false, "", json::object()};
    const auto r = verify_identification<double>(gamma, psi, cls, config.n, id_tol, seed);
    c.certified = r.holds_on_sample;
    c.summary = gamma.text() + " vs " + psi.text() + " on " + std::to_string(r.n) + " " + cls.name +
                " models: max gap " + fmt(r.max_gap) + (r.holds_on_sample ? " <= " : " > ") + fmt(id_tol);
    c.evidence = verify_evidence(r, gamma, psi, id_tol);
    return c;
  };
  report.conditions.push_back(identified("I2", gamma1, psi1, m1, derive_seed(config.seed, 3)));
  report.conditions.push_back(identified("I3", gamma2, psi2, m2, derive_seed(config.seed, 4)));

  {
    AuditCondition c{"I4", false, "", json::object()};
    const std::uint64_t seed = derive_seed(config.seed, 5);
    const auto against_psi2 = find_counterexample(gamma2, psi2, m1, config.budget, seed);
    const bool shared = psi1.text() == psi2.text();
    const auto against_psi1 = shared ? against_psi2 : find_counterexample(gamma2, psi1, m1, config.budget, seed);
    const bool refuted2 = against_psi2.gap >= config.gap_floor;
    const bool refuted1 = against_psi1.gap >= config.gap_floor;
    c.certified = refuted1 && refuted2;
    c.summary = gamma2.text() + " not identified under " + m1.name + ": gap " + fmt(against_psi2.gap) + " vs " +
                psi2.text() + (shared ? "" : ", gap " + fmt(against_psi1.gap) + " vs " + psi1.text()) +
                " (floor " + fmt(config.gap_floor) + ")";
    c.evidence["gap_floor"] = config.gap_floor;
    c.evidence["seed"] = seed;
    c.evidence["budget"] = config.budget;
    c.evidence["against_psi2"] = search_evidence(against_psi2);
    if (shared) c.evidence["against_psi1"] = "identical functional; search shared";
    else c.evidence["against_psi1"] = search_evidence(against_psi1);
    report.conditions.push_back(std::move(c));
  }

  report.all_certified = std::all_of(report.conditions.begin(), report.conditions.end(),
                                     [](const AuditCondition& c) { return c.certified; });
  return report;
}

json to_json(const ConditionVerdict& verdict) {
  json j;
  j["name"] = verdict.name;
  j["holds"] = verdict.holds;
  j["max_deviation"] = verdict.max_deviation;
  j["zero_mass_strata"] = verdict.zero_mass_strata;
  j["detail"] = verdict.detail;
  return j;
}

json to_json(const MembershipReport& report) {
  json j;
  j["class"] = report.class_name;
  j["holds"] = report.holds;
  json conditions = json::array();
  for (const auto& c : report.conditions) conditions.push_back(to_json(c));
  j["conditions"] = std::move(conditions);
  return j;
}

json to_json(const AuditReport& report) {
  json j;
  j["all_certified"] = report.all_certified;
  j["seed"] = report.seed;
  json conditions = json::array();
  for (const auto& c : report.conditions) {
    conditions.push_back({{"name", c.name}, {"certified", c.certified}, {"summary", c.summary}, {"evidence", c.evidence}});
  }
  j["conditions"] = std::move(conditions);
  j["scope_note"] = report.scope_note;
  return j;
}

#define CAUSAL_IDENT_INSTANTIATE(S)                                                                  \
  template S evaluate<S>(const Quantity&, const Model&, const EvalContext&);                        \
  template bool satisfies<S>(const ModelClass&, const Model&, MembershipReport*);                   \
  template VerifyResult verify_identification<S>(const Quantity&, const Quantity&, const ModelClass&, \
                                                 std::size_t, double, std::uint64_t);

CAUSAL_IDENT_INSTANTIATE(double)
CAUSAL_IDENT_INSTANTIATE(Rational)

#undef CAUSAL_IDENT_INSTANTIATE

}  // namespace causal_ident
