#include <doctest.h>

#include "causal_ident/error.hpp"
#include "causal_ident/identification.hpp"
#include "helpers.hpp"
#include "oracle.hpp"
#include "recanting_family.hpp"

using namespace causal_ident;
using json = nlohmann::ordered_json;

TEST_SUITE("identification") {

TEST_CASE("quantities parse signed sums of known identifiers") {
  const auto q = Quantity::parse("gamma_rde + gamma_rie");
  REQUIRE(q.terms.size() == 2);
  CHECK(q.text() == "gamma_rde+gamma_rie");
  CHECK(q.only_parameters());
  CHECK(Quantity::parse("-psi_rde_w").text() == "-psi_rde_w");
  CHECK(Quantity::parse("psi_g").only_functionals());
  CHECK_THROWS_AS(Quantity::parse("gamma_bogus"), Error);
  CHECK_THROWS_AS(Quantity::parse("gamma_nde+"), Error);
  CHECK(is_parameter_id("gamma_mtp_si_g1"));
  CHECK(is_functional_id("extended_g_formula"));
}

TEST_CASE("evaluate needs the frame its identifiers refer to") {
  const ModelClass cls = builtin_class("m1");
  const Model m = sample_model(cls, 1);
  EvalContext empty;
  CHECK_THROWS_AS(evaluate<double>(Quantity::parse("gamma_nde"), m, empty), Error);
  CHECK_THROWS_AS(evaluate<double>(Quantity::parse("psi_g"), m, cls.context), Error);
  const double v = evaluate<double>(Quantity::parse("gamma_nde+gamma_nie-gamma_ate"), m, cls.context);
  CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("sampling is deterministic and respects class predicates") {
  for (const auto& name : builtin_class_names()) {
    const ModelClass cls = builtin_class(name);
    const Model a = sample_model(cls, 42), b = sample_model(cls, 42);
    CHECK(model_to_json(a).dump() == model_to_json(b).dump());
    CHECK(satisfies<double>(cls, a));
  }
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("an unsatisfiable class fails generation") {
  ModelClass cls = builtin_class("m2");
  cls.predicates.push_back({"m1", true, 1e-9});
  cls.max_attempts = 5;
  try {
    sample_model(cls, 1);
    FAIL("expected GenerationFailed");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GenerationFailed);
  }
}

TEST_CASE("build_model checks parameter shapes") {
  const ModelClass cls = builtin_class("m1");
  ModelParameters params;
  CHECK_THROWS_AS(build_model(cls, params), Error);
}

TEST_CASE("identification holds where it should and fails where it should not") {
  const auto nde = Quantity::parse("gamma_nde"), rdew = Quantity::parse("psi_rde_w");
  const auto m2 = verify_identification<double>(nde, rdew, builtin_class("m2"), 30, 1e-9, 5);
  CHECK(m2.holds_on_sample);
  CHECK(m2.max_gap < 1e-9);
  const auto m1 = verify_identification<double>(nde, rdew, builtin_class("m1"), 30, 1e-9, 5);
  CHECK_FALSE(m1.holds_on_sample);
  REQUIRE(m1.worst_model.has_value());
  const auto& ctx = builtin_class("m1").context;
  const double gap = std::abs(evaluate<double>(nde, *m1.worst_model, ctx) - evaluate<double>(rdew, *m1.worst_model, ctx));
  CHECK(std::abs(gap - m1.max_gap) < 1e-12);
}

TEST_CASE("verification is monotone in evidence") {
  const auto nde = Quantity::parse("gamma_nde"), rdew = Quantity::parse("psi_rde_w");
  const ModelClass cls = builtin_class("m1");
  const auto small = verify_identification<double>(nde, rdew, cls, 10, 1e-9, 3);
  const auto large = verify_identification<double>(nde, rdew, cls, 20, 1e-9, 3);
  CHECK(large.max_gap >= small.max_gap);
  if (!small.holds_on_sample) CHECK_FALSE(large.holds_on_sample);
}

TEST_CASE("counterexample search: deterministic, sound and re-checked") {
  const ModelClass cls = builtin_class("m1");
  const auto gamma = Quantity::parse("gamma_nde"), psi = Quantity::parse("psi_rde_w");
  const auto a = find_counterexample(gamma, psi, cls, 1500, 9);
  const auto b = find_counterexample(gamma, psi, cls, 1500, 9);
  REQUIRE(a.best_model.has_value());
  CHECK(a.gap == b.gap);
  CHECK(model_to_json(*a.best_model).dump() == model_to_json(*b.best_model).dump());
  CHECK(a.evaluations <= 1500);
  CHECK(satisfies<double>(cls, *a.best_model));

  // The gap is reproducible from the serialized witness by the oracle.
  const Model w = validate_model(model_spec_from_json(model_to_json(*a.best_model)["variables"], "/variables"));
  const oracle::Mediation o(w, {}, {"W"});
  CHECK(std::abs(std::abs(o.nde() - o.psi_rde_w()) - a.gap) < 1e-12);
  for (const auto& v : w.variables()) {
    for (double p : v.noise_pmf_f) {
      if (v.noise_pmf_f.size() > 1) CHECK(p >= 1e-4 - 1e-15);
    }
  }
}

TEST_CASE("identified pairs leave nothing to find") {
  const auto r = find_counterexample(Quantity::parse("gamma_rde_w"), Quantity::parse("psi_rde_w"),
                                     builtin_class("m1"), 300, 2);
  CHECK(r.gap < 1e-9);
}

TEST_CASE("grid oracle over the recanting family") {
  const auto nde_gap = family::maximise([](const oracle::Mediation& o) { return std::abs(o.nde() - o.psi_rde_w()); });
  CHECK(nde_gap.gap >= 0.05);
  const auto decomposition = family::maximise([](const oracle::Mediation& o) { return std::abs(o.rde() + o.rie() - o.ate()); });
  CHECK(decomposition.gap >= 0.02);
  // The maximisers lie in M1.
  for (const auto& pt : {nde_gap.at, decomposition.at}) {
    const Model m = family::build(pt);
    CHECK(check_m1<Rational>(m, *builtin_class("m1").context.mediation, 1e-12).holds);
  }
}

TEST_CASE("audit: degenerate configurations are flagged") {
  AuditConfig config;
  config.n = 5;
  config.budget = 200;
  const ModelClass m1 = builtin_class("m1");
  const auto nde = Quantity::parse("gamma_nde"), rdew = Quantity::parse("gamma_rde_w");
  const auto psi = Quantity::parse("psi_rde_w");

  const auto same_class = audit_slippage(m1, m1, rdew, nde, psi, psi, config);
  CHECK_FALSE(same_class.conditions[0].certified);
  CHECK_FALSE(same_class.all_certified);

  const auto same_gamma = audit_slippage(m1, builtin_class("m2"), rdew, rdew, psi, psi, config);
  CHECK(same_gamma.conditions[3].name == "I4");
  CHECK_FALSE(same_gamma.conditions[3].certified);
  CHECK(same_gamma.scope_note.find("not checked") != std::string::npos);

  const json j = to_json(same_gamma);
  CHECK(j["conditions"].size() == 4);
  CHECK(j["conditions"][0]["name"] == "I1");
}

TEST_CASE("classes from JSON extend the built-ins") {
  const auto doc = load_doc("w1");
  const json spec = {{"base", "m1"}, {"predicates", {"m1", "!A2.1"}}, {"max_attempts", 2000}};
  const ModelClass cls = model_class_from_json(spec, "strict", doc, "/classes/strict");
  CHECK(cls.predicates.size() == 2);
  CHECK(cls.predicates[1].negate);
  const Model m = sample_model(cls, 3);
  MembershipReport r;
  CHECK(satisfies<double>(cls, m, &r));
  CHECK(r.conditions.size() == 2);
  CHECK_THROWS_AS(model_class_from_json(json{{"predicates", {"m9"}}, {"base", "m1"}}, "x", doc, "/classes/x"), Error);
  CHECK_THROWS_AS(model_class_from_json(json::object(), "x", doc, "/classes/x"), Error);
}

TEST_CASE("treatment positivity predicate on the longitudinal classes") {
  const auto doc = load_doc("w2");
  const Model w2 = validate_document(doc, Arithmetic::Float);
  ModelClass cls = builtin_class("w2");
  MembershipReport r;
  CHECK(satisfies<double>(cls, w2, &r));
  CHECK(r.find("positivity")->holds);
  cls.predicates = {{"positivity", true, 1e-9}};
  CHECK_FALSE(satisfies<double>(cls, sample_model(builtin_class("long_observed"), 5)));
}

}  // TEST_SUITE
