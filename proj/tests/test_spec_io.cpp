#include <doctest.h>

#include <fstream>

#include "causal_ident/error.hpp"
#include "causal_ident/spec_io.hpp"
#include "helpers.hpp"

using namespace causal_ident;
using json = nlohmann::ordered_json;

namespace {

std::string pointer_of(const json& doc) {
  try {
    const auto d = parse_spec_document(doc);
    validate_document(d, Arithmetic::Float);
    for (const auto& [name, r] : d.regimes) bind_regime(validate_document(d, Arithmetic::Float), r);
  } catch (const Error& e) {
    return e.subject();
  }
  return "<none>";
}

json w1_json() {
  std::ifstream in(model_path("w1"));
  return json::parse(in);
}

}  // namespace

TEST_SUITE("spec_io") {

TEST_CASE("documents round-trip through JSON") {
  const Model m = load_model("longitudinal");
  const json j = model_to_json(m);
  const Model back = validate_model(model_spec_from_json(j["variables"], "/variables"));
  CHECK(model_to_json(back).dump() == j.dump());
  const auto doc = load_doc("longitudinal");
  for (const auto& [name, spec] : doc.regimes) {
    const Regime r = bind_regime(m, spec);
    const Regime again = bind_regime(m, RegimeSpec{name, regime_to_json(m, r)});
    CHECK(r.same_rules(again));
  }
  CHECK(to_json(*doc.longitudinal).dump() ==
        to_json(longitudinal_frame_from_json(to_json(*doc.longitudinal), "")).dump());
}

TEST_CASE("sampled witnesses survive serialization exactly") {
  const Model m = draw("m1", 11);
  const Model back = validate_model(model_spec_from_json(model_to_json(m)["variables"], "/variables"), Arithmetic::Rational);
  for (std::size_t v = 0; v < m.size(); ++v) CHECK(back[v].noise_pmf == m[v].noise_pmf);
}

TEST_CASE("probabilities accept fractions, decimals and numbers") {
  CHECK(probability_from_json("1/3", "") == Rational(1, 3));
  CHECK(probability_from_json("0.1", "") == Rational(1, 10));
  CHECK(probability_from_json(1, "") == 1);
  CHECK(probability_from_json(0.25, "") == Rational(1, 4));
  CHECK_THROWS_AS(probability_from_json("x", "/p"), Error);
  CHECK(probability_to_json(Rational(2, 6)) == "1/3");
}

TEST_CASE("schema problems carry JSON pointers") {
  json doc = w1_json();
  CHECK(pointer_of(doc) == "<none>");

  json missing = doc;
  missing.erase("variables");
  CHECK(pointer_of(missing) == "/variables");

  json bad_pmf = doc;
  bad_pmf["variables"][3]["noise"]["pmf"] = {"3/4", "1/5"};
  CHECK(pointer_of(bad_pmf) == "/variables/3");

  json bad_parent = doc;
  bad_parent["variables"][2]["parents"] = {"A", "Q"};
  CHECK(pointer_of(bad_parent).starts_with("/variables/2"));

  json bad_label = doc;
  bad_label["variables"][4]["table"][0]["out"] = "7";
  CHECK(pointer_of(bad_label).starts_with("/variables/4"));

  json bad_regime = doc;
  bad_regime["regimes"]["treat"]["rules"][0]["target"] = "Q";
  CHECK(pointer_of(bad_regime) == "/regimes/treat/rules/0/target");

  json bad_frame = doc;
  bad_frame["meta"]["mediation_frame"].erase("mediator");
  CHECK(pointer_of(bad_frame).starts_with("/meta/mediation_frame"));
}

TEST_CASE("treatment maps: identity, push-forward and kernels") {
  const Domain d = Domain::binary();
  const auto id = treatment_map_from_json("identity", d, "");
  CHECK(id.apply(std::vector<Rational>{Rational(1, 4), Rational(3, 4)})[1] == Rational(3, 4));
  const auto f = treatment_map_from_json(json{{"map", {{"0", "1"}, {"1", "0"}}}}, d, "");
  CHECK(f.apply(std::vector<Rational>{Rational(1, 4), Rational(3, 4)})[1] == Rational(1, 4));
  const auto k = treatment_map_from_json(json{{"kernel", json::array({json::array({"1/2", "1/2"}), json::array({"0", "1"})})}}, d, "");
  CHECK(k.apply(std::vector<Rational>{Rational(1, 2), Rational(1, 2)})[1] == Rational(3, 4));
  CHECK_THROWS_AS(treatment_map_from_json(json{{"kernel", json::array({json::array({"1/2", "1/3"}), json::array({"0", "1"})})}}, d, "/phi"), Error);
}

}  // TEST_SUITE
