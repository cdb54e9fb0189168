#include <doctest.h>

#include "causal_ident/run.hpp"
#include "helpers.hpp"

using namespace causal_ident;
using json = nlohmann::ordered_json;

namespace {

RunOutcome run(const std::string& spec, const json& request) {
  const auto doc = load_doc(spec);
  const Model model = validate_document(doc, Arithmetic::Float);
  json r = request;
  r["spec"] = model_path(spec);
  return run_request(doc, model, r);
}

}  // namespace

TEST_SUITE("run") {

TEST_CASE("eval reports the W1 natural direct effect") {
  const auto out = run("w1", {{"verb", "eval"}, {"options", {{"param", "gamma_nde"}}}});
  CHECK(out.exit_code == kExitOk);
  CHECK(out.record["payload"]["values"][0]["value"] == -0.5);
  CHECK(out.record["status"] == "ok");
  const auto exact = run("w1", {{"verb", "eval"}, {"options", {{"param", "gamma_nie"}, {"mode", "rational"}}}});
  CHECK(exact.record["payload"]["values"][0]["exact"] == "1/2");
}

TEST_CASE("unknown verbs and options are input errors") {
  CHECK(run("w1", {{"verb", "frobnicate"}}).exit_code == kExitInput);
  const auto bad = run("w1", {{"verb", "eval"}, {"options", {{"bogus", 1}}}});
  CHECK(bad.exit_code == kExitInput);
  CHECK(bad.record["error"]["subject"] == "--bogus");
  const auto unknown = run("w1", {{"verb", "eval"}, {"options", {{"param", "gamma_xyz"}}}});
  CHECK(unknown.exit_code == kExitInput);
  CHECK(unknown.record["error"]["kind"] == "InvalidArgument");
  const auto cls = run("w1", {{"verb", "check"}, {"options", {{"class", "nope"}}}});
  CHECK(cls.exit_code == kExitInput);
  CHECK(cls.record["error"]["detail"].get<std::string>().find("m1") != std::string::npos);
}

TEST_CASE("positivity failures map to their own exit code") {
  const auto out = run("no_overlap", {{"verb", "eval"}, {"options", {{"psi", "psi_mediation"}}}});
  CHECK(out.exit_code == kExitPositivity);
  CHECK(out.record["error"]["kind"] == "ZeroMassEvent");
}

TEST_CASE("check exits 1 when membership is refuted") {
  CHECK(run("w1", {{"verb", "check"}, {"options", {{"class", "m2"}}}}).exit_code == kExitRefuted);
  CHECK(run("w1", {{"verb", "check"}, {"options", {{"class", "m1"}}}}).exit_code == kExitOk);
}

TEST_CASE("machine output is byte-identical across runs") {
  const json req = {{"verb", "counterexample"},
                    {"options", {{"gamma", "gamma_nde"}, {"psi", "psi_rde_w"}, {"class", "m1"}, {"budget", 200}}}};
  const auto a = render_machine(run("w1", req).record);
  const auto b = render_machine(run("w1", req).record);
  CHECK(a == b);
  CHECK(a.find("wall") == std::string::npos);
}

TEST_CASE("human output: header, warnings and evidence pointers") {
  const auto out = run("w1", {{"verb", "audit"},
                              {"options", {{"class", json::array({"m1", "m2"})},
                                           {"gamma", json::array({"gamma_rde_w", "gamma_nde"})},
                                           {"psi", "psi_rde_w"},
                                           {"n", 5},
                                           {"budget", 300}}}});
  const std::string text = render_human(out.record, 1.25);
  CHECK(text.find("wall time 1.250 s") != std::string::npos);
  CHECK(text.find("version   0.1.0") != std::string::npos);
  for (const char* name : {"I1", "I2", "I3", "I4"}) CHECK(text.find(name) != std::string::npos);
  CHECK(text.find("see /payload/") != std::string::npos);
  CHECK(text.find("in --output json") != std::string::npos);
  CHECK(text.find("warnings") != std::string::npos);

  json record = out.record;
  record["warnings"] = json::array({"clamped 3 probabilities"});
  CHECK(render_human(record, 0).find("  - clamped 3 probabilities") != std::string::npos);
}

TEST_CASE("report summarises both frames") {
  const auto med = run("figure1", {{"verb", "report"}});
  CHECK(med.exit_code == kExitOk);
  CHECK(med.record["payload"].contains("mediation"));
  const auto lon = run("w2", {{"verb", "report"}});
  CHECK(lon.exit_code == kExitOk);
  CHECK(lon.record["payload"].contains("longitudinal"));
}

TEST_CASE("error records carry the request echo") {
  const json req = {{"verb", "eval"}, {"spec", "x.json"}, {"argv", json::array({"eval", "x.json"})}};
  const json r = error_record(req, kExitInput, "SchemaError", "/variables", "missing");
  CHECK(r["command"]["argv"].size() == 2);
  CHECK(r["exit_code"] == 2);
  CHECK(r["payload"].is_null());
}

}  // TEST_SUITE
