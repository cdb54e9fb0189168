#include <cstdio>
#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "causal_ident/causal_ident.h"

using json = nlohmann::json;

namespace {

int failures = 0;

void check(bool ok, const char* what) {
  if (!ok) {
    std::printf("FAIL %s\n", what);
    ++failures;
  }
}

std::string model_path(const char* name) { return std::string(CAUSAL_IDENT_MODELS) + "/" + name + ".json"; }

}  // namespace

int main() {
  check(std::strcmp(ci_version(), "0.1.0") == 0, "version");

  ci_model* model = nullptr;
  char* diag = nullptr;
  check(ci_model_load_file(model_path("w1").c_str(), &model, &diag) == CI_OK, "load w1");
  check(model != nullptr && diag == nullptr, "handle set without diagnostics");
  check(ci_model_variable_count(model) == 5, "variable count");
  check(ci_model_variable_count(nullptr) == 0, "null handle count");

  char* result = nullptr;
  const char* request = R"({"verb":"eval","options":{"param":"gamma_nde"}})";
  check(ci_run(model, request, &result) == CI_OK, "run eval");
  const json r = json::parse(result);
  check(r["payload"]["values"][0]["value"] == -0.5, "eval value");

  char* text = nullptr;
  check(ci_render_human(result, 0.5, &text) == CI_OK, "render");
  check(std::string(text).find("gamma_nde") != std::string::npos, "rendered quantity");
  ci_string_free(text);
  ci_string_free(result);

  check(ci_run(model, R"({"verb":"check","options":{"class":"m2"}})", &result) == CI_REFUTED, "check m2 refuted");
  ci_string_free(result);
  check(ci_run(model, "not json", &result) == CI_INPUT_ERROR, "bad request json");
  ci_string_free(result);
  ci_model_free(model);

  model = nullptr;
  check(ci_model_load_file(model_path("malformed_pmf").c_str(), &model, &diag) == CI_INPUT_ERROR, "malformed");
  check(model == nullptr, "no handle on failure");
  check(diag != nullptr && json::parse(diag)["subject"] == "/variables/3", "diagnostic pointer");
  ci_string_free(diag);

  diag = nullptr;
  check(ci_model_load_string("{\"variables\": 3}", &model, &diag) == CI_INPUT_ERROR, "bad variables");
  ci_string_free(diag);
  check(ci_model_load_file("/nonexistent.json", &model, &diag) == CI_INPUT_ERROR, "missing file");
  ci_string_free(diag);

  const std::string file_request =
      json{{"verb", "eval"}, {"spec", model_path("no_overlap")}, {"options", {{"psi", "psi_mediation"}}}}.dump();
  check(ci_run_file(file_request.c_str(), &result) == CI_ZERO_MASS, "run_file zero mass");
  check(json::parse(result)["error"]["kind"] == "ZeroMassEvent", "zero mass kind");
  ci_string_free(result);

  std::printf("%s (%d failures)\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
