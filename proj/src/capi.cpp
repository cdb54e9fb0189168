#include "causal_ident/causal_ident.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "causal_ident/error.hpp"
#include "causal_ident/run.hpp"
#include "causal_ident/spec_io.hpp"

using causal_ident::Error;
using json = nlohmann::ordered_json;

struct ci_model {
  causal_ident::SpecDocument doc;
  causal_ident::Model model;
};

namespace {

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** slot, const std::string& s) {
  if (slot) *slot = duplicate(s);
}

json diagnostic(const std::string& kind, const std::string& subject, const std::string& detail) {
  return json{{"kind", kind}, {"subject", subject}, {"detail", detail}};
}

ci_status load(const causal_ident::SpecDocument& doc, ci_model** out) {
  auto model = causal_ident::validate_document(doc, causal_ident::Arithmetic::Float);
  *out = new ci_model{doc, std::move(model)};
  return CI_OK;
}

template <class Fn>
ci_status guarded_load(ci_model** out, char** diagnostics, Fn parse) {
  if (diagnostics) *diagnostics = nullptr;
  if (!out) return CI_INPUT_ERROR;
  *out = nullptr;
  try {
    return load(parse(), out);
  } catch (const Error& e) {
    put(diagnostics, diagnostic(causal_ident::to_string(e.kind()), e.subject(), e.detail()).dump());
    return e.is_positivity() ? CI_ZERO_MASS : CI_INPUT_ERROR;
  } catch (const std::bad_alloc&) {
    put(diagnostics, diagnostic("InternalError", "", "out of memory").dump());
    return CI_INTERNAL;
  } catch (const std::exception& e) {
    put(diagnostics, diagnostic("SchemaError", "", e.what()).dump());
    return CI_INPUT_ERROR;
  }
}

}  // namespace

extern "C" {

const char* ci_version(void) { return causal_ident::kVersion; }

ci_status ci_model_load_file(const char* path, ci_model** out, char** diagnostics) {
  return guarded_load(out, diagnostics, [&] {
    if (!path) throw Error(causal_ident::ErrorKind::InvalidArgument, "path", "null path");
    return causal_ident::load_spec_file(path);
  });
}

ci_status ci_model_load_string(const char* text, ci_model** out, char** diagnostics) {
  return guarded_load(out, diagnostics, [&] {
    if (!text) throw Error(causal_ident::ErrorKind::InvalidArgument, "json", "null document");
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(causal_ident::ErrorKind::SchemaError, "", std::string("malformed JSON: ") + e.what());
    }
    return causal_ident::parse_spec_document(doc);
  });
}

void ci_model_free(ci_model* model) { delete model; }

unsigned ci_model_variable_count(const ci_model* model) {
  return model ? static_cast<unsigned>(model->model.size()) : 0u;
}

ci_status ci_run(const ci_model* model, const char* request_json, char** result_json) {
  if (result_json) *result_json = nullptr;
  if (!model || !request_json || !result_json) return CI_INPUT_ERROR;
  try {
    json request;
    try {
      request = json::parse(request_json);
    } catch (const json::parse_error& e) {
      put(result_json, causal_ident::render_machine(causal_ident::error_record(
                           json::object(), CI_INPUT_ERROR, "SchemaError", "request", e.what())));
      return CI_INPUT_ERROR;
    }
    auto outcome = causal_ident::run_request(model->doc, model->model, request);
    put(result_json, causal_ident::render_machine(outcome.record));
    return static_cast<ci_status>(outcome.exit_code);
  } catch (...) {
    return CI_INTERNAL;
  }
}

ci_status ci_run_file(const char* request_json, char** result_json) {
  if (result_json) *result_json = nullptr;
  if (!request_json || !result_json) return CI_INPUT_ERROR;
  try {
    json request;
    try {
      request = json::parse(request_json);
    } catch (const json::parse_error& e) {
      put(result_json, causal_ident::render_machine(causal_ident::error_record(
                           json::object(), CI_INPUT_ERROR, "SchemaError", "request", e.what())));
      return CI_INPUT_ERROR;
    }
    const std::string path = request.value("spec", std::string{});
    ci_model* model = nullptr;
    char* diag = nullptr;
    const ci_status loaded = ci_model_load_file(path.c_str(), &model, &diag);
    if (loaded != CI_OK) {
      json d = diag ? json::parse(diag) : diagnostic("InternalError", "", "load failed");
      ci_string_free(diag);
      put(result_json, causal_ident::render_machine(causal_ident::error_record(
                           request, CI_INPUT_ERROR, d["kind"], d["subject"], d["detail"])));
      return CI_INPUT_ERROR;
    }
    const std::string req = request.dump();
    const ci_status status = ci_run(model, req.c_str(), result_json);
    ci_model_free(model);
    return status;
  } catch (...) {
    return CI_INTERNAL;
  }
}

ci_status ci_render_human(const char* record_json, double wall_seconds, char** text) {
  if (text) *text = nullptr;
  if (!record_json || !text) return CI_INPUT_ERROR;
  try {
    put(text, causal_ident::render_human(json::parse(record_json), wall_seconds));
    return CI_OK;
  } catch (const json::exception&) {
    return CI_INPUT_ERROR;
  } catch (...) {
    return CI_INTERNAL;
  }
}

void ci_string_free(char* s) { std::free(s); }

}  // extern "C"
