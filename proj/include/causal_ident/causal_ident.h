#ifndef CAUSAL_IDENT_H
#define CAUSAL_IDENT_H

/* C interface to the causal_ident engine. Strings returned through char**
 * out-parameters are heap-allocated and released with ci_string_free. */

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CI_API __declspec(dllexport)
#else
#define CI_API __attribute__((visibility("default")))
#endif

typedef struct ci_model ci_model;

typedef enum ci_status {
  CI_OK = 0,
  CI_REFUTED = 1,
  CI_INPUT_ERROR = 2,
  CI_ZERO_MASS = 3,
  CI_INTERNAL = 4
} ci_status;

CI_API const char* ci_version(void);

/* Parse and validate a model-spec document. On failure *diagnostics (if
 * non-null) receives a JSON object {kind, subject, detail}; subject is a
 * JSON pointer for schema problems. */
CI_API ci_status ci_model_load_file(const char* path, ci_model** out, char** diagnostics);
CI_API ci_status ci_model_load_string(const char* json, ci_model** out, char** diagnostics);
CI_API void ci_model_free(ci_model* model);

/* Number of variables in a loaded model, or 0 for a null handle. */
CI_API unsigned ci_model_variable_count(const ci_model* model);

/* Runs one request {"verb", "spec", "argv", "options"} and writes the run
 * record (JSON) to *result_json. The return value is the run's exit code. */
CI_API ci_status ci_run(const ci_model* model, const char* request_json, char** result_json);

/* Loads request.spec and runs the request; load failures become error
 * records with exit code CI_INPUT_ERROR. */
CI_API ci_status ci_run_file(const char* request_json, char** result_json);

/* Renders a run record as aligned text. */
CI_API ci_status ci_render_human(const char* record_json, double wall_seconds, char** text);

CI_API void ci_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
