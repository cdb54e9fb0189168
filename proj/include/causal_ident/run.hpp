#pragma once

// Command dispatch behind the C API. A request is a JSON object
// {"verb", "spec", "argv", "options"}; the result is a RunRecord document.

#include <string>

#include <nlohmann/json.hpp>

#include "causal_ident/model.hpp"
#include "causal_ident/spec_io.hpp"

namespace causal_ident {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitRefuted = 1, kExitInput = 2, kExitPositivity = 3 };

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::ordered_json record;
};

/// Never throws for model or request problems; they become exit codes with
/// an "error" entry in the record.
RunOutcome run_request(const SpecDocument& doc, const Model& model, const nlohmann::ordered_json& request);

/// Record for a failure that happened before a model was available.
nlohmann::ordered_json error_record(const nlohmann::ordered_json& request, int exit_code, const std::string& kind,
                                    const std::string& subject, const std::string& detail);

/// Aligned plain-text rendering; wall time is shown only here.
std::string render_human(const nlohmann::ordered_json& record, double wall_seconds);

/// Single JSON document with stable key order.
std::string render_machine(const nlohmann::ordered_json& record);

}  // namespace causal_ident
