#pragma once

// JSON model-spec documents: {variables, regimes, classes, meta}.
// Schema problems raise Error(SchemaError) whose subject is a JSON pointer.

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "causal_ident/longitudinal.hpp"
#include "causal_ident/mediation.hpp"
#include "causal_ident/model.hpp"
#include "causal_ident/regime.hpp"

namespace causal_ident {

/// Model-independent regime description, bound to a concrete model on use.
struct RegimeSpec {
  std::string name;
  nlohmann::ordered_json body;  // {"rules": [...]}
};

struct SpecDocument {
  ModelSpec model;
  std::map<std::string, RegimeSpec> regimes;
  nlohmann::ordered_json classes = nlohmann::ordered_json::object();
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  std::optional<MediationFrame> mediation;
  std::optional<LongitudinalFrame> longitudinal;
};

SpecDocument parse_spec_document(const nlohmann::ordered_json& doc);
SpecDocument load_spec_file(const std::string& path);

/// Validates the model, rewriting variable-level errors into JSON-pointer
/// form ("/variables/<i>").
Model validate_document(const SpecDocument& doc, Arithmetic mode);

ModelSpec model_spec_from_json(const nlohmann::ordered_json& variables, std::string_view pointer);
nlohmann::ordered_json model_to_json(const Model& model);
nlohmann::ordered_json model_spec_to_json(const ModelSpec& spec);

Regime bind_regime(const Model& model, const RegimeSpec& spec);
nlohmann::ordered_json regime_to_json(const Model& model, const Regime& regime);

MediationFrame mediation_frame_from_json(const nlohmann::ordered_json& j, std::string_view pointer);
nlohmann::ordered_json to_json(const MediationFrame& frame);
LongitudinalFrame longitudinal_frame_from_json(const nlohmann::ordered_json& j,
                                               std::string_view pointer);
nlohmann::ordered_json to_json(const LongitudinalFrame& frame);

/// phi description: "identity", {"map": {"0":"1",...}}, or {"kernel": [[...],...]}.
TreatmentMap treatment_map_from_json(const nlohmann::ordered_json& j, const Domain& treatment,
                                     std::string_view pointer);

/// Pmf entry: number, or string "p/q" / decimal.
Rational probability_from_json(const nlohmann::ordered_json& j, std::string_view pointer);
nlohmann::ordered_json probability_to_json(const Rational& p);

}  // namespace causal_ident
