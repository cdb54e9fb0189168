#pragma once

#include <string>

#include "causal_ident/identification.hpp"
#include "causal_ident/spec_io.hpp"

inline std::string model_path(const std::string& name) {
  return std::string(CAUSAL_IDENT_MODELS) + "/" + name + ".json";
}

inline causal_ident::SpecDocument load_doc(const std::string& name) {
  return causal_ident::load_spec_file(model_path(name));
}

inline causal_ident::Model load_model(const std::string& name) {
  return causal_ident::validate_document(load_doc(name), causal_ident::Arithmetic::Float);
}

// Reference models drawn from the built-in classes.
inline causal_ident::Model draw(const std::string& cls, std::uint64_t i, std::uint64_t base = 99) {
  return causal_ident::sample_model(causal_ident::builtin_class(cls), causal_ident::derive_seed(base, i));
}
