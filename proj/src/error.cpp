#include "causal_ident/error.hpp"

namespace causal_ident {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CyclicGraph: return "CyclicGraph";
    case ErrorKind::IncompleteTable: return "IncompleteTable";
    case ErrorKind::InvalidTable: return "InvalidTable";
    case ErrorKind::InvalidPMF: return "InvalidPMF";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::MissingNoise: return "MissingNoise";
    case ErrorKind::MissingRandomizer: return "MissingRandomizer";
    case ErrorKind::ZeroMassEvent: return "ZeroMassEvent";
    case ErrorKind::OverlappingSets: return "OverlappingSets";
    case ErrorKind::PositivityViolation: return "PositivityViolation";
    case ErrorKind::GenerationFailed: return "GenerationFailed";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {
std::string compose(ErrorKind kind, const std::string& subject, const std::string& detail) {
  std::string msg = to_string(kind);
  msg += "(" + subject + ")";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}
}  // namespace

Error::Error(ErrorKind kind, std::string subject, const std::string& detail)
    : std::runtime_error(compose(kind, subject, detail)),
      kind_(kind),
      subject_(std::move(subject)),
      detail_(detail) {}

}  // namespace causal_ident
