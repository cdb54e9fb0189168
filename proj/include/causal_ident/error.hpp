#pragma once

#include <stdexcept>
#include <string>

namespace causal_ident {

enum class ErrorKind {
  CyclicGraph,
  IncompleteTable,
  InvalidTable,
  InvalidPMF,
  UnknownVariable,
  SchemaError,
  MissingNoise,
  MissingRandomizer,
  ZeroMassEvent,
  OverlappingSets,
  PositivityViolation,
  GenerationFailed,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

/// Single exception type for every engine failure. `subject` names the
/// offending variable, history, or JSON pointer, depending on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string subject, const std::string& detail = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& subject() const noexcept { return subject_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Positivity-type failures (exit code 3 at the CLI).
  bool is_positivity() const noexcept {
    return kind_ == ErrorKind::ZeroMassEvent ||
           kind_ == ErrorKind::PositivityViolation;
  }

 private:
  ErrorKind kind_;
  std::string subject_;
  std::string detail_;
};

}  // namespace causal_ident
