#pragma once

#include <stdexcept>
#include <string>

namespace patternflow {

/// All runtime failures carry a machine-readable kind (used by exception
/// handler selectors) plus a human-readable message.
class PatternError : public std::runtime_error {
 public:
  PatternError(std::string kind, std::string message)
      : std::runtime_error(kind + ": " + message),
        kind_(std::move(kind)),
        detail_(std::move(message)) {}

  const std::string& kind() const { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const { return detail_; }

 private:
  std::string kind_;
  std::string detail_;
};

[[noreturn]] inline void raise(std::string kind, const std::string& message) {
  throw PatternError(std::move(kind), message);
}

}  // namespace patternflow
