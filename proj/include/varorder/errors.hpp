#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace varorder {

// Base for all library errors. `code` is a short stable identifier
// (e.g. "NegativeEntry") carried into CLI diagnostics and manifests.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

// Rejected inputs: bad configuration, violated preconditions, mismatched
// shapes. Raised before the computation starts. CLI exit code 2.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Failures discovered while a computation is running (negative vital
// rate, overflow, extinct trajectory, ...). CLI exit code 3.
class SimulationError : public Error {
public:
  using Error::Error;
};

}  // namespace varorder
