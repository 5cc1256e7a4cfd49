#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace choreo {

/// Base of every error raised by the library. `stage` names the pipeline
/// stage or module that failed so CLI output can point at it.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& message)
      : std::runtime_error(stage.empty() ? message : stage + ": " + message),
        stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Bad input, bad file, bad configuration. CLI exit code 3.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Failure while computing on valid input (non-finite values, IO). Exit code 4.
class RuntimeError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ValidationError {
 public:
  ShapeError(const std::string& what, const std::vector<std::size_t>& expected,
             const std::vector<std::size_t>& actual);

  static std::string format(const std::vector<std::size_t>& shape);
};

}  // namespace choreo
