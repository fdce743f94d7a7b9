#pragma once

#include <stdexcept>
#include <string>

namespace chronorec {

// CLI exit codes: 0 success, 1 usage/config error, 2 data error,
// 3 dependency/fingerprint error.
enum class ExitCode : int { ok = 0, usage = 1, data = 2, dependency = 3 };

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ExitCode::usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

class DependencyError : public Error {
 public:
  explicit DependencyError(const std::string& what)
      : Error(ExitCode::dependency, what) {}
};

// Raised by transition_prob when the source item has no outgoing pairs.
// Callers that can fall back (e.g. the scorer's transition term) check
// has_outgoing() instead of catching this.
class NoOutgoingTransitions : public DataError {
 public:
  explicit NoOutgoingTransitions(const std::string& item)
      : DataError("no outgoing transitions from item '" + item + "'") {}
};

}  // namespace chronorec
