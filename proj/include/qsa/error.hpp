#pragma once

#include <stdexcept>
#include <string>

namespace qsa {

enum class ErrorKind {
  invalid_instance,
  degenerate_instance,
  instance_too_large,
  detailed_balance_violation,
  precondition,
  dimension_mismatch,
  config,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_instance: return "invalid-instance";
    case ErrorKind::degenerate_instance: return "degenerate-instance";
    case ErrorKind::instance_too_large: return "instance-too-large";
    case ErrorKind::detailed_balance_violation: return "detailed-balance-violation";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace qsa
