#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairreg {

enum class ErrorKind {
  schema,            // missing/duplicate columns, malformed tables
  parse,             // unreadable or non-finite cell
  empty_dataset,
  unknown_group,
  degenerate_group,  // group or complement is empty
  infeasible,        // constraint cannot be satisfied
  solver,            // factorization or KKT acceptance failure
  numeric,           // non-finite input or lost probability mass
  config,            // invalid FitSpec, synth coefficients, run config
  pair_cap,          // group residual difference would exceed the pair cap
  fold,              // a cross-validation fold failed
  io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; the kind drives CLI exit codes and
/// the Python exception mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Same kind, message prefixed with "context: ".
  Error with_context(std::string_view context) const {
    return Error(kind_, std::string(context) + ": " + what());
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace fairreg
