#pragma once

#include <stdexcept>
#include <string>

namespace varbandit {

// Index out of range, malformed parameters, unsupported inputs.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An online state cannot proceed (empty version space, vanished weights).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied precondition that the callee validates rather than trusts.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A configured size budget was exceeded.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Root finding or quadrature failed to converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment configuration is invalid or inconsistent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant was violated; surfaced to tests and the harness.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace varbandit
