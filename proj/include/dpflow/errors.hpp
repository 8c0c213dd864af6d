#pragma once

#include <stdexcept>
#include <string>

namespace dpflow {

/// Caller passed inconsistent arguments (dimension or base-point mismatch).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point left the manifold, e.g. an SPD chart point lost positive-definiteness.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical routine failed to converge or produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpflow
