#pragma once

#include <stdexcept>
#include <string>

namespace nomaharq {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inputs leave the regime in which an approximation is valid (e.g. M < 100).
class RegimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The far user cannot reach the requested SINR threshold (theta2 >= T*kappa).
class FeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A combinatorial enumeration would exceed its configured cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nomaharq
