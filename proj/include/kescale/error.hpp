#pragma once

#include <stdexcept>
#include <string>

namespace kescale {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Jet layout, order or arithmetic precondition violated.
class JetError : public Error {
 public:
  using Error::Error;
};

/// Metric tensor is singular or not positive definite at the base point.
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Point outside a domain, unknown domain, or degenerate map.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A potential does not satisfy the constant-norm hypothesis of the field construction.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// Integration left the domain or failed to make progress.
class FlowError : public Error {
 public:
  using Error::Error;
};

/// Invalid command-line or file configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kescale
