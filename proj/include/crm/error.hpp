#pragma once

#include <stdexcept>
#include <string>

namespace crm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter vector outside the natural parameter space, or another argument
/// outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Point outside the support of a family.
class SupportError : public Error {
 public:
  using Error::Error;
};

/// No admissible finite-difference step exists around a parameter point, or
/// the requested moment is infinite.
class DerivativeDomainError : public Error {
 public:
  using Error::Error;
};

/// A Levy integral failed to converge. `partial()` holds the value
/// accumulated over the range where the integrand was finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double partial)
      : Error(what), partial_(partial) {}
  double partial() const noexcept { return partial_; }

 private:
  double partial_;
};

/// Base measure of a sampling component has infinite mass over the region.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// A Levy context was requested for a (family, path, k) triple that fails
/// the existence conditions.
class ConditionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedPairError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration. `pointer()` is a JSON pointer to the offending node.
class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : Error(pointer.empty() ? what : pointer + ": " + what),
        pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace crm
