#pragma once

#include <stdexcept>
#include <string>

namespace ieqmon {

/// Invalid configuration or scenario content. The message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A caller broke a precondition that upstream code is responsible for.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ieqmon
