#pragma once

#include <stdexcept>
#include <string>

namespace wflo {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file (CSV tables, layouts, wind roses, configs).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration that cannot be run: infeasible grid, missing files, bad keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wflo
