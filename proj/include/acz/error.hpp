#pragma once

#include <stdexcept>
#include <string>

namespace acz {

/// Input outside the domain an operation is defined on.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Numerical routine failed to reach its requested tolerance.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Design matrix carries no information about the estimated parameter.
struct SingularDesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dataset or file on disk is missing, unreadable or inconsistent.
struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Configuration failed validation.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace acz
