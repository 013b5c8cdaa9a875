#pragma once

#include <stdexcept>
#include <string>

namespace teleopt {

// Group action or bijection inverse undefined at the requested point.
struct SingularMapError : std::runtime_error {
  explicit SingularMapError(const std::string& what) : std::runtime_error(what) {}
};

// Rejection-sampling budget exhausted.
struct SamplingError : std::runtime_error {
  explicit SamplingError(const std::string& what) : std::runtime_error(what) {}
};

// Every orbit candidate was unusable.
struct OracleError : std::runtime_error {
  explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

// Objective blew past the divergence guard.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Bad or unreadable config / checkpoint / results file.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace teleopt
