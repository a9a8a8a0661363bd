#pragma once

#include <stdexcept>
#include <string>

namespace splinehmm {

// Invalid configuration object (basis, model or qREML settings).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Evaluation point or observation outside the supported domain.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed argument to a numerical routine (wrong shape, asymmetry, ...).
struct ArgumentError : std::runtime_error {
  explicit ArgumentError(const std::string& what) : std::runtime_error(what) {}
};

// Structural model problem (reducible chain, inconsistent spec).
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown at runtime (underflow, singular system, trapped optimizer).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Problems with user-supplied files (CSV, JSON, schema violations).
struct InputError : std::runtime_error {
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace splinehmm
