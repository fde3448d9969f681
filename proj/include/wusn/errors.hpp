#pragma once

#include <stdexcept>
#include <string>

namespace wusn {

// Invalid experiment or model parameters (non-square grid, non-coprime moduli, bad config keys).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// An argument lies outside the domain an operation is defined on.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Estimation could not produce a point (singular normal equations, coincident nodes).
class EstimationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Degenerate geometry, e.g. a Jacobian without full column rank at the source.
class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace wusn
