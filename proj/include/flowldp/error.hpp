#pragma once

#include <stdexcept>
#include <string>

namespace flowldp {

// Bad argument to a public operation (precondition violated).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Experiment or CLI configuration that cannot be evaluated.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Kernel whose Fourier transform is not nonnegative, so no real square root exists.
class FactorizationUnsupported : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InfeasibleProblem : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace flowldp
