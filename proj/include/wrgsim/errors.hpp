#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>

namespace wrgsim {

// Bad argument to a public operation: out-of-range parameter, shape mismatch.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct KernelDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConfigError : std::runtime_error {
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field(std::move(field)) {}
  std::string field;
};

// A state left the finite range during time stepping.
struct NumericalAbort : std::runtime_error {
  NumericalAbort(std::size_t step, std::size_t particle, const std::string& what)
      : std::runtime_error(what), step(step), particle(particle) {}
  std::size_t step, particle;
};

struct TruncationError : std::runtime_error {
  TruncationError(double mass, const std::string& what) : std::runtime_error(what), mass(mass) {}
  double mass;
};

}  // namespace wrgsim
