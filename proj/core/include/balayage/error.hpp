#pragma once

#include <stdexcept>
#include <string>

namespace balayage {

enum class ErrorKind {
  invalid_argument,
  degenerate_geometry,
  unsupported_dimension,
  domain,
  space_mismatch,
  energy_principle,
  size_limit,
  non_convergence,
  nesting,
  config,
};

const char* to_string(ErrorKind kind);

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when the assembled Gram matrix fails the strict positive-definiteness check.
class EnergyPrincipleError : public Error {
 public:
  EnergyPrincipleError(const std::string& what, double smallest_pivot, long pivot_index)
      : Error(ErrorKind::energy_principle, what), smallest_pivot_(smallest_pivot), pivot_index_(pivot_index) {}
  double smallest_pivot() const noexcept { return smallest_pivot_; }
  long pivot_index() const noexcept { return pivot_index_; }

 private:
  double smallest_pivot_;
  long pivot_index_;
};

}  // namespace balayage
