#pragma once

#include <stdexcept>
#include <string>

namespace tdho {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model or configuration parameter lies outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Operands that do not belong together (space tags, grids, dimensions).
class UsageError : public Error {
 public:
  using Error::Error;
};

// A numerical operation was asked to act outside its domain of validity.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Wavefunction content would leave the periodic box.  Carries the half-width
// that would have been needed when it can be estimated (0 otherwise).
class GridOverflow : public DomainError {
 public:
  GridOverflow(const std::string& what, double required_half_width)
      : DomainError(what), required_half_width_(required_half_width) {}
  double required_half_width() const { return required_half_width_; }

 private:
  double required_half_width_;
};

// Gaussian transport hit (or came too close to) a caustic; the caller has
// to split the interval.
class CausticError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A sinogram scan lost too many samples.
class ScanError : public Error {
 public:
  using Error::Error;
};

}  // namespace tdho
