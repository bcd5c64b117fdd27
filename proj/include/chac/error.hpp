#pragma once

#include <stdexcept>
#include <string>

namespace chac {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments or non-finite data handed to an operation.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Inverse transform left an imaginary residue above tolerance.
class SpectrumAsymmetry : public Error {
 public:
  using Error::Error;
};

/// Right-hand side of a periodic Poisson problem has a non-negligible mean.
class SolvabilityError : public Error {
 public:
  using Error::Error;
};

/// Numerical blow-up during time stepping.
class BlowUp : public Error {
 public:
  BlowUp(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Measurements are not consistent with the model (e.g. failed solvability).
class InconsistentMeasurement : public Error {
 public:
  using Error::Error;
};

/// Division mask too small to recover a coefficient; pick another seed.
class IllPosed : public Error {
 public:
  using Error::Error;
};

/// Experiments do not carry enough independent information to fix the gauge.
class DegenerateGauge : public Error {
 public:
  using Error::Error;
};

/// User-facing configuration or file problems (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace chac
