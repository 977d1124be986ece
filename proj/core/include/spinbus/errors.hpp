#pragma once

#include <stdexcept>
#include <string>

namespace spinbus {

/// Raised when an argument falls outside an operation's domain
/// (bad layout sizes, sector out of range, mismatched layouts, ...).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical routine fails or detects an inconsistency
/// (eigensolver failure, integrator drift, non-real fidelity, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Phase calibration found no usable swap amplitude in a channel.
class CalibrationError : public NumericalError {
 public:
  explicit CalibrationError(const std::string& what) : NumericalError(what) {}
};

}  // namespace spinbus
