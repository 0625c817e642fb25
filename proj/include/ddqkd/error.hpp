#pragma once

#include <stdexcept>
#include <string>

namespace ddqkd {

// All library failures derive from Error so callers can map them to exit
// statuses without inspecting message text.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside the domain of the operation.
class DomainError : public Error {
public:
  using Error::Error;
};

// The two settings (attenuator or decoy intensities) coincide, so the
// estimator's linear system has no solution.
class DegenerateSettingsError : public DomainError {
public:
  using DomainError::DomainError;
};

// A numerical guard tripped: a denominator vanished, no postselections were
// observed, or an internal sign invariant failed.
class NumericalGuardError : public Error {
public:
  using Error::Error;
};

// The input is well formed but lacks what the operation needs
// (e.g. standard errors for resampling).
class UnsupportedInputError : public Error {
public:
  using Error::Error;
};

// Malformed configuration or command line.
class UsageError : public Error {
public:
  using Error::Error;
};

} // namespace ddqkd
