#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dscm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatches, unknown labels, bad literals,
/// violated operation preconditions. The message names the offending field.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The numerical state left the finite range while time stepping.
class DivergenceError : public Error {
 public:
  DivergenceError(double time, std::optional<std::size_t> step, const std::string& what)
      : Error(what), time_(time), step_(step) {}

  /// First time at which a non-finite or blown-up state was observed.
  [[nodiscard]] double time() const noexcept { return time_; }
  /// Step index, for discrete-time rollouts.
  [[nodiscard]] std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  double time_;
  std::optional<std::size_t> step_;
};

/// Least-squares design matrix was rank deficient (e.g. an aliased grid).
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// A mechanism cannot be turned into a closed-form structural equation.
class DerivationError : public Error {
 public:
  enum class Kind { underdetermined_dc, stability_precondition };

  DerivationError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace dscm
