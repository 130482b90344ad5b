#pragma once

#include <stdexcept>
#include <string>

namespace stochtrig {

/// Violated precondition (bad index, argument out of range, mismatched sizes).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A trajectory hit a non-finite nodal value.
class BlowupError : public NumericalError {
public:
  BlowupError(int step, const std::string& what)
      : NumericalError("blowup at step " + std::to_string(step) + ": " + what), step_(step) {}

  int step() const noexcept { return step_; }

private:
  int step_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DomainError(message);
}

}  // namespace detail
}  // namespace stochtrig
