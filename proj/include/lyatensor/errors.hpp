#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lyatensor {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller (or a user-supplied callback) violated a documented precondition:
// asymmetric matrix where a symmetric one is required, non-SPD metric value,
// degenerate initial data, singular chart Jacobian, and so on.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// An evaluation left the representable range or produced NaN/Inf where finite
// values are required.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

// An evaluation point lies outside the domain an object was built for
// (e.g. interpolating a trajectory beyond its time window).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Finite-time blow-up: the step size collapsed (or the state stopped being
// finite) before the requested end time.  Carries how far we got and the last
// finite state, so callers can keep the partial result.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& msg, double t_reached, std::vector<double> last_state)
      : Error(msg), t_reached_(t_reached), last_state_(std::move(last_state)) {}

  double t_reached() const { return t_reached_; }
  const std::vector<double>& last_state() const { return last_state_; }

 private:
  double t_reached_;
  std::vector<double> last_state_;
};

}  // namespace lyatensor
