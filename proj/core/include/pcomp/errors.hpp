#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcomp {

/// Bad argument to an operation (off-simplex weights, lambda out of range, malformed graph).
class ParameterError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A logarithm or division would leave its domain (zero mixture mass on a supported successor).
class NumericDomainError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Input files could not be read or parsed.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Behaviors failed validation (row sums, supports, absolute continuity).
class ValidationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// No source satisfies the chance constraint at (stage, state).
class InfeasiblePlanError : public std::runtime_error
{
public:
  InfeasiblePlanError(int stage, std::size_t state, const std::string& state_name)
    : std::runtime_error(
        "chance constraint infeasible at stage " + std::to_string(stage) + ", state '" +
        state_name + "': no source places enough mass on the safe set"),
      stage_(stage),
      state_(state)
  {
  }

  int stage() const noexcept { return stage_; }
  std::size_t state() const noexcept { return state_; }

private:
  int stage_;
  std::size_t state_;
};

}  // namespace pcomp
