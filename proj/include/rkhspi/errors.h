#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rkhspi {

/// Raised when vectors or matrices of incompatible sizes meet.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A symmetric positive-definite factorization failed even after the
/// strongest regularization level of the active jitter policy.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Policy evaluation is ill-posed: the transport direction f(x) + g(x)u(x)
/// vanishes at a center, so the directional-gradient functional is zero.
class WellPosednessError : public std::runtime_error {
 public:
  WellPosednessError(const std::string& what, std::size_t center_index)
      : std::runtime_error(what), center_index_(center_index) {}
  std::size_t center_index() const { return center_index_; }

 private:
  std::size_t center_index_;
};

/// A closed-loop trajectory left the enlarged domain box (numerical proxy for
/// finite-time blow-up, i.e. infinite cost).
class RolloutEscapeError : public std::runtime_error {
 public:
  RolloutEscapeError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Newton-Kleinman / Lyapunov failures.
class CareError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unparseable or invalid experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rkhspi
