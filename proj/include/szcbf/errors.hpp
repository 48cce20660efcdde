#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace szcbf {

// Exit codes used by the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Bad argument: wrong shape, non-finite entries, violated precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Scenario or configuration rejected on load.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear system without a unique solution (e.g. Lyapunov with non-Hurwitz A).
class NoSolution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver did not converge; carries the last residual.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  [[nodiscard]] double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Feasibility margin L <= 0: the certificate cannot be issued.
class Infeasible : public std::runtime_error {
 public:
  Infeasible(const std::string& what, double required_gap)
      : std::runtime_error(what), required_gap_(required_gap) {}
  /// Lower bound that M - mu has to exceed.
  [[nodiscard]] double required_gap() const noexcept { return required_gap_; }

 private:
  double required_gap_;
};

/// Simulation produced a non-finite state.
class NumericalBlowup : public std::runtime_error {
 public:
  NumericalBlowup(const std::string& what, std::size_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  [[nodiscard]] std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace szcbf
