#pragma once

// Euler-Maruyama integration of dx = (f(x) + g(x) u) dt + G dw with a scalar
// Wiener process, barrier tracking and first-exit detection.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "szcbf/barrier.hpp"
#include "szcbf/control.hpp"
#include "szcbf/errors.hpp"
#include "szcbf/linalg.hpp"
#include "szcbf/rng.hpp"
#include "szcbf/vessel.hpp"

namespace szcbf {

inline ErrorState em_step(const ErrorState& x, const ControlInput& u, double dW, double dt, const VesselParams& p) {
  const double s = std::sin(x.theta_e);
  const double c = std::cos(x.theta_e);
  const double wr = p.omega_r();
  // f(x) + g(x) u written out; same as drift_f + input_gain_g * u.
  const double fx = p.c() * wr * s + wr * x.y_e * c - u.v + x.y_e * u.omega;
  const double fy = p.v_r() * s - wr * x.x_e * c + (p.c() - x.x_e) * u.omega;
  const double ft = wr * (1.0 - c) - u.omega;
  const Vector& G = p.G();
  return {x.x_e + fx * dt + G[0] * dW, x.y_e + fy * dt + G[1] * dW, x.theta_e + ft * dt + G[2] * dW};
}

struct SimOptions {
  double T = 100.0;
  double dt = 1e-3;
  bool stop_on_exit = false;

  [[nodiscard]] std::size_t n_steps() const {
    if (!(T > 0.0) || !(dt > 0.0) || dt > T) throw InvalidInput("simulation needs T > 0 and 0 < dt <= T");
    return static_cast<std::size_t>(std::llround(T / dt));
  }
};

/// Drives one closed-loop path; calls visit(k, x_k, h_k, u_k) at every grid
/// point k = 0..n_steps (u_k is the input applied on [t_k, t_k + dt); at the
/// final point it is the input that would be applied next). Returns the first
/// grid index with h <= 0, if any.
template <class Visitor>
std::optional<std::size_t> integrate_path(const ErrorState& x0, Mode mode, const ClosedLoop& cl, const SimOptions& opt,
                                          RngStream stream, Visitor&& visit) {
  const std::size_t n = opt.n_steps();
  const Zcbf z = cl.barrier();
  const double sd = std::sqrt(opt.dt);
  NormalSource noise(stream);
  std::optional<std::size_t> exit_index;
  ErrorState x = x0;
  for (std::size_t k = 0;; ++k) {
    if (!x.finite()) throw NumericalBlowup("non-finite state", k);
    const double hk = h(x, z);
    const ControlInput u = total_controller(mode, x, cl);
    visit(k, x, hk, u);
    if (hk <= 0.0 && !exit_index) {
      exit_index = k;
      if (opt.stop_on_exit) break;
    }
    if (k == n) break;
    x = em_step(x, u, sd * noise.next(), opt.dt, cl.vessel);
  }
  return exit_index;
}

struct SamplePath {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<ErrorState> states;
  std::vector<double> h_values;
  std::vector<ControlInput> inputs;       // total input u
  std::vector<ControlInput> compensator;  // safety compensator part of u
  bool exited = false;
  std::optional<std::size_t> exit_index;  // first grid index with h <= 0

  [[nodiscard]] std::size_t size() const { return states.size(); }
};

/// Full path, recording every `stride`-th grid point (plus the exit point).
inline SamplePath simulate_path(const ErrorState& x0, Mode mode, const ClosedLoop& cl, const SimOptions& opt,
                                RngStream stream, std::size_t stride = 1) {
  if (stride == 0) throw InvalidInput("simulate_path: stride must be >= 1");
  SamplePath path;
  path.dt = opt.dt;
  const std::size_t n = opt.n_steps();
  const std::size_t expected = n / stride + 2;
  path.times.reserve(expected);
  path.states.reserve(expected);
  path.h_values.reserve(expected);
  path.inputs.reserve(expected);
  path.compensator.reserve(expected);
  bool exit_recorded = false;
  path.exit_index = integrate_path(x0, mode, cl, opt, stream, [&](std::size_t k, const ErrorState& x, double hk,
                                                                   const ControlInput& u) {
    const bool first_exit = hk <= 0.0 && !exit_recorded;
    exit_recorded = exit_recorded || hk <= 0.0;
    if (k % stride != 0 && !first_exit && k != n) return;
    path.times.push_back(static_cast<double>(k) * opt.dt);
    path.states.push_back(x);
    path.h_values.push_back(hk);
    path.inputs.push_back(u);
    path.compensator.push_back(compensator(mode, x, cl));
  });
  path.exited = path.exit_index.has_value();
  return path;
}

/// Minimum of h over the grid, stopping at the first exit when requested.
struct PathSummary {
  double min_h = 0.0;
  std::optional<std::size_t> exit_index;
};

inline PathSummary summarize_path(const ErrorState& x0, Mode mode, const ClosedLoop& cl, const SimOptions& opt,
                                  RngStream stream) {
  PathSummary s{INFINITY, std::nullopt};
  s.exit_index = integrate_path(x0, mode, cl, opt, stream,
                                [&](std::size_t, const ErrorState&, double hk, const ControlInput&) {
                                  s.min_h = std::min(s.min_h, hk);
                                });
  return s;
}

/// Euler-Maruyama for the linear closed loop dx = Abar x dt + G dw; returns x_T.
inline Vector simulate_linear(const Matrix& abar, const Vector& G, const Vector& x0, double T, double dt,
                              RngStream stream) {
  const std::size_t n = SimOptions{T, dt, false}.n_steps();
  const std::size_t dim = x0.size();
  if (abar.rows() != dim || abar.cols() != dim || G.size() != dim) throw InvalidInput("simulate_linear: shape mismatch");
  NormalSource noise(stream);
  const double sd = std::sqrt(dt);
  std::vector<double> x(x0.values());
  std::vector<double> dx(dim);
  for (std::size_t k = 0; k < n; ++k) {
    const double dW = sd * noise.next();
    for (std::size_t i = 0; i < dim; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim; ++j) s += abar(i, j) * x[j];
      dx[i] = s * dt + G[i] * dW;
    }
    for (std::size_t i = 0; i < dim; ++i) x[i] += dx[i];
  }
  Vector out(std::move(x));
  if (!out.all_finite()) throw NumericalBlowup("non-finite state in linear simulation", n);
  return out;
}

}  // namespace szcbf
