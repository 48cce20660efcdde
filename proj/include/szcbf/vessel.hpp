#pragma once

// Kinematic marine-vessel tracking model: global and reference poses, the
// body-frame tracking error, error dynamics x' = f(x) + g(x) u after the
// actuator substitution, and its linearization at the origin.

#include <cmath>
#include <utility>

#include "szcbf/errors.hpp"
#include "szcbf/linalg.hpp"

namespace szcbf {

/// Position [m] and heading [rad]. Headings are kept unwrapped.
struct GlobalPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  friend bool operator==(const GlobalPose&, const GlobalPose&) = default;
};

/// Tracking error (x_e, y_e, theta_e) in the vessel body frame.
struct ErrorState {
  double x_e = 0.0;
  double y_e = 0.0;
  double theta_e = 0.0;

  [[nodiscard]] Vector vec() const { return Vector{x_e, y_e, theta_e}; }
  static ErrorState from(const Vector& v) {
    if (v.size() != 3) throw InvalidInput("ErrorState expects a 3-vector");
    return {v[0], v[1], v[2]};
  }
  [[nodiscard]] bool finite() const {
    return std::isfinite(x_e) && std::isfinite(y_e) && std::isfinite(theta_e);
  }

  friend bool operator==(const ErrorState&, const ErrorState&) = default;
};

/// Virtual inputs u = (v, omega) entering through g(x).
struct ControlInput {
  double v = 0.0;
  double omega = 0.0;

  [[nodiscard]] Vector vec() const { return Vector{v, omega}; }
  static ControlInput from(const Vector& u) {
    if (u.size() != 2) throw InvalidInput("ControlInput expects a 2-vector");
    return {u[0], u[1]};
  }
  ControlInput& operator+=(const ControlInput& o) {
    v += o.v;
    omega += o.omega;
    return *this;
  }
  friend ControlInput operator+(ControlInput a, const ControlInput& b) { return a += b; }
  friend ControlInput operator*(double s, const ControlInput& a) { return {s * a.v, s * a.omega}; }
  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

/// Surge speed and yaw rate actually commanded to the vessel.
struct ActuatorCommand {
  double v_sur = 0.0;
  double omega_yaw = 0.0;
};

class VesselParams {
 public:
  /// Throws InvalidInput unless v_r != 0, c != -1 and G is a finite 3-vector.
  VesselParams(double c, double v_r, double omega_r, Vector G)
      : c_(c), v_r_(v_r), omega_r_(omega_r), G_(std::move(G)) {
    if (!std::isfinite(c) || !std::isfinite(v_r) || !std::isfinite(omega_r))
      throw InvalidInput("vessel parameters must be finite");
    if (v_r == 0.0) throw InvalidInput("v_r must be non-zero");
    if (c == -1.0) throw InvalidInput("c must differ from -1");
    if (G_.size() != 3 || !G_.all_finite()) throw InvalidInput("G must be a finite 3-vector");
  }

  [[nodiscard]] double c() const noexcept { return c_; }
  [[nodiscard]] double v_r() const noexcept { return v_r_; }
  [[nodiscard]] double omega_r() const noexcept { return omega_r_; }
  [[nodiscard]] const Vector& G() const noexcept { return G_; }

  /// Same kinematics with a different diffusion vector (G = 0 gives the noise-free run).
  [[nodiscard]] VesselParams with_G(Vector G) const { return {c_, v_r_, omega_r_, std::move(G)}; }

 private:
  double c_;
  double v_r_;
  double omega_r_;
  Vector G_;
};

inline ErrorState error_from_poses(const GlobalPose& ref, const GlobalPose& actual) {
  const double dx = ref.x - actual.x;
  const double dy = ref.y - actual.y;
  const double c = std::cos(actual.theta);
  const double s = std::sin(actual.theta);
  return {dx * c + dy * s, -dx * s + dy * c, ref.theta - actual.theta};
}

/// Inverse of error_from_poses for a known reference pose.
inline GlobalPose global_from_error(const GlobalPose& ref, const ErrorState& e) {
  const double theta = ref.theta - e.theta_e;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // (dx, dy) = R(theta) (x_e, y_e)
  const double dx = c * e.x_e - s * e.y_e;
  const double dy = s * e.x_e + c * e.y_e;
  return {ref.x - dx, ref.y - dy, theta};
}

inline Vector drift_f(const ErrorState& x, const VesselParams& p) {
  const double s = std::sin(x.theta_e);
  const double c = std::cos(x.theta_e);
  const double wr = p.omega_r();
  return Vector{p.c() * wr * s + wr * x.y_e * c, p.v_r() * s - wr * x.x_e * c, wr * (1.0 - c)};
}

/// 3x2 input matrix g(x).
inline Matrix input_gain_g(const ErrorState& x, const VesselParams& p) {
  return Matrix{{-1.0, x.y_e}, {0.0, p.c() - x.x_e}, {0.0, -1.0}};
}

inline ActuatorCommand actuator_transform(const ErrorState& x, const ControlInput& u, const VesselParams& p) {
  const double c = std::cos(x.theta_e);
  return {p.v_r() * c + u.v, p.omega_r() * c + u.omega};
}

struct LinearModel {
  Matrix A;  // 3x3, df/dx at 0
  Matrix B;  // 3x2, g(0)
};

inline LinearModel linearize(const VesselParams& p) {
  const double wr = p.omega_r();
  return {Matrix{{0.0, wr, p.c() * wr}, {-wr, 0.0, p.v_r()}, {0.0, 0.0, 0.0}}, input_gain_g(ErrorState{}, p)};
}

/// One explicit Euler step of the reference kinematics.
inline GlobalPose reference_step(const GlobalPose& r, const VesselParams& p, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("reference_step: dt must be positive");
  const double c = std::cos(r.theta);
  const double s = std::sin(r.theta);
  const double cw = p.c() * p.omega_r();
  return {r.x + dt * (p.v_r() * c + cw * s), r.y + dt * (p.v_r() * s - cw * c), r.theta + dt * p.omega_r()};
}

}  // namespace szcbf
