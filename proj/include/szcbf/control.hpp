#pragma once

// Control laws: LQ tracking, the linear safety compensator and the nonlinear
// barrier-based compensator with its blending band.

#include <cmath>
#include <string>
#include <string_view>

#include "szcbf/barrier.hpp"
#include "szcbf/errors.hpp"
#include "szcbf/linalg.hpp"
#include "szcbf/vessel.hpp"

namespace szcbf {

struct LqrDesign {
  Matrix A;
  Matrix B;
  Matrix Qprime;
  Matrix R;
  Matrix P;     // stabilizing CARE solution
  Matrix K;     // R^{-1} B^T P, used as u = -K x
  Matrix Abar;  // A - B K
  Matrix Qeff;  // Q' + P B R^{-1} B^T P, so that P Abar + Abar^T P = -Qeff
};

inline LqrDesign design_lqr(const Matrix& A, const Matrix& B, const Matrix& Qprime, const Matrix& R,
                            const LinalgTolerances& tol = {}) {
  LqrDesign d{A, B, Qprime, R, {}, {}, {}, {}};
  d.P = solve_care(A, B, Qprime, R, tol);
  d.K = solve(R, B.transpose() * d.P);
  d.Abar = A - B * d.K;
  d.Qeff = symmetrize(Qprime + d.P * B * d.K);
  return d;
}

inline LqrDesign design_lqr(const VesselParams& p, const Matrix& Qprime, const Matrix& R,
                            const LinalgTolerances& tol = {}) {
  const LinearModel lin = linearize(p);
  return design_lqr(lin.A, lin.B, Qprime, R, tol);
}

/// Compensator tuning. Construction validates mu in (0, M), M' in (mu, M],
/// b' > 0 and R' symmetric positive definite.
struct CompensatorConfig {
  Matrix Rprime;
  double b_prime = 0.0;
  double M = 0.0;
  double mu = 0.0;
  double M_prime = 0.0;
  double eps_den = 1e-10;

  void validate() const {
    if (!(M > 0.0)) throw ConfigError("M must be positive");
    if (!(mu > 0.0 && mu < M)) throw ConfigError("mu must lie in (0, M)");
    if (!(M_prime > mu && M_prime <= M)) throw ConfigError("M_prime must lie in (mu, M]");
    if (!(b_prime > 0.0)) throw ConfigError("b_prime must be positive");
    if (!(eps_den >= 0.0)) throw ConfigError("eps_den must be non-negative");
    if (Rprime.rows() != 2 || Rprime.cols() != 2 || !is_symmetric(Rprime, 1e-10) || !is_pos_def(Rprime))
      throw ConfigError("R_prime must be a 2x2 symmetric positive definite matrix");
  }
};

enum class Mode { Tra, TraCom, TraNlc };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Tra: return "tra";
    case Mode::TraCom: return "tra+com";
    case Mode::TraNlc: return "tra+nlc";
  }
  throw ConfigError("unknown controller mode");
}

inline Mode parse_mode(std::string_view s) {
  if (s == "tra") return Mode::Tra;
  if (s == "tra+com") return Mode::TraCom;
  if (s == "tra+nlc") return Mode::TraNlc;
  throw ConfigError("unknown controller mode '" + std::string(s) + "' (expected tra, tra+com or tra+nlc)");
}

/// Everything a controller needs to act on the vessel error dynamics.
struct ClosedLoop {
  VesselParams vessel;
  LqrDesign lqr;
  CompensatorConfig comp;

  [[nodiscard]] Zcbf barrier() const { return Zcbf(lqr.P, comp.M); }
};

inline ControlInput u_tra(const ErrorState& x, const LqrDesign& d) { return ControlInput::from(-(d.K * x.vec())); }

inline ControlInput u_com(const ErrorState& x, const LqrDesign& d, const CompensatorConfig& cfg) {
  return ControlInput::from(-solve(cfg.Rprime, Matrix::column(d.B.transpose() * (d.P * x.vec()))).col(0));
}

/// gamma(x) = 2 x^T P (f + g u_tra + b' G G^T P x) + G^T P G. Positive exactly
/// when the tracking law alone violates the barrier condition at rate b'.
inline double gamma(const ErrorState& x, const LqrDesign& d, const CompensatorConfig& cfg, const VesselParams& p) {
  const Vector xv = x.vec();
  const Vector px = d.P * xv;
  const Vector& G = p.G();
  const double pg = dot(px, G);
  const Vector drift = drift_f(x, p) + input_gain_g(x, p) * u_tra(x, d).vec();
  return 2.0 * dot(px, drift) + 2.0 * cfg.b_prime * pg * pg + quad_form(G, d.P);
}

inline ControlInput phi_s(const ErrorState& x, const LqrDesign& d, const CompensatorConfig& cfg,
                          const VesselParams& p) {
  const Vector xv = x.vec();
  const Vector px = d.P * xv;
  const Matrix g = input_gain_g(x, p);
  const Vector gtpx = g.transpose() * px;
  const double den = 2.0 * dot(gtpx, gtpx);
  if (!(den > cfg.eps_den)) return {};
  if (!(gamma(x, d, cfg, p) > 0.0)) return {};
  const Vector& G = p.G();
  const double pg = dot(px, G);
  const double num = 2.0 * dot(px, drift_f(x, p)) + 2.0 * cfg.b_prime * pg * pg + quad_form(G, d.P);
  const ControlInput ut = u_tra(x, d);
  return {-ut.v - num / den * gtpx[0], -ut.omega - num / den * gtpx[1]};
}

/// Weight applied to phi_s: 1 for h <= mu, linear ramp to 0 on (mu, M'), 0 above.
inline double nlc_blend(double hv, const CompensatorConfig& cfg) {
  if (hv <= cfg.mu) return 1.0;
  if (hv >= cfg.M_prime) return 0.0;
  return (hv - cfg.M_prime) / (cfg.mu - cfg.M_prime);
}

inline ControlInput u_nlc(const ErrorState& x, const LqrDesign& d, const CompensatorConfig& cfg,
                          const VesselParams& p) {
  const double w = nlc_blend(cfg.M - quad_form(x.vec(), d.P), cfg);
  if (w == 0.0) return {};
  return w * phi_s(x, d, cfg, p);
}

/// Safety compensator part of the selected law (zero for Mode::Tra).
inline ControlInput compensator(Mode mode, const ErrorState& x, const ClosedLoop& cl) {
  switch (mode) {
    case Mode::Tra: return {};
    case Mode::TraCom: return u_com(x, cl.lqr, cl.comp);
    case Mode::TraNlc: return u_nlc(x, cl.lqr, cl.comp, cl.vessel);
  }
  throw ConfigError("unknown controller mode");
}

inline ControlInput total_controller(Mode mode, const ErrorState& x, const ClosedLoop& cl) {
  return u_tra(x, cl.lqr) + compensator(mode, x, cl);
}

}  // namespace szcbf
