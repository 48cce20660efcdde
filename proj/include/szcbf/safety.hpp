#pragma once

// Stochastic ZCBF machinery for h(x) = M - x^T P x under additive noise G dw:
// generator evaluation, certified exponential rates, safety probability lower
// bounds and a sampled check of the barrier inequality near the boundary.

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "szcbf/barrier.hpp"
#include "szcbf/control.hpp"
#include "szcbf/errors.hpp"
#include "szcbf/linalg.hpp"
#include "szcbf/rng.hpp"
#include "szcbf/vessel.hpp"

namespace szcbf {

inline std::string format_number(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// Which drift the generator is evaluated on. The LQ baseline and the linear
/// compensator are certified on the linearized model (A x, B); the nonlinear
/// compensator on the full error dynamics (f(x), g(x)).
enum class Dynamics { Linearized, Nonlinear };

inline Dynamics certified_dynamics(Mode mode) { return mode == Mode::TraNlc ? Dynamics::Nonlinear : Dynamics::Linearized; }

inline std::string_view to_string(Dynamics d) { return d == Dynamics::Linearized ? "linearized" : "nonlinear"; }

/// Closed-loop drift f(x) + g(x) u for the chosen model.
inline Vector closed_loop_drift(const ErrorState& x, const ControlInput& u, const LqrDesign& d, const VesselParams& p,
                                Dynamics dyn) {
  if (dyn == Dynamics::Linearized) return d.A * x.vec() + d.B * u.vec();
  return drift_f(x, p) + input_gain_g(x, p) * u.vec();
}

/// Pieces of the Ito generator of h. The generator itself is drift + diffusion.
struct GeneratorParts {
  double drift = 0.0;      // L_f h + L_g h u = -2 x^T P (f + g u)
  double diffusion = 0.0;  // (1/2) tr[G G^T Hess h] = -G^T P G
  double H_sigma = 0.0;    // (1/2) (L_sigma h)^2 = 2 (x^T P G)^2

  [[nodiscard]] double Lh() const { return drift + diffusion; }
};

inline GeneratorParts generator_h(const ErrorState& x, const ControlInput& u, const LqrDesign& d, const Zcbf& z,
                                  const VesselParams& p, Dynamics dyn = Dynamics::Nonlinear) {
  const Vector px = z.P() * x.vec();
  const double pg = dot(px, p.G());
  return {-2.0 * dot(px, closed_loop_drift(x, u, d, p, dyn)), -quad_form(p.G(), z.P()), 2.0 * pg * pg};
}

/// Generator of B_b = exp(-b h), evaluated from the gradient and Hessian of B_b.
struct ExpBarrierGenerator {
  double B = 0.0;           // exp(-b h), may overflow to +inf for very negative b h
  double normalized = 0.0;  // (L B_b) / B_b, always finite
  [[nodiscard]] double value() const { return B * normalized; }
};

inline ExpBarrierGenerator exp_barrier_generator(const ErrorState& x, const ControlInput& u, const LqrDesign& d,
                                                 const Zcbf& z, const VesselParams& p, double b,
                                                 Dynamics dyn = Dynamics::Nonlinear) {
  // grad h = -2 P x, Hess h = -2 P.
  // grad B / B = -b grad h ; Hess B / B = b^2 grad h grad h^T - b Hess h.
  const Vector xv = x.vec();
  const Vector grad_h = -2.0 * (z.P() * xv);
  const Matrix hess_h = -2.0 * z.P();
  const Vector grad_over_B = -b * grad_h;
  const Matrix hess_over_B = b * b * Matrix::outer(grad_h, grad_h) - b * hess_h;
  const Vector& G = p.G();
  const double first = dot(grad_over_B, closed_loop_drift(x, u, d, p, dyn));
  const double second = 0.5 * quad_form(G, hess_over_B);
  return {std::exp(-b * h(xv, z)), first + second};
}

/// Corollary-style generic compensator: adds only the component of u along
/// (L_g h)^T needed to lift the generator of h to rate b. Takes the pre-input u_o.
inline ControlInput phi_projected(const ErrorState& x, const ControlInput& u_o, const LqrDesign& d, const Zcbf& z,
                                  const VesselParams& p, double b, double eps_den = 1e-10,
                                  Dynamics dyn = Dynamics::Nonlinear) {
  const GeneratorParts gp = generator_h(x, u_o, d, z, p, dyn);
  const double I_s = gp.Lh();
  const double J_s = b * gp.H_sigma;
  const Matrix g = dyn == Dynamics::Linearized ? d.B : input_gain_g(x, p);
  const Vector Lgh = -2.0 * (g.transpose() * (z.P() * x.vec()));
  const double n2 = dot(Lgh, Lgh);
  if (!(I_s < J_s) || !(n2 > eps_den)) return {};
  return ControlInput::from(-((I_s - J_s) / n2) * Lgh);
}

/// L = eigmin[Q] - eigmin[P] tr[G^T P G] / (M - mu). Feasible iff L > 0.
inline double feasibility_margin(const Zcbf& z, const Matrix& Qeff, const Vector& G, double mu) {
  if (!(mu > 0.0 && mu < z.M())) throw InvalidInput("mu must lie in (0, M)");
  return eigmin(Qeff) - eigmin(z.P()) * quad_form(G, z.P()) / (z.M() - mu);
}

/// Smallest admissible M - mu: tr[G^T P G] eigmin[P] / eigmin[Q].
inline double feasibility_threshold(const Matrix& P, const Matrix& Qeff, const Vector& G) {
  return quad_form(G, P) * eigmin(P) / eigmin(Qeff);
}

/// Largest rate allowed for the LQ closed loop: b = L / (2 eigmax[P G G^T P]).
inline double compute_b(const Zcbf& z, const Matrix& Qeff, const Vector& G, double mu) {
  if (norm(G) == 0.0) throw InvalidInput("compute_b: G = 0 has no finite rate (the safe set is invariant)");
  const double L = feasibility_margin(z, Qeff, G, mu);
  if (!(L > 0.0)) {
    const double gap = feasibility_threshold(z.P(), Qeff, G);
    throw Infeasible("infeasible barrier margin: M - mu > " + format_number(gap) + " required", gap);
  }
  const Vector pg = z.P() * G;
  return L / (2.0 * eigmax(Matrix::outer(pg, pg)));
}

/// Projection of B R'^{-1} B^T = b+ G G^T onto G: G^T B R'^{-1} B^T G / (G^T G)^2.
inline double compute_b_plus_projection(const Matrix& B, const Matrix& Rprime, const Vector& G) {
  const double gg = dot(G, G);
  if (!(gg > 0.0)) throw InvalidInput("b_plus_projection: G must be non-zero");
  if (!is_pos_def(symmetrize(Rprime))) throw InvalidInput("b_plus_projection: R' must be positive definite");
  const Vector btg = B.transpose() * G;
  const Matrix w = solve(Rprime, Matrix::column(btg));
  return dot(btg, w.col(0)) / (gg * gg);
}

/// sup{beta >= 0 : B R'^{-1} B^T - beta G G^T is PSD}, by bisection.
inline double compute_b_plus_rigorous(const Matrix& B, const Matrix& Rprime, const Vector& G,
                                      double psd_tol = 1e-12) {
  const Matrix m = symmetrize(B * solve(Rprime, B.transpose()));
  const Matrix ggt = Matrix::outer(G, G);
  if (!is_pos_semidef(m, psd_tol)) return 0.0;
  // G^T (m - beta G G^T) G >= 0 bounds beta by the projection value.
  double hi = compute_b_plus_projection(B, Rprime, G) * (1.0 + 1e-9) + 1e-300;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (is_pos_semidef(m - mid * ggt, psd_tol))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

inline double safety_prob_lb(double b, double mu) {
  if (!(b >= 0.0) || !(mu > 0.0)) throw InvalidInput("safety_prob_lb: need b >= 0 and mu > 0");
  return -std::expm1(-b * mu);
}

/// Uniform direction, radius such that x^T P x is uniform on [lo, hi].
inline ErrorState sample_level_band(NormalSource& rng, const Matrix& P, double lo, double hi) {
  Vector d{rng.next(), rng.next(), rng.next()};
  d *= 1.0 / norm(d);
  const double level = lo + (hi - lo) * rng.uniform();
  return ErrorState::from(std::sqrt(level / quad_form(d, P)) * d);
}

struct ViolationReport {
  std::size_t n_samples = 0;
  std::size_t violations = 0;             // L h < b H_sigma beyond tolerance
  std::size_t exp_form_violations = 0;    // L B_b > 0 beyond tolerance
  std::size_t form_disagreements = 0;     // samples where the two verdicts differ
  double worst_margin = std::numeric_limits<double>::infinity();  // min of L h - b H_sigma
  std::size_t worst_index = 0;
  ErrorState worst_point{};
  Dynamics dynamics = Dynamics::Nonlinear;
};

/// Samples the band M - mu <= x^T P x <= M + mu (so -mu <= h <= mu) and checks
/// L h >= b H_sigma and L B_b <= 0 for the selected closed loop.
inline ViolationReport check_zcbf_on_shell(Mode mode, const ClosedLoop& cl, double b_target, std::size_t n_samples,
                                           std::uint64_t seed, std::optional<Dynamics> dynamics = std::nullopt,
                                           double rel_tol = 1e-8) {
  if (n_samples == 0) throw InvalidInput("check_zcbf_on_shell: n_samples must be >= 1");
  if (!(b_target > 0.0)) throw InvalidInput("check_zcbf_on_shell: b_target must be positive");
  const Zcbf z = cl.barrier();
  const Dynamics dyn = dynamics.value_or(certified_dynamics(mode));
  const double lo = std::max(0.0, z.M() - cl.comp.mu);
  const double hi = z.M() + cl.comp.mu;
  NormalSource rng(RngStream{seed, 0});
  ViolationReport rep;
  rep.n_samples = n_samples;
  rep.dynamics = dyn;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const ErrorState x = sample_level_band(rng, z.P(), lo, hi);
    const ControlInput u = total_controller(mode, x, cl);
    const GeneratorParts gp = generator_h(x, u, cl.lqr, z, cl.vessel, dyn);
    const double margin = gp.Lh() - b_target * gp.H_sigma;
    const double scale = 1.0 + std::abs(gp.drift) + std::abs(gp.diffusion) + std::abs(b_target * gp.H_sigma);
    const bool h_ok = margin >= -rel_tol * scale;
    // L B_b = -b B_b (L h - b H_sigma), so the tolerance scales by b.
    const ExpBarrierGenerator eb = exp_barrier_generator(x, u, cl.lqr, z, cl.vessel, b_target, dyn);
    const bool exp_ok = eb.normalized <= b_target * rel_tol * scale;
    rep.violations += h_ok ? 0 : 1;
    rep.exp_form_violations += exp_ok ? 0 : 1;
    rep.form_disagreements += (h_ok == exp_ok) ? 0 : 1;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_index = i;
      rep.worst_point = x;
    }
  }
  return rep;
}

/// Certified quantities for the three closed loops.
struct SafetyCertificate {
  double M = 0.0;
  double mu = 0.0;
  double b_prime = 0.0;
  bool deterministic = false;  // G = 0: every sublevel set is invariant
  bool feasible = false;
  double L = 0.0;
  double threshold = 0.0;  // M - mu has to exceed this
  std::optional<double> b;
  std::optional<double> b_plus_projection;
  std::optional<double> b_plus_rigorous;
  double prob_tra = 0.0;
  double prob_com = 0.0;
  double prob_nlc = 0.0;
  std::vector<std::string> warnings;

  [[nodiscard]] double prob(Mode m) const {
    switch (m) {
      case Mode::Tra: return prob_tra;
      case Mode::TraCom: return prob_com;
      case Mode::TraNlc: return prob_nlc;
    }
    throw ConfigError("unknown controller mode");
  }
};

inline SafetyCertificate certify(const ClosedLoop& cl) {
  cl.comp.validate();
  const Zcbf z = cl.barrier();
  const Vector& G = cl.vessel.G();
  SafetyCertificate c;
  c.M = cl.comp.M;
  c.mu = cl.comp.mu;
  c.b_prime = cl.comp.b_prime;
  c.L = feasibility_margin(z, cl.lqr.Qeff, G, c.mu);
  c.threshold = feasibility_threshold(z.P(), cl.lqr.Qeff, G);
  if (norm(G) == 0.0) {
    c.deterministic = true;
    c.feasible = true;
    c.prob_tra = c.prob_com = c.prob_nlc = 1.0;
    return c;
  }
  c.feasible = c.L > 0.0;
  c.b_plus_projection = compute_b_plus_projection(cl.lqr.B, cl.comp.Rprime, G);
  c.b_plus_rigorous = compute_b_plus_rigorous(cl.lqr.B, cl.comp.Rprime, G);
  c.prob_nlc = safety_prob_lb(c.b_prime, c.mu);
  if (c.feasible) {
    c.b = compute_b(z, cl.lqr.Qeff, G, c.mu);
    c.prob_tra = safety_prob_lb(*c.b, c.mu);
    c.prob_com = safety_prob_lb(*c.b + *c.b_plus_projection, c.mu);
  } else {
    c.warnings.push_back("infeasible: M - mu > " + format_number(c.threshold) + " required");
  }
  if (*c.b_plus_rigorous < *c.b_plus_projection * (1.0 - 1e-9)) {
    c.warnings.push_back("b_plus_rigorous (" + format_number(*c.b_plus_rigorous) +
                         ") is below b_plus_projection (" + format_number(*c.b_plus_projection) +
                         "): B R'^-1 B^T - b+ G G^T is not PSD, so prob_com rests on the G-projection only");
  }
  return c;
}

}  // namespace szcbf
