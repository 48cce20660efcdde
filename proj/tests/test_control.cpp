#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "szcbf/control.hpp"
#include "szcbf/safety.hpp"
#include "szcbf/scenario.hpp"

using namespace szcbf;

namespace {

const ClosedLoop& sec7() {
  static const ClosedLoop cl = preset("paper-sec7").closed_loop();
  return cl;
}

// Point with x^T P x = level along direction d.
ErrorState on_level(const Vector& d, const Matrix& P, double level) {
  return ErrorState::from(std::sqrt(level / quad_form(d, P)) * d);
}

Vector random_direction(std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  Vector d{n(gen), n(gen), n(gen)};
  return (1.0 / norm(d)) * d;
}

void expect_matrix_near(const Matrix& got, const Matrix& want, double tol) {
  ASSERT_EQ(got.rows(), want.rows());
  ASSERT_EQ(got.cols(), want.cols());
  for (std::size_t i = 0; i < got.rows(); ++i)
    for (std::size_t j = 0; j < got.cols(); ++j) EXPECT_NEAR(got(i, j), want(i, j), tol) << "(" << i << "," << j << ")";
}

}  // namespace

TEST(DesignLqr, PrintedRiccatiGainAndClosedLoop) {
  const LqrDesign& d = sec7().lqr;
  expect_matrix_near(d.P, Matrix{{1.99, -0.06, -0.92}, {-0.06, 2.64, 11.32}, {-0.92, 11.32, 63.81}}, 0.01);
  expect_matrix_near(d.K, Matrix{{-0.05, 0.00, 0.02}, {0.02, -0.09, -0.75}}, 0.01);
  expect_matrix_near(d.Abar, Matrix{{-0.05, 0.10, 0.32}, {-0.16, 0.25, 3.24}, {0.02, -0.08, -0.75}}, 0.01);
}

TEST(DesignLqr, GainFromPrintedRiccatiSolution) {
  // R^-1 B^T P evaluated on the printed two-decimal P.
  const Matrix P{{1.99, -0.06, -0.92}, {-0.06, 2.64, 11.32}, {-0.92, 11.32, 63.81}};
  const Matrix K = (1.0 / 40.0) * (sec7().lqr.B.transpose() * P);
  expect_matrix_near(K, Matrix{{-0.05, 0.00, 0.02}, {0.02, -0.09, -0.75}}, 0.01);
}

TEST(DesignLqr, Invariants) {
  const LqrDesign& d = sec7().lqr;
  EXPECT_TRUE(is_pos_def(d.P));
  EXPECT_TRUE(is_hurwitz(d.Abar));
  EXPECT_LT(max_abs(d.P * d.Abar + d.Abar.transpose() * d.P + d.Qeff), 1e-6);
  const Matrix Qeff_direct = d.Qprime + d.P * d.B * inverse(d.R) * d.B.transpose() * d.P;
  EXPECT_LT(max_abs(d.Qeff - Qeff_direct), 1e-12);
  // The Lyapunov solve on the closed loop reproduces the Riccati solution.
  EXPECT_LT(max_abs(solve_lyapunov(d.Abar, d.Qeff) - d.P), 1e-6);
}

TEST(DesignLqr, ScalarGain) {
  const LqrDesign d = design_lqr(Matrix{{-1.0}}, Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{1.0}});
  EXPECT_NEAR(d.K(0, 0), std::sqrt(2.0) - 1.0, 1e-12);
}

TEST(UTra, Examples) {
  const LqrDesign& d = sec7().lqr;
  const ControlInput z = u_tra({}, d);
  EXPECT_EQ(z.v, 0.0);
  EXPECT_EQ(z.omega, 0.0);
  const ControlInput u = u_tra({1.0, 0.0, 0.0}, d);
  EXPECT_NEAR(u.v, 0.05, 0.011);
  EXPECT_NEAR(u.omega, -0.02, 0.011);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> r(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const ErrorState x{r(gen), r(gen), r(gen)};
    const double a = r(gen);
    const ControlInput lhs = u_tra(ErrorState::from(a * x.vec()), d);
    const ControlInput rhs = a * u_tra(x, d);
    EXPECT_NEAR(lhs.v, rhs.v, 1e-12);
    EXPECT_NEAR(lhs.omega, rhs.omega, 1e-12);
  }
}

TEST(UCom, Examples) {
  const ClosedLoop& cl = sec7();
  const ControlInput z = u_com({}, cl.lqr, cl.comp);
  EXPECT_EQ(z.v, 0.0);
  EXPECT_EQ(z.omega, 0.0);
  // Hand product on the printed P: P x = (0.965, 1.29, 5.20), B^T P x = (-0.965, 3 * 1.29 - 5.20 = -1.33).
  const ControlInput u = u_com({0.5, 0.5, 0.0}, cl.lqr, cl.comp);
  EXPECT_NEAR(u.v, 0.965 / 15.0, 1e-3);
  EXPECT_NEAR(u.omega, 1.33 / 15.0, 1e-3);
  const ControlInput u2 = u_com({1.0, 1.0, 0.0}, cl.lqr, cl.comp);
  EXPECT_NEAR(u2.v, 2.0 * u.v, 1e-14);
  EXPECT_NEAR(u2.omega, 2.0 * u.omega, 1e-14);
}

TEST(UCom, TraComGainIdentity) {
  const ClosedLoop& cl = sec7();
  const LqrDesign& d = cl.lqr;
  const Matrix gain = -((inverse(d.R) + inverse(cl.comp.Rprime)) * d.B.transpose() * d.P);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> r(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const ErrorState x{r(gen), r(gen), r(gen)};
    const Vector want = gain * x.vec();
    const ControlInput got = total_controller(Mode::TraCom, x, cl);
    EXPECT_NEAR(got.v, want[0], 1e-12);
    EXPECT_NEAR(got.omega, want[1], 1e-12);
    const ControlInput sum = u_tra(x, d) + u_com(x, d, cl.comp);
    EXPECT_EQ(got, sum);
  }
}

TEST(Gamma, AtOriginIsDiffusionTerm) {
  const ClosedLoop& cl = sec7();
  double sum_p = 0.0;
  for (double v : cl.lqr.P.values()) sum_p += v;
  const double g0 = gamma({}, cl.lqr, cl.comp, cl.vessel);
  EXPECT_NEAR(g0, 0.0064 * sum_p, 1e-12);
  EXPECT_NEAR(g0, 0.5704, 1e-3);
  EXPECT_GT(g0, 0.0);
}

TEST(Gamma, SignMatchesGeneratorDeficit) {
  // gamma(x) > 0 exactly when L h (u_tra) < b' H_sigma on the nonlinear model.
  const ClosedLoop& cl = sec7();
  const Zcbf z = cl.barrier();
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> lvl(0.0, 12.0);
  int pos = 0;
  int neg = 0;
  for (int i = 0; i < 5000; ++i) {
    const ErrorState x = on_level(random_direction(gen), z.P(), lvl(gen));
    const GeneratorParts gp = generator_h(x, u_tra(x, cl.lqr), cl.lqr, z, cl.vessel, Dynamics::Nonlinear);
    const double I_s = gp.Lh();
    const double J_s = cl.comp.b_prime * gp.H_sigma;
    const double g = gamma(x, cl.lqr, cl.comp, cl.vessel);
    EXPECT_NEAR(g, J_s - I_s, 1e-10 * (1.0 + std::abs(I_s) + std::abs(J_s)));
    if (std::abs(g) < 1e-9) continue;
    EXPECT_EQ(g > 0.0, I_s < J_s);
    (g > 0.0 ? pos : neg) += 1;
  }
  EXPECT_GT(pos, 100);
  EXPECT_GT(neg, 100);
}

TEST(PhiS, ZeroBranches) {
  const ClosedLoop& cl = sec7();
  EXPECT_EQ(phi_s({}, cl.lqr, cl.comp, cl.vessel), ControlInput{});
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> lvl(0.0, 12.0);
  int seen = 0;
  for (int i = 0; i < 2000; ++i) {
    const ErrorState x = on_level(random_direction(gen), cl.lqr.P, lvl(gen));
    if (gamma(x, cl.lqr, cl.comp, cl.vessel) > 0.0) continue;
    EXPECT_EQ(phi_s(x, cl.lqr, cl.comp, cl.vessel), ControlInput{});
    ++seen;
  }
  EXPECT_GT(seen, 20);
}

TEST(PhiS, ClosedLoopGeneratorEqualsDesignRate) {
  const ClosedLoop& cl = sec7();
  const Zcbf z = cl.barrier();
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> lvl(0.0, 12.0);
  int active = 0;
  for (int i = 0; i < 5000; ++i) {
    const ErrorState x = on_level(random_direction(gen), z.P(), lvl(gen));
    const ControlInput phi = phi_s(x, cl.lqr, cl.comp, cl.vessel);
    if (phi == ControlInput{}) continue;
    ++active;
    const GeneratorParts gp = generator_h(x, u_tra(x, cl.lqr) + phi, cl.lqr, z, cl.vessel, Dynamics::Nonlinear);
    const double scale = 1.0 + std::abs(gp.diffusion) + cl.comp.b_prime * gp.H_sigma;
    EXPECT_NEAR(gp.Lh(), cl.comp.b_prime * gp.H_sigma, 1e-8 * scale);
  }
  EXPECT_GT(active, 100);
}

TEST(UNlc, BlendBranches) {
  const ClosedLoop& cl = sec7();
  const CompensatorConfig& c = cl.comp;
  EXPECT_EQ(nlc_blend(c.mu, c), 1.0);
  EXPECT_EQ(nlc_blend(c.mu - 0.5, c), 1.0);
  EXPECT_EQ(nlc_blend(c.M_prime, c), 0.0);
  EXPECT_EQ(nlc_blend(c.M, c), 0.0);
  EXPECT_NEAR(nlc_blend(0.5 * (c.mu + c.M_prime), c), 0.5, 1e-15);
}

TEST(UNlc, ZeroAboveBlendLevelAndEqualsTra) {
  const ClosedLoop& cl = sec7();
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> lvl(0.0, cl.comp.M - cl.comp.M_prime);
  for (int i = 0; i < 1000; ++i) {
    const ErrorState x = on_level(random_direction(gen), cl.lqr.P, lvl(gen));
    ASSERT_GE(h(x, cl.barrier()), cl.comp.M_prime);
    EXPECT_EQ(u_nlc(x, cl.lqr, cl.comp, cl.vessel), ControlInput{});
    EXPECT_EQ(total_controller(Mode::TraNlc, x, cl), total_controller(Mode::Tra, x, cl));
  }
}

TEST(UNlc, ContinuousAcrossBlendSurfaces) {
  const ClosedLoop& cl = sec7();
  const double M = cl.comp.M;
  std::mt19937_64 gen(37);
  for (double surface : {cl.comp.mu, cl.comp.M_prime}) {
    for (int i = 0; i < 1000; ++i) {
      const Vector d = random_direction(gen);
      const ErrorState inner = on_level(d, cl.lqr.P, M - surface - 1e-9);
      const ErrorState outer = on_level(d, cl.lqr.P, M - surface + 1e-9);
      const ControlInput a = u_nlc(inner, cl.lqr, cl.comp, cl.vessel);
      const ControlInput b = u_nlc(outer, cl.lqr, cl.comp, cl.vessel);
      // phi_s itself may jump where gamma changes sign; the blend must not add a jump.
      const ControlInput pa = phi_s(inner, cl.lqr, cl.comp, cl.vessel);
      const ControlInput pb = phi_s(outer, cl.lqr, cl.comp, cl.vessel);
      if ((pa == ControlInput{}) != (pb == ControlInput{})) continue;
      const double un = std::max(std::hypot(a.v, a.omega), std::hypot(b.v, b.omega));
      EXPECT_LE(std::hypot(a.v - b.v, a.omega - b.omega), 1e-6 * (1.0 + un)) << "surface h=" << surface;
    }
  }
}

TEST(TotalController, ModeTraAtOriginAndParsing) {
  const ClosedLoop& cl = sec7();
  for (Mode m : {Mode::Tra, Mode::TraCom, Mode::TraNlc}) {
    EXPECT_EQ(total_controller(m, {}, cl), ControlInput{});
    EXPECT_EQ(parse_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_mode("tra+lqr"), ConfigError);
  EXPECT_THROW(parse_mode(""), ConfigError);
}

TEST(CompensatorConfig, Validation) {
  CompensatorConfig c = sec7().comp;
  EXPECT_NO_THROW(c.validate());
  CompensatorConfig bad = c;
  bad.mu = bad.M;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.M_prime = bad.mu;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.M_prime = bad.M;  // allowed
  EXPECT_NO_THROW(bad.validate());
  bad = c;
  bad.b_prime = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.Rprime = Matrix{{1.0, 0.0}, {0.0, -1.0}};
  EXPECT_THROW(bad.validate(), ConfigError);
}
