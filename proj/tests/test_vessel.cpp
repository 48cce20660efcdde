#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "szcbf/vessel.hpp"

using namespace szcbf;

namespace {

const VesselParams kSec7(3.0, 1.0, 0.1, Vector{0.08, 0.08, 0.08});
constexpr double kPi = std::numbers::pi;

void expect_state_near(const ErrorState& a, const ErrorState& b, double tol) {
  EXPECT_NEAR(a.x_e, b.x_e, tol);
  EXPECT_NEAR(a.y_e, b.y_e, tol);
  EXPECT_NEAR(a.theta_e, b.theta_e, tol);
}

}  // namespace

TEST(ErrorFromPoses, Examples) {
  const GlobalPose p{1.3, -0.2, 0.7};
  expect_state_near(error_from_poses(p, p), {}, 0.0);
  expect_state_near(error_from_poses({1.0, 2.0, 0.3}, {0.0, 0.0, 0.0}), {1.0, 2.0, 0.3}, 1e-15);
  expect_state_near(error_from_poses({1.0, 0.0, kPi / 2}, {0.0, 0.0, kPi / 2}), {0.0, -1.0, 0.0}, 1e-15);
}

TEST(GlobalFromError, Examples) {
  const GlobalPose ref{1.0, 0.0, kPi / 2};
  const GlobalPose g0 = global_from_error(ref, {});
  EXPECT_EQ(g0, ref);
  const GlobalPose g = global_from_error(ref, {0.0, -1.0, 0.0});
  EXPECT_NEAR(g.x, 0.0, 1e-15);
  EXPECT_NEAR(g.y, 0.0, 1e-15);
  EXPECT_NEAR(g.theta, kPi / 2, 1e-15);
}

TEST(GlobalFromError, RoundTripAndIsometry) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> pos(-20.0, 20.0);
  std::uniform_real_distribution<double> ang(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const GlobalPose ref{pos(gen), pos(gen), ang(gen)};
    const ErrorState e{pos(gen) / 4, pos(gen) / 4, ang(gen) / 4};
    const GlobalPose actual = global_from_error(ref, e);
    expect_state_near(error_from_poses(ref, actual), e, 1e-12);

    const GlobalPose a{pos(gen), pos(gen), ang(gen)};
    const ErrorState d = error_from_poses(ref, a);
    const double dx = ref.x - a.x;
    const double dy = ref.y - a.y;
    EXPECT_NEAR(d.x_e * d.x_e + d.y_e * d.y_e, dx * dx + dy * dy, 1e-12 * (1.0 + dx * dx + dy * dy));
  }
}

TEST(Drift, VanishesAtOrigin) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 50; ++i) {
    const VesselParams p(u(gen), u(gen) + 10.0, u(gen), Vector{0.0, 0.0, 0.0});
    const Vector f = drift_f({}, p);
    for (double v : f) EXPECT_EQ(v, 0.0);
  }
}

TEST(Drift, QuarterTurnHeading) {
  const Vector f = drift_f({0.0, 0.0, kPi / 2}, kSec7);
  EXPECT_NEAR(f[0], 0.3, 1e-15);
  EXPECT_NEAR(f[1], 1.0, 1e-15);
  EXPECT_NEAR(f[2], 0.1, 1e-15);
}

TEST(InputGain, Examples) {
  const Matrix g0 = input_gain_g({}, kSec7);
  const Matrix expect0{{-1.0, 0.0}, {0.0, 3.0}, {0.0, -1.0}};
  EXPECT_EQ(max_abs(g0 - expect0), 0.0);
  const Matrix g1 = input_gain_g({1.0, 2.0, 0.0}, kSec7);
  const Matrix expect1{{-1.0, 2.0}, {0.0, 2.0}, {0.0, -1.0}};
  EXPECT_EQ(max_abs(g1 - expect1), 0.0);
  const Vector gtG = g0.transpose() * kSec7.G();
  EXPECT_NEAR(gtG[0], -0.08, 1e-15);
  EXPECT_NEAR(gtG[1], 0.16, 1e-15);
}

TEST(Actuator, Examples) {
  ActuatorCommand a = actuator_transform({}, {}, kSec7);
  EXPECT_DOUBLE_EQ(a.v_sur, 1.0);
  EXPECT_DOUBLE_EQ(a.omega_yaw, 0.1);
  a = actuator_transform({0.0, 0.0, kPi / 2}, {}, kSec7);
  EXPECT_NEAR(a.v_sur, 0.0, 1e-15);
  EXPECT_NEAR(a.omega_yaw, 0.0, 1e-15);
  a = actuator_transform({}, {0.5, -0.1}, kSec7);
  EXPECT_DOUBLE_EQ(a.v_sur, 1.5);
  EXPECT_DOUBLE_EQ(a.omega_yaw, 0.0);
}

TEST(Linearize, PrintedMatrices) {
  const LinearModel lin = linearize(kSec7);
  const Matrix A{{0.0, 0.1, 0.3}, {-0.1, 0.0, 1.0}, {0.0, 0.0, 0.0}};
  const Matrix B{{-1.0, 0.0}, {0.0, 3.0}, {0.0, -1.0}};
  EXPECT_LT(max_abs(lin.A - A), 1e-15);
  EXPECT_EQ(max_abs(lin.B - B), 0.0);
  EXPECT_EQ(max_abs(lin.B - input_gain_g({}, kSec7)), 0.0);
}

TEST(Linearize, ZeroReferenceYaw) {
  const LinearModel lin = linearize(VesselParams(3.0, 1.0, 0.0, Vector{0.0, 0.0, 0.0}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(lin.A(i, j), (i == 1 && j == 2) ? 1.0 : 0.0);
}

TEST(Linearize, MatchesFiniteDifferenceJacobian) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const VesselParams p = trial == 0 ? kSec7 : VesselParams(u(gen), u(gen) + 7.0, u(gen), Vector{0.1, 0.0, 0.0});
    const Matrix A = linearize(p).A;
    const double step = 1e-5;
    for (std::size_t j = 0; j < 3; ++j) {
      Vector e(3, 0.0);
      e[j] = step;
      const Vector col = (1.0 / (2.0 * step)) * (drift_f(ErrorState::from(e), p) - drift_f(ErrorState::from(-e), p));
      for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(A(i, j), col[i], 1e-6);
    }
  }
}

TEST(Linearize, ControllableOverParameterSweep) {
  std::mt19937_64 gen(29);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const double c = u(gen);
    const double vr = u(gen);
    if (std::abs(vr) < 1e-3 || std::abs(c + 1.0) < 1e-3) continue;
    const LinearModel lin = linearize(VesselParams(c, vr, u(gen), Vector{0.0, 0.0, 0.0}));
    EXPECT_EQ(rank(controllability_matrix(lin.A, lin.B)), 3u) << "c=" << c << " v_r=" << vr;
    ++checked;
  }
  EXPECT_GT(checked, 400);
}

TEST(ReferenceStep, Examples) {
  const VesselParams straight(3.0, 1.0, 0.0, Vector{0.0, 0.0, 0.0});
  const GlobalPose r = reference_step({}, straight, 0.1);
  EXPECT_DOUBLE_EQ(r.x, 0.1);
  EXPECT_DOUBLE_EQ(r.y, 0.0);
  EXPECT_DOUBLE_EQ(r.theta, 0.0);

  const GlobalPose s = reference_step({}, kSec7, 0.001);
  EXPECT_NEAR(s.x, 0.001, 1e-15);
  EXPECT_NEAR(s.y, -0.0003, 1e-15);
  EXPECT_NEAR(s.theta, 0.0001, 1e-15);

  GlobalPose h{0.0, 0.0, 0.25};
  for (int k = 0; k < 1000; ++k) h = reference_step(h, kSec7, 0.01);
  EXPECT_NEAR(h.theta, 0.25 + 1000 * 0.1 * 0.01, 1e-12);
  EXPECT_THROW(reference_step({}, kSec7, 0.0), InvalidInput);
}

TEST(VesselParams, ConstructionErrors) {
  EXPECT_THROW(VesselParams(3.0, 0.0, 0.1, Vector{0.0, 0.0, 0.0}), InvalidInput);
  EXPECT_THROW(VesselParams(-1.0, 1.0, 0.1, Vector{0.0, 0.0, 0.0}), InvalidInput);
  EXPECT_THROW(VesselParams(3.0, 1.0, 0.1, Vector{0.0, NAN, 0.0}), InvalidInput);
  EXPECT_THROW(VesselParams(3.0, 1.0, 0.1, Vector{0.0, 0.0}), InvalidInput);
  EXPECT_NO_THROW(VesselParams(-0.5, -1.0, 0.0, Vector{0.0, 0.0, 0.0}));
}
