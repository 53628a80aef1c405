/* test_vessel.cpp */

#include <gtest/gtest.h>

#include <random>

#include "common.hpp"

using namespace symdock;

namespace {

/* independent scalar right-hand side for diagonal M and diagonal damping */
void vessel_rhs(const double s[6], const double tau[3], const VesselParams& p, double out[6]) {
  const double psi = s[2], u = s[3], v = s[4], r = s[5];
  const double m1 = p.M(0, 0), m2 = p.M(1, 1), m3 = p.M(2, 2);
  out[0] = std::cos(psi) * u - std::sin(psi) * v;
  out[1] = std::sin(psi) * u + std::cos(psi) * v;
  out[2] = r;
  const double cor[3] = {-m2 * v * r, m1 * u * r, m2 * v * u - m1 * u * v};
  const double d[3] = {(p.D_lin(0, 0) + p.D_quad(0, 0) * std::abs(u)) * u,
                       (p.D_lin(1, 1) + p.D_quad(1, 1) * std::abs(v)) * v,
                       (p.D_lin(2, 2) + p.D_quad(2, 2) * std::abs(r)) * r};
  out[3] = (tau[0] - cor[0] - d[0]) / m1;
  out[4] = (tau[1] - cor[1] - d[1]) / m2;
  out[5] = (tau[2] - cor[2] - d[2]) / m3;
}

void rk4(double s[6], const double tau[3], const VesselParams& p, double T, int n) {
  const double h = T / n;
  for (int k = 0; k < n; ++k) {
    double k1[6], k2[6], k3[6], k4[6], t[6];
    vessel_rhs(s, tau, p, k1);
    for (int i = 0; i < 6; ++i) t[i] = s[i] + 0.5 * h * k1[i];
    vessel_rhs(t, tau, p, k2);
    for (int i = 0; i < 6; ++i) t[i] = s[i] + 0.5 * h * k2[i];
    vessel_rhs(t, tau, p, k3);
    for (int i = 0; i < 6; ++i) t[i] = s[i] + h * k3[i];
    vessel_rhs(t, tau, p, k4);
    for (int i = 0; i < 6; ++i) s[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
}

double state_error(const VesselState& a, const double s[6]) {
  const double d[6] = {a.eta.x - s[0], a.eta.y - s[1], wrap_angle(a.eta.psi - s[2]),
                       a.nu.u - s[3],  a.nu.v - s[4],  a.nu.r - s[5]};
  double m = 0.0;
  for (double x : d) m = std::max(m, std::abs(x));
  return m;
}

} // namespace

TEST(WrapAngle, Examples) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), -kPi);
  EXPECT_NEAR(wrap_angle(1.5 * kPi), -0.5 * kPi, 1e-15);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), -kPi);
}

TEST(WrapAngle, RangeProperty) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-100.0, 100.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = d(rng), w = wrap_angle(a);
    EXPECT_GE(w, -kPi);
    EXPECT_LT(w, kPi);
    EXPECT_NEAR(std::remainder(a - w, kTwoPi), 0.0, 1e-9);
  }
}

TEST(RotationMatrix, Identity) {
  EXPECT_TRUE(rotation_matrix(0.0).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
}

TEST(RotationMatrix, QuarterTurn) {
  const Eigen::Vector3d w = rotation_matrix(kPi / 2) * Eigen::Vector3d(1, 0, 0);
  EXPECT_NEAR(w(0), 0.0, 1e-15);
  EXPECT_NEAR(w(1), 1.0, 1e-15);
  EXPECT_NEAR(w(2), 0.0, 1e-15);
}

TEST(RotationMatrix, WorldRatesAgainstScalarOracle) {
  const Eigen::Vector3d w = rotation_matrix(0.4) * Eigen::Vector3d(0.2, 0.0, 0.2);
  EXPECT_NEAR(w(0), 0.2 * std::cos(0.4), 1e-15);
  EXPECT_NEAR(w(1), 0.2 * std::sin(0.4), 1e-15);
  // frozen reference values
  EXPECT_NEAR(w(0), 0.184212, 5e-7);
  EXPECT_NEAR(w(1), 0.077884, 5e-7);
  EXPECT_DOUBLE_EQ(w(2), 0.2);
}

TEST(RotationMatrix, OrthogonalFor1000RandomHeadings) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Matrix3d R = rotation_matrix(d(rng));
    EXPECT_LT((R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Coriolis, ZeroAtRest) {
  EXPECT_TRUE(coriolis_matrix({0, 0, 0}, {}).isZero(0.0));
}

TEST(Coriolis, SurgeEntries) {
  const Eigen::Matrix3d C = coriolis_matrix({1, 0, 0}, {});
  Eigen::Matrix3d expect = Eigen::Matrix3d::Zero();
  expect(1, 2) = 20.0;
  expect(2, 1) = -20.0;
  EXPECT_TRUE(C.isApprox(expect, 0.0));
}

TEST(Coriolis, SkewSymmetricAndPowerNeutral) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const BodyVelocity nu{d(rng), d(rng), d(rng)};
    const Eigen::Matrix3d C = coriolis_matrix(nu, {});
    EXPECT_TRUE((C + C.transpose()).isZero(0.0));
    EXPECT_NEAR(nu.vec().dot(C * nu.vec()), 0.0, 1e-14);
  }
}

TEST(Damping, Examples) {
  const Wrench z = damping_wrench({0, 0, 0}, {});
  EXPECT_EQ(z, Wrench{});
  const Wrench w = damping_wrench({0.2, 0, 0}, {});
  EXPECT_NEAR(w.fx, 2 * 0.2 + 10 * 0.2 * 0.2, 1e-15);
  EXPECT_NEAR(w.fx, 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(w.fy, 0.0);
  EXPECT_DOUBLE_EQ(w.mz, 0.0);
}

TEST(Damping, OpposesSurge) {
  for (double u : {-1.0, -0.3, -1e-3, 1e-3, 0.3, 1.0})
    EXPECT_EQ(std::signbit(damping_wrench({u, 0, 0}, {}).fx), std::signbit(u));
}

TEST(EulerStep, StraightSurgeWithCompensatedWrench) {
  // the wrench that cancels damping keeps the velocity constant
  const VesselParams p;
  const BodyVelocity nu{0.2, 0, 0};
  const Wrench tau = damping_wrench(nu, p);
  const VesselState s = euler_step({0, 0, 0}, nu, tau, p, 0.1);
  EXPECT_NEAR(s.eta.x, 0.02, 1e-15);
  EXPECT_DOUBLE_EQ(s.eta.y, 0.0);
  EXPECT_DOUBLE_EQ(s.eta.psi, 0.0);
  EXPECT_NEAR(s.nu.u, 0.2, 1e-15);
}

TEST(EulerStep, AccelerationFromRest) {
  const VesselState s = euler_step({0, 0, 0}, {0, 0, 0}, {2, 0, 0}, {}, 0.01);
  EXPECT_NEAR(s.nu.u, 2.0 / 20.0 * 0.01, 1e-15);
  EXPECT_NEAR(s.nu.u, 0.001, 1e-15);
  EXPECT_DOUBLE_EQ(s.nu.v, 0.0);
  EXPECT_DOUBLE_EQ(s.nu.r, 0.0);
}

TEST(EulerStep, HeadingWraps) {
  const VesselParams p;
  const BodyVelocity nu{0, 0, 0.2};
  const VesselState s = euler_step({0, 0, kPi - 0.01}, nu, damping_wrench(nu, p), p, 0.1);
  EXPECT_NEAR(s.eta.psi, -kPi + 0.01, 1e-12);
}

TEST(EulerStep, KineticEnergyNonIncreasingWithoutForcing) {
  const VesselParams p;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    Eigen::Vector3d n(d(rng), d(rng), d(rng));
    if (n.norm() > 1.0)
      n.normalize();
    const BodyVelocity nu = BodyVelocity::from(n);
    for (double dt : {0.001, 0.005, 0.01}) {
      const VesselState s = euler_step({0, 0, 0}, nu, {}, p, dt);
      const double e0 = 0.5 * n.dot(p.M * n);
      const double e1 = 0.5 * s.nu.vec().dot(p.M * s.nu.vec());
      EXPECT_LE(e1, e0 + 1e-15);
    }
  }
}

TEST(EulerStep, OneStepAgreesWithRefinedStepsToSecondOrder) {
  const VesselParams p;
  const double tau[3] = {1.5, -0.7, 0.2};
  for (double dt : {0.01, 0.005, 0.0025}) {
    const double s0[6] = {1.0, 2.0, 0.3, 0.15, -0.05, 0.1};
    VesselState coarse =
        euler_step({s0[0], s0[1], s0[2]}, {s0[3], s0[4], s0[5]}, {tau[0], tau[1], tau[2]}, p, dt);
    VesselState fine{{s0[0], s0[1], s0[2]}, {s0[3], s0[4], s0[5]}};
    for (int k = 0; k < 10; ++k)
      fine = euler_step(fine.eta, fine.nu, {tau[0], tau[1], tau[2]}, p, dt / 10);
    double ref[6] = {s0[0], s0[1], s0[2], s0[3], s0[4], s0[5]};
    rk4(ref, tau, p, dt, 100);
    EXPECT_LT(state_error(coarse, ref), 1.0 * dt * dt);
    EXPECT_LT(state_error(fine, ref), 1.0 * dt * dt);
  }
}

TEST(EulerStep, FirstOrderGlobalConvergenceAgainstRk4) {
  const VesselParams p;
  const double tau[3] = {1.0, 0.5, -0.1};
  auto run = [&](double dt) {
    VesselState s{{0, 0, 0.1}, {0.1, 0.0, 0.05}};
    const int n = static_cast<int>(std::lround(2.0 / dt));
    for (int k = 0; k < n; ++k)
      s = euler_step(s.eta, s.nu, {tau[0], tau[1], tau[2]}, p, dt);
    double ref[6] = {0, 0, 0.1, 0.1, 0.0, 0.05};
    rk4(ref, tau, p, 2.0, 20000);
    return state_error(s, ref);
  };
  const double e1 = run(0.01), e2 = run(0.001);
  const double ratio = e1 / e2;
  EXPECT_GT(ratio, 8.0);
  EXPECT_LT(ratio, 12.0);
}

TEST(VesselParams, ValidateRejectsBadParameters) {
  VesselParams p;
  EXPECT_NO_THROW(p.validate());
  p.M(0, 1) = 1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.M(2, 2) = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.D_lin(1, 1) = -0.1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.beam = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
}
