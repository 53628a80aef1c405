/* test_low_level.cpp */

#include <gtest/gtest.h>

#include <random>

#include "common.hpp"

using namespace symdock;

TEST(Pid, ZeroErrorGivesZeroWrench) {
  PidState st;
  const Wrench w = pid_step({0.1, 0, 0}, {0.1, 0, 0}, {}, 0.01, st);
  EXPECT_EQ(w, Wrench{});
}

TEST(Pid, FreshStateSingleStep) {
  // Kp e + Ki e dt with no derivative contribution on the first call
  PidState st;
  const PidGains g;
  const Wrench w = pid_step({0.1, 0, 0}, {0, 0, 0}, g, 0.01, st);
  EXPECT_NEAR(w.fx, 30.0 * 0.1 + 5.0 * 0.1 * 0.01, 1e-15);
  EXPECT_NEAR(w.fx, 3.005, 1e-15);
  EXPECT_DOUBLE_EQ(w.fy, 0.0);
  EXPECT_DOUBLE_EQ(w.mz, 0.0);
}

TEST(Pid, DerivativeActsOnMeasurement) {
  PidState st;
  const PidGains g;
  pid_step({0, 0, 0}, {0, 0, 0}, g, 0.01, st);
  // reference step: no derivative kick
  const Wrench a = pid_step({0.2, 0, 0}, {0, 0, 0}, g, 0.01, st);
  EXPECT_NEAR(a.fx, 30.0 * 0.2 + 5.0 * 0.2 * 0.01, 1e-12);
  // measurement step: derivative opposes it
  const Wrench b = pid_step({0.2, 0, 0}, {0.01, 0, 0}, g, 0.01, st);
  const double integral = 5.0 * 0.2 * 0.01 + 5.0 * 0.19 * 0.01;
  EXPECT_NEAR(b.fx, 30.0 * 0.19 + integral - 1.0 * 0.01 / 0.01, 1e-12);
}

TEST(Pid, IntegralClamped) {
  PidState st;
  const PidGains g;
  for (int i = 0; i < 1000; ++i)
    pid_step({1.0, 1.0, 1.0}, {0, 0, 0}, g, 0.01, st);
  EXPECT_LE(st.integral(0), 20.0);
  EXPECT_LE(st.integral(1), 20.0);
  EXPECT_LE(st.integral(2), 5.0);
  for (int i = 0; i < 100000; ++i)
    pid_step({1.0, 1.0, 1.0}, {0, 0, 0}, g, 0.01, st);
  EXPECT_DOUBLE_EQ(st.integral(0), 20.0);
  EXPECT_DOUBLE_EQ(st.integral(1), 20.0);
  EXPECT_DOUBLE_EQ(st.integral(2), 5.0);
}

TEST(Allocation, ZeroWrench) {
  for (const auto& sp : allocate({0, 0, 0}, {}))
    EXPECT_DOUBLE_EQ(sp.force, 0.0);
}

TEST(Allocation, PureSurgeSplitsEvenlyAgainstDensePseudoInverse) {
  const ThrusterLayout layout;
  const auto sp = allocate({2, 0, 0}, layout);
  ASSERT_EQ(sp.size(), 3u);
  EXPECT_NEAR(sp[0].force, 1.0, 1e-12);
  EXPECT_NEAR(sp[1].force, 1.0, 1e-12);
  EXPECT_NEAR(sp[0].alpha, 0.0, 1e-12);
  EXPECT_NEAR(sp[1].alpha, 0.0, 1e-12);
  EXPECT_NEAR(sp[2].force, 0.0, 1e-12);

  // dense oracle: SVD-based least-squares solution of B f = tau
  Eigen::MatrixXd B(3, 5);
  B << 1, 0, 1, 0, 0,
       0, 1, 0, 1, 1,
       -0.15, -0.4, 0.15, -0.4, 0.45;
  const Eigen::VectorXd f =
      B.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(Eigen::Vector3d(2, 0, 0));
  EXPECT_NEAR(f(0), 1.0, 1e-12);
  EXPECT_NEAR(f(2), 1.0, 1e-12);
  EXPECT_NEAR(configuration_matrix(layout).cwiseAbs().maxCoeff(), B.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(configuration_matrix(layout).isApprox(B, 0.0));
}

TEST(Allocation, EnvelopeRoundTrip) {
  const ThrusterLayout layout;
  const ThrustAllocator alloc(layout);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> f(-2.0, 2.0), m(-0.5, 0.5);
  for (int i = 0; i < 5000; ++i) {
    const Wrench tau{f(rng), f(rng), m(rng)};
    const auto sp = alloc.allocate(tau);
    for (std::size_t k = 0; k < sp.size(); ++k)
      EXPECT_LE(sp[k].force, layout.thrusters[k].max_force);
    const Wrench back = wrench_from(sp, layout);
    EXPECT_NEAR(back.fx, tau.fx, 1e-9);
    EXPECT_NEAR(back.fy, tau.fy, 1e-9);
    EXPECT_NEAR(back.mz, tau.mz, 1e-9);
  }
}

TEST(Allocation, SaturationScalesUniformly) {
  const ThrusterLayout layout;
  const Wrench tau{30, 0, 0};
  const Wrench back = wrench_from(allocate(tau, layout), layout);
  EXPECT_NEAR(back.fx, 10.0, 1e-9);
  EXPECT_NEAR(back.fy, 0.0, 1e-9);
  const Wrench mixed{14, 4, 1};
  const Wrench mb = wrench_from(allocate(mixed, layout), layout);
  const double k = mb.fx / mixed.fx;
  EXPECT_LT(k, 1.0);
  EXPECT_NEAR(mb.fy, k * mixed.fy, 1e-9);
  EXPECT_NEAR(mb.mz, k * mixed.mz, 1e-9);
}

TEST(Allocation, RankDeficientLayoutThrows) {
  ThrusterLayout one;
  one.thrusters = {{0.0, 0.0, ThrusterKind::Tunnel, 1.0}};
  EXPECT_THROW(ThrustAllocator{one}, RankDeficientLayout);
  ThrusterLayout none;
  none.thrusters.clear();
  EXPECT_THROW(ThrustAllocator{none}, RankDeficientLayout);
}

TEST(WrenchFrom, Examples) {
  ThrusterLayout l;
  l.thrusters = {{-0.4, 0.0, ThrusterKind::Azimuth, 5.0}};
  EXPECT_EQ(wrench_from({{0.0, 0.0}}, l), Wrench{});
  const Wrench w = wrench_from({{1.0, kPi / 2}}, l);
  EXPECT_NEAR(w.fx, 0.0, 1e-15);
  EXPECT_NEAR(w.fy, 1.0, 1e-15);
  EXPECT_NEAR(w.mz, -0.4, 1e-15);
}

TEST(VelocityLoop, SurgeStepSettlesWithinTwoSeconds) {
  const ScenarioFile& sf = testing_support::harbor();
  const ThrustAllocator alloc(sf.thrusters);
  VesselState s{{4, 3, 0}, {0, 0, 0}};
  PidState pid;
  const BodyVelocity ref{0.2, 0, 0};
  for (int k = 0; k < 200; ++k) {
    const Wrench cmd = pid_step(ref, s.nu, sf.control, 0.01, pid);
    s = euler_step(s.eta, s.nu, wrench_from(alloc.allocate(cmd), sf.thrusters), sf.scenario.vessel,
                   0.01);
  }
  EXPECT_NEAR(s.nu.u, 0.2, 0.02);
  // and stays there
  for (int k = 0; k < 300; ++k) {
    const Wrench cmd = pid_step(ref, s.nu, sf.control, 0.01, pid);
    s = euler_step(s.eta, s.nu, wrench_from(alloc.allocate(cmd), sf.thrusters), sf.scenario.vessel,
                   0.01);
    EXPECT_NEAR(s.nu.u, 0.2, 0.02);
  }
}

namespace {

Vector6d random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 8.0), ang(-3.0, 3.0), vel(-0.3, 0.3);
  Vector6d x;
  x << pos(rng), pos(rng), ang(rng), vel(rng), vel(rng), vel(rng);
  // keep away from the |.| kinks of the quadratic damping
  for (int i = 3; i < 6; ++i)
    if (std::abs(x(i)) < 1e-3)
      x(i) = 1e-3;
  return x;
}

} // namespace

TEST(Ekf, JacobianMatchesFiniteDifferences) {
  const VesselParams p;
  const Wrench tau{1.0, -0.5, 0.2};
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    const Vector6d x = random_state(rng);
    const Matrix6d F = model_jacobian(x, p, 0.01);
    Matrix6d Fd;
    for (int j = 0; j < 6; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
      Vector6d xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      Vector6d d = discrete_model(xp, tau, p, 0.01) - discrete_model(xm, tau, p, 0.01);
      d(2) = wrap_angle(d(2));
      Fd.col(j) = d / (2 * h);
    }
    EXPECT_LE((F - Fd).norm(), 1e-6 * F.norm());
  }
}

TEST(Ekf, PredictMatchesTruthWithoutNoise) {
  const VesselParams p;
  VesselState truth{{1, 1, 0.2}, {0.1, 0, 0.05}};
  EkfState ekf = EkfState::from(truth.eta, truth.nu, Matrix6d::Identity() * 1e-4);
  const Wrench tau{1.0, 0.3, -0.1};
  for (int k = 0; k < 500; ++k) {
    truth = euler_step(truth.eta, truth.nu, tau, p, 0.01);
    ekf = ekf_predict(ekf, tau, p, 0.01, Matrix6d::Zero());
  }
  EXPECT_EQ(ekf.pose(), truth.eta);
  EXPECT_EQ(ekf.velocity(), truth.nu);
}

TEST(Ekf, CovarianceTraceGrowsUnderPredict) {
  const ObserverConfig oc;
  EkfState st = EkfState::from({1, 1, 0}, {0.1, 0, 0}, Matrix6d::Identity() * 1e-6);
  double prev = st.cov.trace();
  for (int k = 0; k < 1000; ++k) {
    st = ekf_predict(st, {}, {}, 0.01, oc.process_cov());
    EXPECT_GE(st.cov.trace(), prev);
    prev = st.cov.trace();
  }
}

TEST(Ekf, ZeroInnovationKeepsMean) {
  const EkfState st = EkfState::from({2, 3, 0.5}, {0.1, -0.05, 0.02}, Matrix6d::Identity() * 0.01);
  double nis = -1;
  const EkfState up = ekf_update(st, st.pose(), ObserverConfig{}.meas_cov(), &nis);
  EXPECT_TRUE(up.mean.isApprox(st.mean, 1e-15));
  EXPECT_DOUBLE_EQ(nis, 0.0);
  // posterior position block is no larger than the prior
  const Eigen::Matrix3d diff = st.cov.block<3, 3>(0, 0) - up.cov.block<3, 3>(0, 0);
  EXPECT_GE(diff.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff(), -1e-15);
}

TEST(Ekf, HeadingInnovationWraps) {
  const EkfState st = EkfState::from({2, 3, kPi - 0.01}, {0, 0, 0}, Matrix6d::Identity() * 0.01);
  const EkfState up = ekf_update(st, {2, 3, -kPi + 0.01}, ObserverConfig{}.meas_cov());
  EXPECT_LT(std::abs(wrap_angle(up.mean(2) - kPi)), 0.011);
}

TEST(Ekf, ConvergesFromOffsetWithNoiseFreeMeasurements) {
  const VesselParams p;
  const ObserverConfig oc;
  VesselState truth{{4, 3, 0.3}, {0.1, 0.0, 0.0}};
  Matrix6d P0 = Matrix6d::Identity() * 0.01;
  EkfState ekf = EkfState::from({4.05, 2.95, 0.3}, {0, 0, 0}, P0);
  const Wrench tau = damping_wrench(truth.nu, p);
  for (int k = 0; k < 200; ++k) {
    truth = euler_step(truth.eta, truth.nu, tau, p, 0.01);
    ekf = ekf_predict(ekf, tau, p, 0.01, oc.process_cov());
    ekf = ekf_update(ekf, truth.eta, oc.meas_cov());
  }
  EXPECT_LT(std::hypot(ekf.mean(0) - truth.eta.x, ekf.mean(1) - truth.eta.y), 1e-3);
}

TEST(Ekf, NormalizedInnovationWithinChiSquareBounds) {
  // matched noise: process noise enters the truth, measurement noise the sensor
  const VesselParams p;
  const ObserverConfig oc;
  const Matrix6d Q = oc.process_cov();
  const Eigen::Matrix3d R = oc.meas_cov();
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01(0.0, 1.0);
  VesselState truth{{4, 3, 0.0}, {0.1, 0.0, 0.02}};
  EkfState ekf = EkfState::from(truth.eta, truth.nu, Q * 10);
  const Wrench tau = damping_wrench(truth.nu, p);
  double sum = 0.0;
  int inside = 0;
  const int steps = 10000;
  for (int k = 0; k < steps; ++k) {
    Vector6d x = discrete_model((Vector6d() << truth.eta.x, truth.eta.y, truth.eta.psi,
                                 truth.nu.u, truth.nu.v, truth.nu.r)
                                    .finished(),
                                tau, p, 0.01);
    for (int i = 0; i < 6; ++i)
      x(i) += std::sqrt(Q(i, i)) * n01(rng);
    truth = {{x(0), x(1), wrap_angle(x(2))}, {x(3), x(4), x(5)}};
    const Pose z{truth.eta.x + std::sqrt(R(0, 0)) * n01(rng),
                 truth.eta.y + std::sqrt(R(1, 1)) * n01(rng),
                 wrap_angle(truth.eta.psi + std::sqrt(R(2, 2)) * n01(rng))};
    ekf = ekf_predict(ekf, tau, p, 0.01, Q);
    double nis = 0.0;
    ekf = ekf_update(ekf, z, R, &nis);
    sum += nis;
    // chi-square, 3 dof: 95% two-sided interval [0.216, 9.348]
    inside += nis <= 9.348;
  }
  const double mean = sum / steps;
  EXPECT_GT(mean, 2.7);
  EXPECT_LT(mean, 3.3);
  EXPECT_GT(static_cast<double>(inside) / steps, 0.93);
}
