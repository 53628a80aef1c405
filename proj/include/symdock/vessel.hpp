/*
 * vessel.hpp
 *
 * 3-DOF surface vessel model: body-to-world kinematics, rigid-body kinetics
 * with diagonal-mass Coriolis and linear+quadratic damping, and the
 * Forward-Euler plant update used by the simulator.
 */

#ifndef SYMDOCK_VESSEL_HPP_
#define SYMDOCK_VESSEL_HPP_

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "errors.hpp"

namespace symdock {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/* wrap an angle into the half-open interval [-pi, pi) */
inline double wrap_angle(double a) {
  double w = a - kTwoPi * std::floor((a + kPi) / kTwoPi);
  // floor() may leave w == pi after rounding
  if (w >= kPi)
    w -= kTwoPi;
  if (w < -kPi)
    w = -kPi;
  return w;
}

/* world-frame configuration eta = (x, y, psi) */
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;

  Eigen::Vector3d vec() const { return {x, y, psi}; }
  static Pose from(const Eigen::Vector3d& v) { return {v(0), v(1), wrap_angle(v(2))}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

/* body-frame velocity nu = (surge u, sway v, yaw rate r) */
struct BodyVelocity {
  double u = 0.0;
  double v = 0.0;
  double r = 0.0;

  Eigen::Vector3d vec() const { return {u, v, r}; }
  static BodyVelocity from(const Eigen::Vector3d& w) { return {w(0), w(1), w(2)}; }
  bool finite() const { return std::isfinite(u) && std::isfinite(v) && std::isfinite(r); }
  friend bool operator==(const BodyVelocity&, const BodyVelocity&) = default;
};

/* body-frame force/moment (fx, fy, mz) */
struct Wrench {
  double fx = 0.0;
  double fy = 0.0;
  double mz = 0.0;

  Eigen::Vector3d vec() const { return {fx, fy, mz}; }
  static Wrench from(const Eigen::Vector3d& w) { return {w(0), w(1), w(2)}; }
  friend bool operator==(const Wrench&, const Wrench&) = default;
};

struct VesselParams {
  Eigen::Matrix3d M = Eigen::Vector3d(20.0, 25.0, 2.5).asDiagonal();
  Eigen::Matrix3d D_lin = Eigen::Vector3d(2.0, 7.0, 0.5).asDiagonal();
  Eigen::Matrix3d D_quad = Eigen::Vector3d(10.0, 20.0, 1.0).asDiagonal();
  Wrench bias{};
  double length = 1.0;
  double beam = 0.3;

  /* throws ConfigError when the physical invariants do not hold */
  void validate() const {
    if (!M.isApprox(M.transpose(), 1e-12))
      throw ConfigError("vessel: inertia matrix M must be symmetric");
    Eigen::LLT<Eigen::Matrix3d> llt(M);
    if (llt.info() != Eigen::Success)
      throw ConfigError("vessel: inertia matrix M must be positive definite");
    for (int i = 0; i < 3; ++i)
      if (D_lin(i, i) < 0.0 || D_quad(i, i) < 0.0)
        throw ConfigError("vessel: damping diagonals must be non-negative");
    if (!(length > 0.0) || !(beam > 0.0))
      throw ConfigError("vessel: length and beam must be positive");
  }
};

/* R(psi): body-fixed velocities to world-frame rates */
inline Eigen::Matrix3d rotation_matrix(double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  Eigen::Matrix3d R;
  R << c, -s, 0.0,
       s,  c, 0.0,
       0.0, 0.0, 1.0;
  return R;
}

/* skew-symmetric rigid-body Coriolis/centripetal matrix from the diagonal of M */
inline Eigen::Matrix3d coriolis_matrix(const BodyVelocity& nu, const VesselParams& p) {
  const double m11 = p.M(0, 0), m22 = p.M(1, 1);
  Eigen::Matrix3d C;
  C << 0.0,          0.0,         -m22 * nu.v,
       0.0,          0.0,          m11 * nu.u,
       m22 * nu.v,  -m11 * nu.u,   0.0;
  return C;
}

/* D(nu) nu with D(nu) = D_lin + D_quad diag(|u|,|v|,|r|) */
inline Wrench damping_wrench(const BodyVelocity& nu, const VesselParams& p) {
  const Eigen::Vector3d n = nu.vec();
  const Eigen::Matrix3d D = p.D_lin + p.D_quad * n.cwiseAbs().asDiagonal().toDenseMatrix();
  return Wrench::from(D * n);
}

/* continuous-time acceleration M^-1 (tau + b - C(nu) nu - D(nu) nu) */
inline Eigen::Vector3d body_acceleration(const BodyVelocity& nu, const Wrench& tau,
                                         const VesselParams& p) {
  const Eigen::Vector3d n = nu.vec();
  const Eigen::Vector3d rhs =
      tau.vec() + p.bias.vec() - coriolis_matrix(nu, p) * n - damping_wrench(nu, p).vec();
  return p.M.ldlt().solve(rhs);
}

struct VesselState {
  Pose eta;
  BodyVelocity nu;
  friend bool operator==(const VesselState&, const VesselState&) = default;
};

/* one Forward-Euler step of the kinematics and kinetics */
inline VesselState euler_step(const Pose& eta, const BodyVelocity& nu, const Wrench& tau,
                              const VesselParams& p, double dt) {
  const Eigen::Vector3d eta_next = eta.vec() + dt * rotation_matrix(eta.psi) * nu.vec();
  const Eigen::Vector3d nu_next = nu.vec() + dt * body_acceleration(nu, tau, p);
  return {Pose::from(eta_next), BodyVelocity::from(nu_next)};
}

} // namespace symdock

#endif /* SYMDOCK_VESSEL_HPP_ */
