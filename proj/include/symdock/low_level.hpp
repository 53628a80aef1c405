/*
 * low_level.hpp
 *
 * Velocity feedback loop underneath the symbolic controller:
 *   - MIMO PID from velocity error to a commanded body wrench
 *   - extended-thrust least-squares allocation to azimuth/tunnel thrusters
 *   - EKF on the 6-state (pose, body velocity) discrete model
 */

#ifndef SYMDOCK_LOW_LEVEL_HPP_
#define SYMDOCK_LOW_LEVEL_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "vessel.hpp"

namespace symdock {

// ---------------------------------------------------------------- PID

struct PidGains {
  Eigen::Vector3d kp{30.0, 40.0, 10.0};
  Eigen::Vector3d ki{5.0, 8.0, 2.0};
  Eigen::Vector3d kd{1.0, 1.0, 0.1};
  /* clamp on the integral contribution, per axis (N, N, N m) */
  Eigen::Vector3d integral_limit{20.0, 20.0, 5.0};

  void validate() const {
    if ((kp.array() < 0).any() || (ki.array() < 0).any() || (kd.array() < 0).any())
      throw ConfigError("control: PID gains must be non-negative");
    if ((integral_limit.array() <= 0).any())
      throw ConfigError("control: integral_limit must be positive");
  }
};

struct PidState {
  Eigen::Vector3d integral = Eigen::Vector3d::Zero();
  Eigen::Vector3d prev_meas = Eigen::Vector3d::Zero();
  bool primed = false;
};

/*
 * tau = Kp e + I + D with e = ref - meas. I accumulates Ki e dt and is
 * clamped per axis (anti-windup). D differentiates the measurement, not the
 * error, so reference steps at epoch boundaries do not kick.
 */
inline Wrench pid_step(const BodyVelocity& ref, const BodyVelocity& meas, const PidGains& g,
                       double dt, PidState& st) {
  const Eigen::Vector3d m = meas.vec();
  const Eigen::Vector3d e = ref.vec() - m;
  st.integral = (st.integral + g.ki.cwiseProduct(e) * dt)
                    .cwiseMax(-g.integral_limit)
                    .cwiseMin(g.integral_limit);
  const Eigen::Vector3d rate = st.primed ? Eigen::Vector3d((m - st.prev_meas) / dt)
                                         : Eigen::Vector3d::Zero();
  st.prev_meas = m;
  st.primed = true;
  return Wrench::from(g.kp.cwiseProduct(e) + st.integral - g.kd.cwiseProduct(rate));
}

// ---------------------------------------------------------------- thrust allocation

enum class ThrusterKind { Azimuth, Tunnel };

struct Thruster {
  double lx = 0.0;
  double ly = 0.0;
  ThrusterKind kind = ThrusterKind::Azimuth;
  double max_force = 1.0;
};

struct ThrusterLayout {
  std::vector<Thruster> thrusters{{-0.4, 0.15, ThrusterKind::Azimuth, 5.0},
                                  {-0.4, -0.15, ThrusterKind::Azimuth, 5.0},
                                  {0.45, 0.0, ThrusterKind::Tunnel, 3.0}};
};

/* force magnitude and direction; tunnel thrusters use alpha = +-pi/2 for the sign */
struct ThrusterSetpoint {
  double force = 0.0;
  double alpha = 0.0;
};

/* 3 x k configuration matrix over the extended thrust vector (Fx, Fy per azimuth, Fy per tunnel) */
inline Eigen::MatrixXd configuration_matrix(const ThrusterLayout& layout) {
  int cols = 0;
  for (const auto& t : layout.thrusters)
    cols += t.kind == ThrusterKind::Azimuth ? 2 : 1;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, cols);
  int c = 0;
  for (const auto& t : layout.thrusters) {
    if (t.kind == ThrusterKind::Azimuth) {
      B(0, c) = 1.0;
      B(2, c) = -t.ly;
      B(1, c + 1) = 1.0;
      B(2, c + 1) = t.lx;
      c += 2;
    } else {
      B(1, c) = 1.0;
      B(2, c) = t.lx;
      c += 1;
    }
  }
  return B;
}

class ThrustAllocator {
public:
  explicit ThrustAllocator(ThrusterLayout layout = {}) : layout_(std::move(layout)) {
    if (layout_.thrusters.empty())
      throw RankDeficientLayout("allocation: no thrusters");
    for (const auto& t : layout_.thrusters)
      if (!(t.max_force > 0.0))
        throw ConfigError("allocation: thruster max_force must be positive");
    B_ = configuration_matrix(layout_);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B_);
    if (lu.rank() < 3)
      throw RankDeficientLayout("allocation: configuration matrix has rank " +
                                std::to_string(lu.rank()) + " < 3");
    pinv_ = B_.transpose() * (B_ * B_.transpose()).inverse();
  }

  const ThrusterLayout& layout() const { return layout_; }
  const Eigen::MatrixXd& configuration() const { return B_; }
  const Eigen::MatrixXd& pseudo_inverse() const { return pinv_; }

  /* minimum-norm extended thrust, then uniform scaling if any thruster saturates */
  std::vector<ThrusterSetpoint> allocate(const Wrench& tau) const {
    const Eigen::VectorXd f = pinv_ * tau.vec();
    std::vector<ThrusterSetpoint> out;
    out.reserve(layout_.thrusters.size());
    double scale = 1.0;
    int c = 0;
    for (const auto& t : layout_.thrusters) {
      ThrusterSetpoint sp;
      if (t.kind == ThrusterKind::Azimuth) {
        const double fx = f(c), fy = f(c + 1);
        sp.force = std::hypot(fx, fy);
        sp.alpha = sp.force > 0.0 ? std::atan2(fy, fx) : 0.0;
        c += 2;
      } else {
        sp.force = std::abs(f(c));
        sp.alpha = f(c) < 0.0 ? -kPi / 2 : kPi / 2;
        c += 1;
      }
      if (sp.force > t.max_force)
        scale = std::min(scale, t.max_force / sp.force);
      out.push_back(sp);
    }
    if (scale < 1.0)
      for (auto& sp : out)
        sp.force *= scale;
    return out;
  }

private:
  ThrusterLayout layout_;
  Eigen::MatrixXd B_;
  Eigen::MatrixXd pinv_;
};

inline std::vector<ThrusterSetpoint> allocate(const Wrench& tau, const ThrusterLayout& layout) {
  return ThrustAllocator(layout).allocate(tau);
}

/* body wrench produced by a set of thruster setpoints */
inline Wrench wrench_from(const std::vector<ThrusterSetpoint>& sps, const ThrusterLayout& layout) {
  Wrench w;
  for (std::size_t i = 0; i < sps.size() && i < layout.thrusters.size(); ++i) {
    const auto& t = layout.thrusters[i];
    double fx = 0.0, fy = 0.0;
    if (t.kind == ThrusterKind::Azimuth) {
      fx = sps[i].force * std::cos(sps[i].alpha);
      fy = sps[i].force * std::sin(sps[i].alpha);
    } else {
      fy = std::sin(sps[i].alpha) < 0.0 ? -sps[i].force : sps[i].force;
    }
    w.fx += fx;
    w.fy += fy;
    w.mz += t.lx * fy - t.ly * fx;
  }
  return w;
}

// ---------------------------------------------------------------- EKF

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

struct EkfState {
  Vector6d mean = Vector6d::Zero();
  Matrix6d cov = Matrix6d::Identity() * 1e-4;

  Pose pose() const { return {mean(0), mean(1), mean(2)}; }
  BodyVelocity velocity() const { return {mean(3), mean(4), mean(5)}; }
  static EkfState from(const Pose& eta, const BodyVelocity& nu, const Matrix6d& cov) {
    EkfState s;
    s.mean << eta.x, eta.y, wrap_angle(eta.psi), nu.u, nu.v, nu.r;
    s.cov = cov;
    return s;
  }
};

struct ObserverConfig {
  /* measurement standard deviations (m, m, rad) */
  Eigen::Vector3d meas_sigma{0.005, 0.005, 0.2 * kPi / 180.0};
  /* process noise variances per step, diagonal */
  Vector6d process_noise = (Vector6d() << 1e-8, 1e-8, 1e-8, 1e-6, 1e-6, 1e-6).finished();
  double rate_hz = 100.0;

  Eigen::Matrix3d meas_cov() const { return meas_sigma.cwiseAbs2().asDiagonal(); }
  Matrix6d process_cov() const { return process_noise.asDiagonal(); }
};

/* the Euler plant as a map on the stacked state */
inline Vector6d discrete_model(const Vector6d& x, const Wrench& tau, const VesselParams& p,
                               double dt) {
  const VesselState n =
      euler_step({x(0), x(1), x(2)}, {x(3), x(4), x(5)}, tau, p, dt);
  Vector6d out;
  out << n.eta.x, n.eta.y, n.eta.psi, n.nu.u, n.nu.v, n.nu.r;
  return out;
}

/* Jacobian of discrete_model with respect to the state, evaluated at x */
inline Matrix6d model_jacobian(const Vector6d& x, const VesselParams& p, double dt) {
  const double psi = x(2), u = x(3), v = x(4), r = x(5);
  const double c = std::cos(psi), s = std::sin(psi);
  Matrix6d F = Matrix6d::Identity();
  // pose rows: eta' = eta + dt R(psi) nu
  F(0, 2) = dt * (-s * u - c * v);
  F(1, 2) = dt * (c * u - s * v);
  F.block<3, 3>(0, 3) = dt * rotation_matrix(psi);

  // velocity rows: nu' = nu + dt M^-1 (tau + b - C(nu) nu - D(nu) nu)
  const double m11 = p.M(0, 0), m22 = p.M(1, 1);
  Eigen::Matrix3d dC;
  dC << 0.0, -m22 * r, -m22 * v,
        m11 * r, 0.0, m11 * u,
        (m22 - m11) * v, (m22 - m11) * u, 0.0;
  const Eigen::Vector3d a(std::abs(u), std::abs(v), std::abs(r));
  Eigen::Matrix3d dD = p.D_lin;
  for (int j = 0; j < 3; ++j)
    dD.col(j) += p.D_quad.col(j) * 2.0 * a(j);
  F.block<3, 3>(3, 3) = Eigen::Matrix3d::Identity() - dt * p.M.ldlt().solve(dC + dD);
  return F;
}

inline EkfState ekf_predict(const EkfState& st, const Wrench& tau, const VesselParams& p, double dt,
                            const Matrix6d& process_cov) {
  EkfState out;
  const Matrix6d F = model_jacobian(st.mean, p, dt);
  out.mean = discrete_model(st.mean, tau, p, dt);
  out.cov = F * st.cov * F.transpose() + process_cov;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

/* pose measurement update (Joseph form); nis receives the normalized innovation squared */
inline EkfState ekf_update(const EkfState& st, const Pose& meas, const Eigen::Matrix3d& R,
                           double* nis = nullptr) {
  Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
  H.block<3, 3>(0, 0).setIdentity();
  Eigen::Vector3d y(meas.x - st.mean(0), meas.y - st.mean(1), wrap_angle(meas.psi - st.mean(2)));
  const Eigen::Matrix3d S = H * st.cov * H.transpose() + R;
  const Eigen::Matrix<double, 6, 3> K = st.cov * H.transpose() * S.inverse();
  EkfState out;
  out.mean = st.mean + K * y;
  out.mean(2) = wrap_angle(out.mean(2));
  const Matrix6d IKH = Matrix6d::Identity() - K * H;
  out.cov = IKH * st.cov * IKH.transpose() + K * R * K.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  if (nis)
    *nis = y.dot(S.ldlt().solve(y));
  return out;
}

} // namespace symdock

#endif /* SYMDOCK_LOW_LEVEL_HPP_ */
