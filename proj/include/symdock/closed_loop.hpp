/*
 * closed_loop.hpp
 *
 * Simulation of the full docking loop. Every epoch the planner receives the
 * observed pose and the previously commanded action and returns the next
 * velocity reference; between epochs the PID, thrust allocation and Euler
 * plant run at the fine step dt.
 *
 * The planner is a plain callable so that the same runner drives both the
 * in-process synthesizer and the TCP service client.
 */

#ifndef SYMDOCK_CLOSED_LOOP_HPP_
#define SYMDOCK_CLOSED_LOOP_HPP_

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "action_select.hpp"
#include "config.hpp"
#include "low_level.hpp"
#include "synthesis.hpp"

namespace symdock {

struct PlanRequest {
  Pose state;
  BodyVelocity prev_action;
  int epoch_id = 0;
};

struct PlanResponse {
  enum class Kind { Action, AtTarget, NotWinning, EpochMiss };
  Kind kind = Kind::NotWinning;
  BodyVelocity action{};
  int candidate_count = 0;
  Value value = -1;
  double synth_ms = 0.0;
  /* full candidate list; only filled by in-process planning */
  std::vector<BodyVelocity> candidates;
};

using Planner = std::function<PlanResponse(const PlanRequest&)>;

/*
 * One synthesis epoch: re-synthesize for the scenario, query the controller
 * at the observed pose and select among the admissible actions, starting from
 * the caller's previous action.
 */
inline PlanResponse plan_epoch(const ScenarioFile& sf, const Synthesizer& synth,
                               const PlanRequest& req) {
  PlanResponse resp;
  Synthesizer::Outcome out;
  try {
    out = synth.resynthesize(sf.scenario, sf.synthesis);
  } catch (const NoWinningRegion&) {
    resp.kind = PlanResponse::Kind::NotWinning;
    return resp;
  }
  resp.synth_ms = out.elapsed_ms;
  const SafeActions sa = safe_actions(out.result, out.system, req.state);
  if (std::holds_alternative<AtTarget>(sa)) {
    resp.kind = PlanResponse::Kind::AtTarget;
    resp.value = 0;
    return resp;
  }
  if (std::holds_alternative<NotWinning>(sa)) {
    resp.kind = PlanResponse::Kind::NotWinning;
    return resp;
  }
  const auto& list = std::get<ActionList>(sa);
  SelectorState st{req.prev_action};
  resp.kind = PlanResponse::Kind::Action;
  resp.action = select(list.actions, st, sf.weights);
  resp.candidate_count = static_cast<int>(list.actions.size());
  resp.value = list.value;
  resp.candidates = list.actions;
  return resp;
}

inline Planner in_process_planner(const ScenarioFile& sf, std::shared_ptr<Synthesizer> synth = nullptr) {
  if (!synth)
    synth = std::make_shared<Synthesizer>();
  return [sf, synth](const PlanRequest& req) { return plan_epoch(sf, *synth, req); };
}

enum class Observer { Truth, Ekf };

struct EpisodeConfig {
  Pose start{};
  double dt = 0.01;
  double epoch = 2.0;
  double max_duration = 600.0;
  std::uint64_t seed = 0;
  /* measurement noise on the EKF path */
  bool noise = false;
  Observer observer = Observer::Truth;
  /* zero-velocity hold after reaching the target */
  double hold = 5.0;

  void validate() const {
    if (!(dt > 0.0) || !(epoch >= dt))
      throw ConfigError("episode: require 0 < dt <= epoch");
    if (!(max_duration > 0.0))
      throw ConfigError("episode: max_duration must be positive");
    if (hold < 0.0)
      throw ConfigError("episode: hold must be non-negative");
  }
};

struct TrajectoryRow {
  double t = 0.0;
  Pose eta;
  BodyVelocity nu;
  BodyVelocity nu_ref;
  Wrench tau;
  int epoch_id = 0;
};

using Trajectory = std::vector<TrajectoryRow>;

enum class Outcome { Docked, Collided, Timeout, NotWinning };

inline const char* to_string(Outcome o) {
  switch (o) {
  case Outcome::Docked:
    return "docked";
  case Outcome::Collided:
    return "collided";
  case Outcome::Timeout:
    return "timeout";
  case Outcome::NotWinning:
    return "not_winning";
  }
  return "unknown";
}

struct EpisodeMetrics {
  Outcome outcome = Outcome::Timeout;
  /* first epoch time at which the controller reported the target; NaN if never */
  double completion_time = std::numeric_limits<double>::quiet_NaN();
  double min_clearance = std::numeric_limits<double>::infinity();
  /* mean of (nu_ref - nu)^2 per axis: (m/s)^2, (m/s)^2, (rad/s)^2 */
  std::array<double, 3> tracking_mse{0.0, 0.0, 0.0};
  std::vector<double> synth_ms;
  int epochs = 0;
  int epoch_misses = 0;
  bool collided = false;

  double yaw_mse_deg2() const {
    const double k = 180.0 / kPi;
    return tracking_mse[2] * k * k;
  }
};

/* tracking MSE and clearance over the log; outcome fields are left untouched */
inline void compute_metrics(const Trajectory& traj, const Scenario& sc, EpisodeMetrics& m) {
  if (traj.empty())
    throw Error("compute_metrics: empty trajectory");
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  double clearance = std::numeric_limits<double>::infinity();
  for (const auto& row : traj) {
    const double du = row.nu_ref.u - row.nu.u, dv = row.nu_ref.v - row.nu.v,
                 dr = row.nu_ref.r - row.nu.r;
    acc[0] += du * du;
    acc[1] += dv * dv;
    acc[2] += dr * dr;
    clearance = std::min(clearance, footprint_clearance(row.eta, sc));
  }
  const double n = static_cast<double>(traj.size());
  m.tracking_mse = {acc[0] / n, acc[1] / n, acc[2] / n};
  m.min_clearance = clearance;
}

inline EpisodeMetrics compute_metrics(const Trajectory& traj, const Scenario& sc) {
  EpisodeMetrics m;
  compute_metrics(traj, sc, m);
  return m;
}

struct EpisodeResult {
  Trajectory trajectory;
  EpisodeMetrics metrics;
};

inline EpisodeResult run_episode(const ScenarioFile& sf, const EpisodeConfig& cfg,
                                 const Planner& planner) {
  cfg.validate();
  const Scenario& sc = sf.scenario;
  if (!sc.boundary.contains(cfg.start.x, cfg.start.y))
    throw InvalidStart("episode: start pose outside the boundary");
  if (footprint_collision(cfg.start, sc))
    throw InvalidStart("episode: start footprint collides");

  const ThrustAllocator alloc(sf.thrusters);
  const long steps_per_epoch = std::max(1L, std::lround(cfg.epoch / cfg.dt));
  const long hold_steps = std::lround(cfg.hold / cfg.dt);
  const long max_steps = std::lround(cfg.max_duration / cfg.dt);
  const long meas_every = std::max(1L, std::lround(1.0 / (sf.observer.rate_hz * cfg.dt)));

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Matrix3d R = sf.observer.meas_cov();
  const Matrix6d Q = sf.observer.process_cov();

  VesselState truth{Pose{cfg.start.x, cfg.start.y, wrap_angle(cfg.start.psi)}, {}};
  Matrix6d P0 = Matrix6d::Zero();
  P0.diagonal() << R(0, 0), R(1, 1), R(2, 2), 1e-4, 1e-4, 1e-4;
  EkfState ekf = EkfState::from(truth.eta, truth.nu, P0);
  PidState pid;

  EpisodeResult res;
  EpisodeMetrics& m = res.metrics;
  Trajectory& traj = res.trajectory;
  traj.reserve(static_cast<std::size_t>(std::min(max_steps, 200000L)) + 1);

  BodyVelocity nu_ref{};
  BodyVelocity prev_action{};
  int misses = 0;
  long k = 0;
  int epoch_id = 0;
  bool finished = false;

  auto observed_pose = [&] { return cfg.observer == Observer::Ekf ? ekf.pose() : truth.eta; };
  auto observed_velocity = [&] {
    return cfg.observer == Observer::Ekf ? ekf.velocity() : truth.nu;
  };
  auto log_row = [&](const Wrench& tau) {
    traj.push_back({static_cast<double>(k) * cfg.dt, truth.eta, truth.nu, nu_ref, tau, epoch_id});
  };

  // Advance the low-level loop by n steps; returns false when the episode ends.
  auto run_steps = [&](long n) {
    for (long i = 0; i < n; ++i) {
      if (k >= max_steps) {
        m.outcome = Outcome::Timeout;
        return false;
      }
      const Wrench tau_cmd = pid_step(nu_ref, observed_velocity(), sf.control, cfg.dt, pid);
      const Wrench tau = wrench_from(alloc.allocate(tau_cmd), sf.thrusters);
      log_row(tau_cmd);
      truth = euler_step(truth.eta, truth.nu, tau, sc.vessel, cfg.dt);
      ++k;
      if (cfg.observer == Observer::Ekf) {
        ekf = ekf_predict(ekf, tau, sc.vessel, cfg.dt, Q);
        if (k % meas_every == 0) {
          Pose z = truth.eta;
          if (cfg.noise) {
            z.x += sf.observer.meas_sigma(0) * gauss(rng);
            z.y += sf.observer.meas_sigma(1) * gauss(rng);
            z.psi = wrap_angle(z.psi + sf.observer.meas_sigma(2) * gauss(rng));
          }
          ekf = ekf_update(ekf, z, R);
        }
      }
      if (footprint_collision(truth.eta, sc)) {
        m.collided = true;
        m.outcome = Outcome::Collided;
        log_row(Wrench{});
        return false;
      }
    }
    return true;
  };

  while (!finished) {
    if (k >= max_steps) {
      m.outcome = Outcome::Timeout;
      break;
    }
    const Pose obs = observed_pose();
    PlanResponse resp;
    if (!sc.boundary.contains(obs.x, obs.y))
      resp.kind = PlanResponse::Kind::NotWinning;
    else
      resp = planner({obs, prev_action, epoch_id});
    ++m.epochs;
    if (resp.kind != PlanResponse::Kind::EpochMiss)
      m.synth_ms.push_back(resp.synth_ms);

    switch (resp.kind) {
    case PlanResponse::Kind::Action:
      nu_ref = resp.action;
      prev_action = resp.action;
      misses = 0;
      finished = !run_steps(steps_per_epoch);
      break;
    case PlanResponse::Kind::EpochMiss:
      // hold the previous action once, then stop
      ++m.epoch_misses;
      if (++misses > 1)
        nu_ref = {};
      finished = !run_steps(steps_per_epoch);
      break;
    case PlanResponse::Kind::NotWinning:
      m.outcome = Outcome::NotWinning;
      log_row(Wrench{});
      finished = true;
      break;
    case PlanResponse::Kind::AtTarget: {
      const double t_arrive = static_cast<double>(k) * cfg.dt;
      nu_ref = {};
      prev_action = {};
      misses = 0;
      if (!run_steps(hold_steps)) {
        finished = true;
        break;
      }
      const Pose end = truth.eta;
      if (sc.target.contains(end.x, end.y)) {
        m.outcome = Outcome::Docked;
        m.completion_time = t_arrive;
        log_row(Wrench{});
        finished = true;
      }
      // drifted out of the target during the hold: keep planning
      break;
    }
    }
    ++epoch_id;
  }

  compute_metrics(traj, sc, m);
  return res;
}

inline EpisodeResult run_episode(const ScenarioFile& sf, const EpisodeConfig& cfg) {
  return run_episode(sf, cfg, in_process_planner(sf));
}

// ---------------------------------------------------------------- output

/* shortest round-trip decimal representation */
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline constexpr const char* kTrajectoryHeader =
    "t,x,y,psi,u,v,r,u_ref,v_ref,r_ref,tau_x,tau_y,tau_n,epoch_id";

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << kTrajectoryHeader << '\n';
  for (const auto& r : traj) {
    const double vals[] = {r.t,        r.eta.x,    r.eta.y,    r.eta.psi, r.nu.u,
                           r.nu.v,     r.nu.r,     r.nu_ref.u, r.nu_ref.v, r.nu_ref.r,
                           r.tau.fx,   r.tau.fy,   r.tau.mz};
    for (double v : vals)
      os << format_double(v) << ',';
    os << r.epoch_id << '\n';
  }
}

/* parse a trajectory CSV written by write_trajectory_csv */
inline Trajectory read_trajectory_csv(std::istream& is) {
  Trajectory out;
  std::string line;
  if (!std::getline(is, line))
    return out;
  if (line != kTrajectoryHeader)
    throw ConfigError("trajectory: unexpected CSV header");
  while (std::getline(is, line)) {
    if (line.empty())
      continue;
    std::vector<double> f;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = std::min(line.find(',', pos), line.size());
      double v = 0.0;
      const auto r = std::from_chars(line.data() + pos, line.data() + comma, v);
      if (r.ec != std::errc())
        throw ConfigError("trajectory: malformed number in row " + std::to_string(out.size() + 1));
      f.push_back(v);
      pos = comma + 1;
    }
    if (f.size() != 14)
      throw ConfigError("trajectory: expected 14 columns in row " + std::to_string(out.size() + 1));
    out.push_back({f[0], {f[1], f[2], f[3]}, {f[4], f[5], f[6]}, {f[7], f[8], f[9]},
                   {f[10], f[11], f[12]}, static_cast<int>(f[13])});
  }
  return out;
}

inline json metrics_to_json(const EpisodeMetrics& m) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"outcome", to_string(m.outcome)},
          {"completion_time_s", num(m.completion_time)},
          {"min_clearance_m", num(m.min_clearance)},
          {"tracking_mse", {m.tracking_mse[0], m.tracking_mse[1], m.tracking_mse[2]}},
          {"tracking_mse_yaw_deg2", m.yaw_mse_deg2()},
          {"synth_ms", m.synth_ms},
          {"epochs", m.epochs},
          {"epoch_misses", m.epoch_misses},
          {"collided", m.collided}};
}

} // namespace symdock

#endif /* SYMDOCK_CLOSED_LOOP_HPP_ */
