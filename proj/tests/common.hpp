/*
 * common.hpp
 *
 * Shared fixtures and independent oracles for the test binaries.
 */

#ifndef SYMDOCK_TESTS_COMMON_HPP_
#define SYMDOCK_TESTS_COMMON_HPP_

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <symdock/symdock.hpp>

namespace testing_support {

using namespace symdock;

inline std::string scenario_path(const std::string& name) {
  return std::string(SYMDOCK_SCENARIO_DIR) + "/" + name;
}

inline const ScenarioFile& harbor() {
  static const ScenarioFile sf = load_scenario_file(scenario_path("harbor.json"));
  return sf;
}

inline const ScenarioFile& coarse() {
  static const ScenarioFile sf = load_scenario_file(scenario_path("coarse.json"));
  return sf;
}

/* one synthesis of harbor shared by every test in a binary */
inline const Synthesizer::Outcome& harbor_solution() {
  static const Synthesizer::Outcome out =
      Synthesizer().resynthesize(harbor().scenario, harbor().synthesis);
  return out;
}

/* scalar RK4 of the constant-velocity kinematics, written independently of the library */
inline std::array<double, 3> rk4_kinematics(double x, double y, double psi, double u, double v,
                                            double r, double T, int n) {
  const double h = T / n;
  auto f = [&](double p, double out[3]) {
    out[0] = std::cos(p) * u - std::sin(p) * v;
    out[1] = std::sin(p) * u + std::cos(p) * v;
    out[2] = r;
  };
  for (int i = 0; i < n; ++i) {
    double k1[3], k2[3], k3[3], k4[3];
    f(psi, k1);
    f(psi + 0.5 * h * k1[2], k2);
    f(psi + 0.5 * h * k2[2], k3);
    f(psi + h * k3[2], k4);
    x += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    y += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    psi += h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
  }
  return {x, y, psi};
}

/* collision-free starts with x >= x_min whose cell is winning and not target */
inline std::vector<Pose> sample_winning_starts(std::size_t n, std::uint64_t seed,
                                               double x_min = 6.0) {
  const ScenarioFile& sf = harbor();
  const auto& sol = harbor_solution();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x_min, sf.scenario.boundary.x_max);
  std::uniform_real_distribution<double> uy(sf.scenario.boundary.y_min, sf.scenario.boundary.y_max);
  std::uniform_real_distribution<double> up(-kPi, kPi);
  std::vector<Pose> out;
  while (out.size() < n) {
    const Pose p{ux(rng), uy(rng), up(rng)};
    if (footprint_collision(p, sf.scenario))
      continue;
    if (std::holds_alternative<ActionList>(safe_actions(sol.result, sol.system, p)))
      out.push_back(p);
  }
  return out;
}

} // namespace testing_support

#endif /* SYMDOCK_TESTS_COMMON_HPP_ */
