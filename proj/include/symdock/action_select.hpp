/*
 * action_select.hpp
 *
 * Picks the executed command from the synthesized action list by minimizing
 * J(s) = b^T W b with b = [s; s - s_prev]. W is diagonal and switches on the
 * sign of the candidate's surge component.
 */

#ifndef SYMDOCK_ACTION_SELECT_HPP_
#define SYMDOCK_ACTION_SELECT_HPP_

#include <array>
#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "errors.hpp"
#include "vessel.hpp"

namespace symdock {

struct SelectionWeights {
  /* used when the candidate surge is negative */
  std::array<double, 6> backward{7.5, 3.0, 1.0, 1.0, 1.0, 2.5};
  /* used otherwise, including surge == 0 */
  std::array<double, 6> forward{1.0, 6.0, 1.0, 1.0, 1.0, 2.5};
  friend bool operator==(const SelectionWeights&, const SelectionWeights&) = default;
};

struct SelectorState {
  BodyVelocity sigma_prev{};
};

inline const std::array<double, 6>& weight_diagonal(const BodyVelocity& sigma,
                                                    const SelectionWeights& w = {}) {
  return sigma.u < 0.0 ? w.backward : w.forward;
}

inline Eigen::Matrix<double, 6, 6> weight_for(const BodyVelocity& sigma,
                                              const SelectionWeights& w = {}) {
  const auto& d = weight_diagonal(sigma, w);
  Eigen::Matrix<double, 6, 1> v;
  v << d[0], d[1], d[2], d[3], d[4], d[5];
  return v.asDiagonal();
}

inline double cost(const BodyVelocity& sigma, const SelectorState& st,
                   const SelectionWeights& w = {}) {
  const std::array<double, 6> beta{sigma.u,
                                   sigma.v,
                                   sigma.r,
                                   sigma.u - st.sigma_prev.u,
                                   sigma.v - st.sigma_prev.v,
                                   sigma.r - st.sigma_prev.r};
  const auto& d = weight_diagonal(sigma, w);
  double j = 0.0;
  for (std::size_t i = 0; i < 6; ++i)
    j += d[i] * beta[i] * beta[i];
  return j;
}

/* index of the cheapest action; ties go to the earliest entry */
inline std::size_t select_index(std::span<const BodyVelocity> actions, const SelectorState& st,
                                const SelectionWeights& w = {}) {
  if (actions.empty())
    throw EmptyActionList("select: no candidate actions");
  std::size_t best = 0;
  double best_j = cost(actions[0], st, w);
  for (std::size_t i = 1; i < actions.size(); ++i) {
    const double j = cost(actions[i], st, w);
    if (j < best_j) {
      best_j = j;
      best = i;
    }
  }
  return best;
}

/* argmin of the cost; records the choice as the new previous action */
inline BodyVelocity select(std::span<const BodyVelocity> actions, SelectorState& st,
                           const SelectionWeights& w = {}) {
  const BodyVelocity chosen = actions[select_index(actions, st, w)];
  st.sigma_prev = chosen;
  return chosen;
}

} // namespace symdock

#endif /* SYMDOCK_ACTION_SELECT_HPP_ */
