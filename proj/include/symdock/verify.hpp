/*
 * verify.hpp
 *
 * Independent checks on a synthesized controller.
 *
 * containment: draws (cell, input) pairs and initial states inside the cell,
 * integrates the kinematics with RK4 and checks the end state lands inside
 * the stored successor box.
 *
 * consistency: re-derives every value from its successors and checks each
 * controller input strictly decreases the value without touching an
 * obstacle cell.
 */

#ifndef SYMDOCK_VERIFY_HPP_
#define SYMDOCK_VERIFY_HPP_

#include <cstdint>
#include <random>

#include "abstraction.hpp"
#include "synthesis.hpp"

namespace symdock {

/* constant-velocity kinematics integrated with classic RK4 */
inline Pose integrate_kinematics(const Pose& eta, const BodyVelocity& nu, double tau_s,
                                 int substeps = 100) {
  const double h = tau_s / substeps;
  auto f = [&](const Eigen::Vector3d& s) -> Eigen::Vector3d {
    const double c = std::cos(s(2)), sn = std::sin(s(2));
    return {c * nu.u - sn * nu.v, sn * nu.u + c * nu.v, nu.r};
  };
  Eigen::Vector3d s = eta.vec();
  for (int i = 0; i < substeps; ++i) {
    const Eigen::Vector3d k1 = f(s);
    const Eigen::Vector3d k2 = f(s + 0.5 * h * k1);
    const Eigen::Vector3d k3 = f(s + 0.5 * h * k2);
    const Eigen::Vector3d k4 = f(s + h * k3);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return {s(0), s(1), s(2)};
}

inline bool box_contains(const TransitionBox& b, const CellId& c, const Grid& g) {
  if (b.blocked)
    return false;
  if (c.ix < b.x0 || c.ix > b.x1 || c.iy < b.y0 || c.iy > b.y1)
    return false;
  const int k = ((c.ipsi - b.p0) % g.npsi() + g.npsi()) % g.npsi();
  return k < b.pn;
}

struct ContainmentReport {
  std::size_t pairs = 0;
  std::size_t samples = 0;
  std::size_t violations = 0;
};

/*
 * pairs are drawn among non-blocked transitions; blocked pairs are never
 * used by the controller and carry no obligation
 */
inline ContainmentReport check_containment(const TransitionCache& tc, std::size_t pairs,
                                           std::size_t per_pair, std::uint64_t seed) {
  const Grid& g = tc.grid();
  const std::size_t m = tc.inputs().size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_cell(0, g.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_input(0, m - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ContainmentReport rep;
  while (rep.pairs < pairs) {
    const std::size_t c = pick_cell(rng), u = pick_input(rng);
    const TransitionBox& b = tc.at(c, u);
    if (b.blocked)
      continue;
    ++rep.pairs;
    const CellId id = g.cell(c);
    const Rect r = g.cell_rect(id.ix, id.iy);
    const auto [plo, phi] = g.heading_interval(id.ipsi);
    for (std::size_t s = 0; s < per_pair; ++s) {
      const Pose x0{r.x_min + unit(rng) * r.width(), r.y_min + unit(rng) * r.height(),
                    plo + unit(rng) * (phi - plo)};
      const Pose x1 = integrate_kinematics(x0, tc.inputs()[u], tc.tau_s());
      ++rep.samples;
      bool ok = x1.x >= g.lower()[0] && x1.x <= g.upper()[0] && x1.y >= g.lower()[1] &&
                x1.y <= g.upper()[1];
      ok = ok && box_contains(b, quantize(x1, g), g);
      if (!ok)
        ++rep.violations;
    }
  }
  return rep;
}

struct ConsistencyReport {
  std::size_t cells_checked = 0;
  std::size_t violations = 0;
};

inline ConsistencyReport check_consistency(const SymbolicSystem& sys, const SynthesisResult& res) {
  const Grid& g = sys.grid();
  const TransitionCache& tc = *sys.transitions;
  const std::size_t m = sys.inputs().size();
  const auto& V = res.values.v;
  ConsistencyReport rep;
  for (std::size_t c = 0; c < g.size(); ++c) {
    ++rep.cells_checked;
    const CellLabel l = sys.labels[c];
    if (l == CellLabel::Target) {
      rep.violations += V[c] != 0 || res.controller[c] != 0;
      continue;
    }
    if (l == CellLabel::Obstacle) {
      rep.violations += V[c] != kUnreachable || res.controller[c] != 0;
      continue;
    }
    Value best = kUnreachable;
    for (std::size_t u = 0; u < m; ++u) {
      const TransitionBox& b = tc.at(c, u);
      Value worst = b.blocked ? kUnreachable : 0;
      bool hits_obstacle = b.blocked;
      for (const CellId& s : box_cells(b, g)) {
        const std::size_t si = g.index(s);
        hits_obstacle = hits_obstacle || sys.labels[si] == CellLabel::Obstacle;
        worst = std::max(worst, V[si]);
      }
      if (worst != kUnreachable)
        best = std::min(best, worst + 1);
      const bool listed = (res.controller[c] >> u) & 1u;
      if (listed && (hits_obstacle || worst == kUnreachable || worst >= V[c]))
        ++rep.violations;
      if (!listed && V[c] != kUnreachable && worst < V[c])
        ++rep.violations;
    }
    if (best != V[c])
      ++rep.violations;
  }
  return rep;
}

} // namespace symdock

#endif /* SYMDOCK_VERIFY_HPP_ */
