/*
 * abstraction.hpp
 *
 * Finite symbolic model of the sampled kinematic vessel: a uniform grid over
 * (x, y, psi) with a periodic heading dimension, a finite input grid of
 * commanded body velocities, cell labels derived from the scenario, and
 * over-approximated one-period transitions.
 *
 * Properties:
 * - cells are half-open boxes [lo, lo + res) except the last cell of the
 *   x and y dimensions, which also owns the upper boundary
 * - the successor set of (cell, input) is always a box of cells, so it is
 *   stored as index ranges; the heading range may wrap around
 * - a transition whose reachable box leaves the (x, y) domain is Blocked
 */

#ifndef SYMDOCK_ABSTRACTION_HPP_
#define SYMDOCK_ABSTRACTION_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "errors.hpp"
#include "scenario.hpp"
#include "vessel.hpp"

namespace symdock {

struct CellId {
  int ix = 0;
  int iy = 0;
  int ipsi = 0;
  friend bool operator==(const CellId&, const CellId&) = default;
};

class Grid {
public:
  Grid() = default;

  /* grid covering boundary with square-ish (x, y) cells and heading_bins over [-pi, pi) */
  Grid(const Rect& boundary, double x_res, double y_res, int heading_bins)
      : lower_{boundary.x_min, boundary.y_min, -kPi},
        res_{x_res, y_res, kTwoPi / heading_bins} {
    if (!(x_res > 0.0) || !(y_res > 0.0) || heading_bins < 1)
      throw ConfigError("grid: resolutions and heading bin count must be positive");
    const double fx = boundary.width() / x_res, fy = boundary.height() / y_res;
    n_[0] = static_cast<int>(std::lround(fx));
    n_[1] = static_cast<int>(std::lround(fy));
    n_[2] = heading_bins;
    if (n_[0] < 1 || n_[1] < 1 || std::abs(fx - n_[0]) > 1e-9 || std::abs(fy - n_[1]) > 1e-9)
      throw ConfigError("grid: resolution must divide the boundary extent exactly");
    upper_ = {boundary.x_max, boundary.y_max, kPi};
  }

  const std::array<double, 3>& lower() const { return lower_; }
  const std::array<double, 3>& upper() const { return upper_; }
  const std::array<double, 3>& res() const { return res_; }
  const std::array<int, 3>& counts() const { return n_; }
  int nx() const { return n_[0]; }
  int ny() const { return n_[1]; }
  int npsi() const { return n_[2]; }
  std::size_t size() const { return std::size_t(n_[0]) * n_[1] * n_[2]; }

  std::size_t index(const CellId& c) const {
    return (std::size_t(c.ipsi) * n_[1] + c.iy) * n_[0] + c.ix;
  }
  CellId cell(std::size_t idx) const {
    const int ix = static_cast<int>(idx % n_[0]);
    idx /= n_[0];
    return {ix, static_cast<int>(idx % n_[1]), static_cast<int>(idx / n_[1])};
  }
  bool in_range(const CellId& c) const {
    return c.ix >= 0 && c.ix < n_[0] && c.iy >= 0 && c.iy < n_[1] && c.ipsi >= 0 && c.ipsi < n_[2];
  }

  /* axis-aligned (x, y) rectangle of a cell */
  Rect cell_rect(int ix, int iy) const {
    return {lower_[0] + ix * res_[0], lower_[0] + (ix + 1) * res_[0], lower_[1] + iy * res_[1],
            lower_[1] + (iy + 1) * res_[1]};
  }
  /* heading interval [lo, hi) of a heading bin */
  std::array<double, 2> heading_interval(int ipsi) const {
    return {lower_[2] + ipsi * res_[2], lower_[2] + (ipsi + 1) * res_[2]};
  }

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  std::array<double, 3> lower_{0.0, 0.0, -kPi};
  std::array<double, 3> upper_{0.0, 0.0, kPi};
  std::array<double, 3> res_{1.0, 1.0, kTwoPi};
  std::array<int, 3> n_{0, 0, 0};
};

inline CellId quantize(const Pose& eta, const Grid& g) {
  if (!(eta.x >= g.lower()[0] && eta.x <= g.upper()[0] && eta.y >= g.lower()[1] &&
        eta.y <= g.upper()[1]))
    throw OutOfDomain("quantize: pose (" + std::to_string(eta.x) + ", " + std::to_string(eta.y) +
                      ") outside the grid domain");
  auto idx = [&](double a, int d) {
    const int i = static_cast<int>(std::floor((a - g.lower()[d]) / g.res()[d]));
    return std::clamp(i, 0, g.counts()[d] - 1);
  };
  return {idx(eta.x, 0), idx(eta.y, 1), idx(wrap_angle(eta.psi), 2)};
}

inline Pose cell_center(const CellId& c, const Grid& g) {
  return {g.lower()[0] + (c.ix + 0.5) * g.res()[0], g.lower()[1] + (c.iy + 0.5) * g.res()[1],
          g.lower()[2] + (c.ipsi + 0.5) * g.res()[2]};
}

/* surge/sway/yaw input bounds U1 */
inline constexpr std::array<double, 2> kSurgeBounds{-0.1, 0.2};
inline constexpr std::array<double, 2> kSwayBounds{-0.1, 0.1};
inline constexpr std::array<double, 2> kYawBounds{-0.2, 0.2};
/* controller tables store input sets as 64-bit masks */
inline constexpr std::size_t kMaxInputs = 64;

class InputGrid {
public:
  InputGrid() : InputGrid({-0.1, 0.0, 0.1, 0.2}, {-0.1, 0.0, 0.1}, {-0.2, -0.1, 0.0, 0.1, 0.2}) {}

  InputGrid(std::vector<double> surge, std::vector<double> sway, std::vector<double> yaw)
      : surge_(std::move(surge)), sway_(std::move(sway)), yaw_(std::move(yaw)) {
    auto check = [](const std::vector<double>& vals, const std::array<double, 2>& b,
                    const char* name) {
      if (vals.empty())
        throw ConfigError(std::string("inputs: ") + name + " list is empty");
      for (double v : vals)
        if (!(v >= b[0] - 1e-12 && v <= b[1] + 1e-12))
          throw ConfigError(std::string("inputs: ") + name + " value " + std::to_string(v) +
                            " outside the admissible input set");
    };
    check(surge_, kSurgeBounds, "surge");
    check(sway_, kSwayBounds, "sway");
    check(yaw_, kYawBounds, "yaw");
    for (double s : surge_)
      for (double w : sway_)
        for (double y : yaw_)
          all_.push_back({s, w, y});
    if (all_.size() > kMaxInputs)
      throw ConfigError("inputs: at most 64 input combinations are supported");
  }

  std::size_t size() const { return all_.size(); }
  const BodyVelocity& operator[](std::size_t i) const { return all_[i]; }
  const std::vector<BodyVelocity>& all() const { return all_; }
  const std::vector<double>& surge() const { return surge_; }
  const std::vector<double>& sway() const { return sway_; }
  const std::vector<double>& yaw() const { return yaw_; }

  friend bool operator==(const InputGrid& a, const InputGrid& b) { return a.all_ == b.all_; }

private:
  std::vector<double> surge_, sway_, yaw_;
  std::vector<BodyVelocity> all_;
};

/* sin(z)/z, accurate near zero */
inline double sinc(double z) {
  if (std::abs(z) < 1e-4)
    return 1.0 - z * z / 6.0;
  return std::sin(z) / z;
}

/*
 * exact flow of the kinematics under a constant body velocity over tau_s:
 * psi advances by r tau_s and the position moves along the chord of the arc,
 * tau_s sinc(r tau_s / 2) R(psi0 + r tau_s / 2) (u, v)
 */
inline Pose nominal_successor(const Pose& eta, const BodyVelocity& nu, double tau_s) {
  const double half = 0.5 * nu.r * tau_s;
  const double mid = eta.psi + half;
  const double k = tau_s * sinc(half);
  const double c = std::cos(mid), s = std::sin(mid);
  return {eta.x + k * (nu.u * c - nu.v * s), eta.y + k * (nu.u * s + nu.v * c),
          eta.psi + nu.r * tau_s};
}

/*
 * componentwise bound on the deviation of two flows whose initial states
 * differ by at most radius; heading deviations are preserved and rotate the
 * translational velocity, whose magnitude is sqrt(u^2 + v^2)
 */
inline std::array<double, 3> growth_bound(const std::array<double, 3>& radius, const BodyVelocity& nu,
                                          double tau_s) {
  const double kappa = std::hypot(nu.u, nu.v);
  const double spread = kappa * tau_s * radius[2];
  return {radius[0] + spread, radius[1] + spread, radius[2]};
}

/* successor box of one (cell, input) pair as index ranges */
struct TransitionBox {
  std::int16_t x0 = 0, x1 = -1;
  std::int16_t y0 = 0, y1 = -1;
  /* first heading index (may be negative or >= npsi before wrapping) and count */
  std::int16_t p0 = 0, pn = 0;
  bool blocked = true;
};

/* reachable-set inflation absorbing floating-point rounding in the flow */
inline constexpr double kBoxSlack = 1e-9;

inline TransitionBox successor_box(const CellId& id, const BodyVelocity& input, const Grid& g,
                                   double tau_s, double growth_scale = 1.0) {
  const Pose c = cell_center(id, g);
  const Pose n = nominal_successor(c, input, tau_s);
  const std::array<double, 3> half{0.5 * g.res()[0], 0.5 * g.res()[1], 0.5 * g.res()[2]};
  std::array<double, 3> r = growth_bound(half, input, tau_s);
  // growth_scale < 1 deliberately breaks soundness; used only by mutation checks
  for (int d = 0; d < 2; ++d)
    r[d] = half[d] + growth_scale * (r[d] - half[d]);

  TransitionBox box;
  const double lox = n.x - r[0], hix = n.x + r[0], loy = n.y - r[1], hiy = n.y + r[1];
  if (lox < g.lower()[0] - kBoxSlack || hix > g.upper()[0] + kBoxSlack ||
      loy < g.lower()[1] - kBoxSlack || hiy > g.upper()[1] + kBoxSlack)
    return box;

  auto range = [&](double lo, double hi, int d, std::int16_t& a, std::int16_t& b) {
    int i0 = static_cast<int>(std::floor((lo - kBoxSlack - g.lower()[d]) / g.res()[d]));
    int i1 = static_cast<int>(std::floor((hi + kBoxSlack - g.lower()[d]) / g.res()[d]));
    a = static_cast<std::int16_t>(std::clamp(i0, 0, g.counts()[d] - 1));
    b = static_cast<std::int16_t>(std::clamp(i1, 0, g.counts()[d] - 1));
  };
  range(lox, hix, 0, box.x0, box.x1);
  range(loy, hiy, 1, box.y0, box.y1);

  // heading relative to -pi, not wrapped; the box may straddle the seam
  const double plo = n.psi - r[2] - kBoxSlack - g.lower()[2];
  const double phi = n.psi + r[2] + kBoxSlack - g.lower()[2];
  const int p0 = static_cast<int>(std::floor(plo / g.res()[2]));
  const int p1 = static_cast<int>(std::floor(phi / g.res()[2]));
  const int npsi = g.npsi();
  const int first = ((p0 % npsi) + npsi) % npsi;
  box.p0 = static_cast<std::int16_t>(first);
  box.pn = static_cast<std::int16_t>(std::min(p1 - p0 + 1, npsi));
  box.blocked = false;
  return box;
}

/* materialize a transition box as a list of cells (heading wrapped) */
inline std::vector<CellId> box_cells(const TransitionBox& b, const Grid& g) {
  std::vector<CellId> out;
  if (b.blocked)
    return out;
  for (int k = 0; k < b.pn; ++k) {
    const int ip = (b.p0 + k) % g.npsi();
    for (int iy = b.y0; iy <= b.y1; ++iy)
      for (int ix = b.x0; ix <= b.x1; ++ix)
        out.push_back({ix, iy, ip});
  }
  return out;
}

struct Successors {
  bool blocked = true;
  std::vector<CellId> cells;
};

inline Successors successors(const CellId& id, const BodyVelocity& input, const Grid& g,
                             double tau_s) {
  const TransitionBox b = successor_box(id, input, g, tau_s);
  return {b.blocked, box_cells(b, g)};
}

enum class CellLabel : std::uint8_t { Free, Obstacle, Target };

/*
 * Obstacle: the cell's (x, y) rectangle overlaps an inflated obstacle or the
 * boundary margin band. Target: the rectangle lies inside the deflated target
 * and, when a docking heading window is configured, the heading bin lies
 * inside the window. Obstacle wins over Target.
 */
inline std::vector<CellLabel> label_cells(const Grid& g, const Scenario& sc) {
  const auto inflated = sc.inflated_obstacles();
  const Rect target = sc.deflated_target();
  const Rect safe = sc.safe_boundary();
  std::vector<CellLabel> labels(g.size(), CellLabel::Free);

  std::vector<bool> heading_ok(g.npsi(), true);
  if (sc.target_heading) {
    for (int ip = 0; ip < g.npsi(); ++ip) {
      const auto [lo, hi] = g.heading_interval(ip);
      const double mid = 0.5 * (lo + hi);
      const double off = std::abs(wrap_angle(mid - sc.target_heading->center));
      heading_ok[ip] = off + 0.5 * g.res()[2] <= sc.target_heading->tolerance + 1e-12;
    }
  }

  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      const Rect r = g.cell_rect(ix, iy);
      bool obstacle = !safe.contains(r);
      for (const auto& o : inflated)
        obstacle = obstacle || r.overlaps(o);
      const bool in_target = target.contains(r);
      for (int ip = 0; ip < g.npsi(); ++ip) {
        CellLabel l = CellLabel::Free;
        if (obstacle)
          l = CellLabel::Obstacle;
        else if (in_target && heading_ok[ip])
          l = CellLabel::Target;
        labels[g.index({ix, iy, ip})] = l;
      }
    }
  }
  return labels;
}

/* transition boxes for every (cell, input) pair, row-major in (cell, input) */
class TransitionCache {
public:
  TransitionCache(const Grid& g, const InputGrid& inputs, double tau_s, double growth_scale = 1.0)
      : grid_(g), inputs_(inputs), tau_s_(tau_s), growth_scale_(growth_scale),
        boxes_(g.size() * inputs.size()) {
    if (!(tau_s > 0.0))
      throw ConfigError("abstraction: sampling period must be positive");
    const std::size_t m = inputs.size();
    for (std::size_t c = 0; c < g.size(); ++c) {
      const CellId id = g.cell(c);
      for (std::size_t u = 0; u < m; ++u)
        boxes_[c * m + u] = successor_box(id, inputs[u], g, tau_s, growth_scale);
    }
  }

  /* hand-built transition table, row-major in (cell, input) */
  TransitionCache(const Grid& g, const InputGrid& inputs, double tau_s,
                  std::vector<TransitionBox> boxes)
      : grid_(g), inputs_(inputs), tau_s_(tau_s), growth_scale_(0.0), boxes_(std::move(boxes)) {
    if (boxes_.size() != g.size() * inputs.size())
      throw ConfigError("abstraction: transition table size does not match grid x inputs");
  }

  const TransitionBox& at(std::size_t cell, std::size_t input) const {
    return boxes_[cell * inputs_.size() + input];
  }
  const Grid& grid() const { return grid_; }
  const InputGrid& inputs() const { return inputs_; }
  double tau_s() const { return tau_s_; }
  double growth_scale() const { return growth_scale_; }

  bool matches(const Grid& g, const InputGrid& in, double tau_s) const {
    return grid_ == g && inputs_ == in && tau_s_ == tau_s && growth_scale_ == 1.0;
  }

private:
  Grid grid_;
  InputGrid inputs_;
  double tau_s_;
  double growth_scale_;
  std::vector<TransitionBox> boxes_;
};

/* labeled abstraction: shared transitions plus scenario-specific labels */
struct SymbolicSystem {
  std::shared_ptr<const TransitionCache> transitions;
  std::vector<CellLabel> labels;

  const Grid& grid() const { return transitions->grid(); }
  const InputGrid& inputs() const { return transitions->inputs(); }
  double tau_s() const { return transitions->tau_s(); }
};

inline SymbolicSystem build_symbolic_system(const Grid& g, const InputGrid& inputs, double tau_s,
                                            const Scenario& sc) {
  return {std::make_shared<const TransitionCache>(g, inputs, tau_s), label_cells(g, sc)};
}

} // namespace symdock

#endif /* SYMDOCK_ABSTRACTION_HPP_ */
