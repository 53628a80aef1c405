/*
 * scenario.hpp
 *
 * Docking arena: boundary, rectangular obstacles and target box, together
 * with the margins used to build the over-approximated obstacles and the
 * under-approximated target of the abstract problem. Also holds the
 * ground-truth footprint collision check used by the simulator.
 */

#ifndef SYMDOCK_SCENARIO_HPP_
#define SYMDOCK_SCENARIO_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "vessel.hpp"

namespace symdock {

struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool valid() const { return x_min < x_max && y_min < y_max; }

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  bool contains(const Rect& o) const {
    return o.x_min >= x_min && o.x_max <= x_max && o.y_min >= y_min && o.y_max <= y_max;
  }
  /* overlap with positive area; rectangles sharing only an edge do not overlap */
  bool overlaps(const Rect& o) const {
    return o.x_min < x_max && x_min < o.x_max && o.y_min < y_max && y_min < o.y_max;
  }

  std::array<double, 4> as_array() const { return {x_min, x_max, y_min, y_max}; }
  static Rect from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/* optional docking heading window, psi in [center - tolerance, center + tolerance] */
struct HeadingWindow {
  double center = 0.0;
  double tolerance = kPi;
  friend bool operator==(const HeadingWindow&, const HeadingWindow&) = default;
};

struct Scenario {
  Rect boundary{0.0, 8.0, 0.0, 6.0};
  std::vector<Rect> obstacles;
  Rect target{};
  double obstacle_margin = 0.5;
  double target_margin = 0.25;
  /* cells closer than this to the boundary are treated as obstacle */
  double boundary_margin = 0.0;
  /* arena-frame position of this document's coordinate origin */
  std::array<double, 2> origin_offset{0.0, 0.0};
  std::optional<HeadingWindow> target_heading;
  VesselParams vessel{};

  void validate() const;

  std::vector<Rect> inflated_obstacles() const;
  Rect deflated_target() const;
  /* region the vessel reference point must stay in */
  Rect safe_boundary() const {
    return {boundary.x_min + boundary_margin, boundary.x_max - boundary_margin,
            boundary.y_min + boundary_margin, boundary.y_max - boundary_margin};
  }

  Pose to_arena(const Pose& p) const {
    return {p.x + origin_offset[0], p.y + origin_offset[1], p.psi};
  }
  Pose from_arena(const Pose& p) const {
    return {p.x - origin_offset[0], p.y - origin_offset[1], p.psi};
  }
};

/*
 * grow an obstacle by margin on every side, then clip to the boundary; sides
 * flush with the boundary therefore stay on the wall
 */
inline Rect inflate_obstacle(const Rect& rect, double margin, const Rect& boundary) {
  if (margin < 0.0)
    throw ConfigError("inflate_obstacle: negative margin");
  return {std::max(rect.x_min - margin, boundary.x_min), std::min(rect.x_max + margin, boundary.x_max),
          std::max(rect.y_min - margin, boundary.y_min), std::min(rect.y_max + margin, boundary.y_max)};
}

/* shrink the target by margin on every side */
inline Rect deflate_target(const Rect& rect, double margin) {
  if (margin < 0.0)
    throw ConfigError("deflate_target: negative margin");
  Rect r{rect.x_min + margin, rect.x_max - margin, rect.y_min + margin, rect.y_max - margin};
  if (!r.valid())
    throw EmptyTarget("deflate_target: margin " + std::to_string(margin) + " empties the target");
  return r;
}

inline std::vector<Rect> Scenario::inflated_obstacles() const {
  std::vector<Rect> out;
  out.reserve(obstacles.size());
  for (const auto& o : obstacles)
    out.push_back(inflate_obstacle(o, obstacle_margin, boundary));
  return out;
}

inline Rect Scenario::deflated_target() const { return deflate_target(target, target_margin); }

inline void Scenario::validate() const {
  if (!boundary.valid())
    throw ConfigError("scenario: boundary is degenerate");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (!obstacles[i].valid())
      throw ConfigError("scenario: obstacle " + std::to_string(i) + " is degenerate");
    if (!boundary.contains(obstacles[i]))
      throw ConfigError("scenario: obstacle " + std::to_string(i) + " leaves the boundary");
  }
  if (!target.valid())
    throw ConfigError("scenario: target is degenerate");
  if (!boundary.contains(target))
    throw ConfigError("scenario: target leaves the boundary");
  if (obstacle_margin < 0.0 || target_margin < 0.0 || boundary_margin < 0.0)
    throw ConfigError("scenario: margins must be non-negative");
  if (!safe_boundary().valid())
    throw ConfigError("scenario: boundary_margin leaves no free space");
  if (target_heading && !(target_heading->tolerance > 0.0))
    throw ConfigError("scenario: target heading tolerance must be positive");
  (void)deflated_target();
  vessel.validate();
}

/* corners of the vessel footprint (length x beam, centered at the pose) */
inline std::array<Eigen::Vector2d, 4> footprint_corners(const Pose& eta, const VesselParams& p) {
  const double hl = 0.5 * p.length, hb = 0.5 * p.beam;
  const double c = std::cos(eta.psi), s = std::sin(eta.psi);
  const Eigen::Vector2d ctr(eta.x, eta.y), ax(c, s), ay(-s, c);
  return {ctr + hl * ax + hb * ay, ctr - hl * ax + hb * ay, ctr - hl * ax - hb * ay,
          ctr + hl * ax - hb * ay};
}

namespace detail {

inline void project(const std::array<Eigen::Vector2d, 4>& pts, const Eigen::Vector2d& axis,
                    double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& p : pts) {
    const double d = p.dot(axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

inline std::array<Eigen::Vector2d, 4> rect_corners(const Rect& r) {
  return {Eigen::Vector2d(r.x_min, r.y_min), Eigen::Vector2d(r.x_max, r.y_min),
          Eigen::Vector2d(r.x_max, r.y_max), Eigen::Vector2d(r.x_min, r.y_max)};
}

inline double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                     const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

} // namespace detail

/* separating-axis test between the oriented footprint and an axis-aligned box (open interiors) */
inline bool footprint_overlaps(const std::array<Eigen::Vector2d, 4>& fp, const Rect& box) {
  const auto bc = detail::rect_corners(box);
  const Eigen::Vector2d e0 = (fp[0] - fp[1]).normalized(), e1 = (fp[0] - fp[3]).normalized();
  const std::array<Eigen::Vector2d, 4> axes{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), e0, e1};
  for (const auto& a : axes) {
    double lo1, hi1, lo2, hi2;
    detail::project(fp, a, lo1, hi1);
    detail::project(bc, a, lo2, hi2);
    if (hi1 <= lo2 || hi2 <= lo1)
      return false;
  }
  return true;
}

/* true iff the footprint intersects a concrete obstacle or leaves the boundary */
inline bool footprint_collision(const Pose& eta, const Scenario& sc) {
  const auto fp = footprint_corners(eta, sc.vessel);
  for (const auto& c : fp)
    if (c.x() < sc.boundary.x_min || c.x() > sc.boundary.x_max || c.y() < sc.boundary.y_min ||
        c.y() > sc.boundary.y_max)
      return true;
  for (const auto& o : sc.obstacles)
    if (footprint_overlaps(fp, o))
      return true;
  return false;
}

/* distance between footprint and box; zero when they overlap */
inline double footprint_distance(const Pose& eta, const VesselParams& p, const Rect& box) {
  const auto fp = footprint_corners(eta, p);
  if (footprint_overlaps(fp, box))
    return 0.0;
  const auto bc = detail::rect_corners(box);
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      d = std::min(d, detail::point_segment_distance(fp[i], bc[j], bc[(j + 1) % 4]));
      d = std::min(d, detail::point_segment_distance(bc[i], fp[j], fp[(j + 1) % 4]));
    }
  }
  return d;
}

/* minimum footprint distance to any concrete obstacle (infinity without obstacles) */
inline double footprint_clearance(const Pose& eta, const Scenario& sc) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& o : sc.obstacles)
    d = std::min(d, footprint_distance(eta, sc.vessel, o));
  return d;
}

} // namespace symdock

#endif /* SYMDOCK_SCENARIO_HPP_ */
