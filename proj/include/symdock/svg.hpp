/*
 * svg.hpp
 *
 * Static SVG of one episode: arena boundary, concrete and inflated
 * obstacles, concrete and deflated target, trajectory polyline, start and
 * end markers. World y points up; the image is flipped inside the
 * boundary box.
 */

#ifndef SYMDOCK_SVG_HPP_
#define SYMDOCK_SVG_HPP_

#include <ostream>
#include <string>

#include "closed_loop.hpp"
#include "scenario.hpp"

namespace symdock {

struct SvgStyle {
  /* pixels per meter */
  double scale = 100.0;
  double pad = 20.0;
};

class SvgFrame {
public:
  SvgFrame(const Rect& boundary, const SvgStyle& st) : b_(boundary), st_(st) {}

  double px(double x) const { return st_.pad + (x - b_.x_min) * st_.scale; }
  double py(double y) const { return st_.pad + (b_.y_max - y) * st_.scale; }
  double width() const { return b_.width() * st_.scale + 2 * st_.pad; }
  double height() const { return b_.height() * st_.scale + 2 * st_.pad; }
  double scale() const { return st_.scale; }

private:
  Rect b_;
  SvgStyle st_;
};

namespace detail {

inline void svg_rect(std::ostream& os, const SvgFrame& f, const Rect& r, const char* cls) {
  os << "  <rect class=\"" << cls << "\" x=\"" << format_double(f.px(r.x_min)) << "\" y=\""
     << format_double(f.py(r.y_max)) << "\" width=\"" << format_double(r.width() * f.scale())
     << "\" height=\"" << format_double(r.height() * f.scale()) << "\"/>\n";
}

} // namespace detail

/* throws Error on an empty trajectory */
inline void write_svg(std::ostream& os, const Scenario& sc, const Trajectory& traj,
                      const SvgStyle& st = {}) {
  if (traj.empty())
    throw Error("plot: empty trajectory");
  const SvgFrame f(sc.boundary, st);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(f.width())
     << "\" height=\"" << format_double(f.height()) << "\" viewBox=\"0 0 "
     << format_double(f.width()) << ' ' << format_double(f.height()) << "\">\n"
     << "  <style>\n"
     << "    .boundary { fill: #f4f8fb; stroke: #333; stroke-width: 2; }\n"
     << "    .inflated { fill: #f3d9a4; stroke: none; }\n"
     << "    .obstacle { fill: #e0b000; stroke: #7a6000; stroke-width: 1; }\n"
     << "    .target { fill: #cfe8cf; stroke: #2e7d32; stroke-width: 1; }\n"
     << "    .target-inner { fill: #81c784; stroke: none; }\n"
     << "    .path { fill: none; stroke: #1565c0; stroke-width: 2; }\n"
     << "    .start { fill: #1565c0; }\n"
     << "    .end { fill: #c62828; }\n"
     << "  </style>\n";
  detail::svg_rect(os, f, sc.boundary, "boundary");
  for (const auto& o : sc.inflated_obstacles())
    detail::svg_rect(os, f, o, "inflated");
  for (const auto& o : sc.obstacles)
    detail::svg_rect(os, f, o, "obstacle");
  detail::svg_rect(os, f, sc.target, "target");
  try {
    detail::svg_rect(os, f, sc.deflated_target(), "target-inner");
  } catch (const EmptyTarget&) {
  }

  os << "  <polyline class=\"path\" points=\"";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (i)
      os << ' ';
    os << format_double(f.px(traj[i].eta.x)) << ',' << format_double(f.py(traj[i].eta.y));
  }
  os << "\"/>\n";
  const auto& s = traj.front().eta;
  const auto& e = traj.back().eta;
  os << "  <circle class=\"start\" cx=\"" << format_double(f.px(s.x)) << "\" cy=\""
     << format_double(f.py(s.y)) << "\" r=\"6\"/>\n";
  os << "  <circle class=\"end\" cx=\"" << format_double(f.px(e.x)) << "\" cy=\""
     << format_double(f.py(e.y)) << "\" r=\"6\"/>\n";
  os << "</svg>\n";
}

} // namespace symdock

#endif /* SYMDOCK_SVG_HPP_ */
