#pragma once

// Test-only geometry helper: Euclidean distance from a point to the
// piecewise-linear interpolation of a frontier curve. Vertical comparison is
// ill-conditioned where the curve turns vertical (eq -> 0), so curve-match
// checks use this metric instead.

#include <algorithm>
#include <cmath>
#include <vector>

#include "tvlink/frontier.hpp"

namespace tvlink::testing {

inline double point_segment_distance(double px, double py, double ax, double ay, double bx,
                                     double by) {
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
    const double cx = ax + t * dx, cy = ay + t * dy;
    return std::hypot(px - cx, py - cy);
}

inline double distance_to_curve(const FrontierCurve& curve, double eq, double eu) {
    const auto& pts = curve.points();
    if (pts.size() == 1)
        return std::hypot(eq - pts[0].eq, eu - pts[0].eu);
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < pts.size(); ++i)
        best = std::min(best, point_segment_distance(eq, eu, pts[i - 1].eq, pts[i - 1].eu,
                                                     pts[i].eq, pts[i].eu));
    return best;
}

} // namespace tvlink::testing
