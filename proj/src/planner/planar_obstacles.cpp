#include <cmath>

#include "tubeplan/planner.hpp"

namespace tubeplan {

bool ConvexPolygon::contains(const Vec2& p) const {
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (normals[i].dot(p) > offsets[i]) return false;
  }
  return true;
}

bool ConvexPolygon::intersects_segment(const Vec2& p, const Vec2& q) const {
  // Cyrus-Beck clipping of p + s (q - p), s in [0, 1].
  const Vec2 d = q - p;
  double lo = 0.0;
  double hi = 1.0;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    const double num = offsets[i] - normals[i].dot(p);
    const double den = normals[i].dot(d);
    if (den == 0.0) {
      if (num < 0.0) return false;
      continue;
    }
    const double s = num / den;
    if (den > 0.0) {
      hi = std::min(hi, s);
    } else {
      lo = std::max(lo, s);
    }
    if (lo > hi) return false;
  }
  return true;
}

std::optional<ConvexPolygon> slice_obstacle(const CuboidObstacle& obs, double altitude,
                                            double buffer) {
  ConvexPolygon poly;
  poly.id = obs.id();
  const VecX b = obs.offset_b(buffer);
  for (Eigen::Index i = 0; i < obs.A().rows(); ++i) {
    const Vec2 n(obs.A()(i, 0), obs.A()(i, 1));
    const double c = b(i) - obs.A()(i, 2) * altitude;
    if (n.norm() < 1e-12) {
      // Horizontal face: either the whole plane satisfies it or none does.
      if (c < 0.0) return std::nullopt;
      continue;
    }
    poly.normals.push_back(n);
    poly.offsets.push_back(c);
  }
  return poly;
}

std::vector<ConvexPolygon> slice_obstacles(const std::vector<CuboidObstacle>& obstacles,
                                           double altitude) {
  std::vector<ConvexPolygon> out;
  for (const CuboidObstacle& obs : obstacles) {
    if (auto poly = slice_obstacle(obs, altitude, obs.buffer())) out.push_back(std::move(*poly));
  }
  return out;
}

bool no_collision_2d(const Vec2& p, const Vec2& q, const std::vector<ConvexPolygon>& obstacles) {
  for (const ConvexPolygon& poly : obstacles) {
    if (poly.intersects_segment(p, q)) return false;
  }
  return true;
}

}  // namespace tubeplan
