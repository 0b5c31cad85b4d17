#include <algorithm>
#include <cmath>

#include "tubeplan/planner.hpp"

namespace tubeplan {

PlannedReference path_to_trajectory(const std::vector<Vec2>& path, double altitude,
                                    double cruise_speed, double dt) {
  if (path.size() < 2) throw InvalidInput("path_to_trajectory: need at least 2 points");
  if (!(cruise_speed > 0.0)) throw InvalidInput("path_to_trajectory: cruise speed must be positive");
  if (!(dt > 0.0)) throw InvalidInput("path_to_trajectory: dt must be positive");

  PlannedReference ref;
  ref.waypoints.push_back(Vec3(path[0].x(), path[0].y(), altitude));
  for (std::size_t i = 1; i < path.size(); ++i) {
    if ((path[i] - path[i - 1]).norm() == 0.0) continue;  // repeated point
    ref.waypoints.push_back(Vec3(path[i].x(), path[i].y(), altitude));
  }
  if (ref.waypoints.size() < 2) throw InvalidInput("path_to_trajectory: path has zero length");

  ref.arrival.push_back(0.0);
  for (std::size_t i = 1; i < ref.waypoints.size(); ++i) {
    ref.length += (ref.waypoints[i] - ref.waypoints[i - 1]).norm();
    ref.arrival.push_back(ref.length / cruise_speed);
  }
  ref.duration = ref.arrival.back();

  const std::vector<Vec3> w = ref.waypoints;
  const std::vector<double> ta = ref.arrival;
  auto fn = [w, ta, cruise_speed](double t) {
    // Segment k covers (t_k, t_{k+1}]; corners take the left limit. Times
    // outside [0, duration] extrapolate along the first or last segment.
    const std::size_t last = w.size() - 2;
    std::size_t k = 0;
    if (t > ta[1]) {
      const auto it = std::lower_bound(ta.begin() + 1, ta.end(), t);
      k = it == ta.end() ? last : static_cast<std::size_t>(it - ta.begin()) - 1;
    }
    const Vec3 seg = w[k + 1] - w[k];
    const Vec3 u = seg / seg.norm();
    Kinematics kin;
    kin.r = w[k] + u * cruise_speed * (t - ta[k]);
    kin.rdot = u * cruise_speed;
    kin.rddot = Vec3::Zero();
    return kin;
  };
  ref.trajectory = DesiredTrajectory(fn, dt);
  return ref;
}

}  // namespace tubeplan
