#include "tubeplan/vehicle_models.hpp"

namespace tubeplan {

DesiredSample DesiredTrajectory::sample(double t) const {
  const Kinematics k = fn_(t);
  DesiredSample s;
  s.t = t;
  s.r = k.r;
  s.rdot = k.rdot;
  s.rddot = k.rddot;
  // Second-order central difference of the planar reference velocity.
  const Vec3 ahead = fn_(t + fd_step_).rdot;
  const Vec3 behind = fn_(t - fd_step_).rdot;
  s.etaddot_fd = (ahead.head<2>() - behind.head<2>()) / (2.0 * fd_step_);
  return s;
}

std::string to_string(VehicleKind kind) {
  return kind == VehicleKind::kQuadrotor ? "quadrotor" : "fixed-wing";
}

VehicleKind vehicle_kind_from_string(const std::string& s) {
  if (s == "quadrotor") return VehicleKind::kQuadrotor;
  if (s == "fixed-wing") return VehicleKind::kFixedWing;
  throw InvalidInput("unknown vehicle '" + s + "' (expected quadrotor | fixed-wing)");
}

}  // namespace tubeplan
