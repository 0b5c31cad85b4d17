#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "tubeplan/scenario.hpp"

namespace tubeplan {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

Kinematics AscentCruiseDescent::operator()(double t) const {
  Kinematics k;
  const double top = climb_rate * ascent_end;
  double z = 0.0;
  double zdot = 0.0;
  if (t <= ascent_end) {
    z = climb_rate * t;
    zdot = climb_rate;
  } else if (t <= descent_start) {
    z = top;
  } else {
    z = top - climb_rate * (t - descent_start);
    zdot = -climb_rate;
  }
  k.r = origin + Vec3(speed * t, 0.0, z);
  k.rdot = Vec3(speed, 0.0, zdot);
  return k;
}

Kinematics LateralSinusoid::operator()(double t) const {
  const double w = 2.0 * std::numbers::pi / period;
  Kinematics k;
  k.r = Vec3(origin.x() + speed * t, origin.y() + amplitude * std::sin(w * t), altitude);
  k.rdot = Vec3(speed, amplitude * w * std::cos(w * t), 0.0);
  k.rddot = Vec3(0.0, -amplitude * w * w * std::sin(w * t), 0.0);
  return k;
}

double TrajectorySpec::duration() const {
  if (kind == Kind::kWaypoints) {
    double len = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) len += (waypoints[i] - waypoints[i - 1]).norm();
    return len / speed;
  }
  return profile == "lateral-sinusoid" ? lateral_sinusoid.duration : ascent_cruise_descent.duration;
}

// ---------------------------------------------------------------------------
// JSON reading with field paths
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError(path + ": " + what);
}

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
}

void expect_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  expect_object(j, path);
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) fail(child(path, item.key()), "unknown field");
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

double get_number(const json& obj, const std::string& path, const std::string& key, double def) {
  if (!obj.contains(key)) return def;
  return as_number(obj.at(key), child(path, key));
}

double require_number(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) fail(child(path, key), "missing required field");
  return as_number(obj.at(key), child(path, key));
}

VecX as_vector(const json& j, const std::string& path, int n = -1) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  if (n >= 0 && static_cast<int>(j.size()) != n)
    fail(path, "expected " + std::to_string(n) + " numbers, got " + std::to_string(j.size()));
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_number(j[i], index(path, i));
  return v;
}

Vec3 as_vec3(const json& j, const std::string& path) { return as_vector(j, path, 3); }
Vec2 as_vec2(const json& j, const std::string& path) { return as_vector(j, path, 2); }

/// Scalar (times identity), diagonal list, or full row-major nested array.
template <int N>
Eigen::Matrix<double, N, N> as_square(const json& j, const std::string& path) {
  using M = Eigen::Matrix<double, N, N>;
  if (j.is_number()) return as_number(j, path) * M::Identity();
  if (j.is_array() && j.size() == N && j[0].is_number()) return as_vector(j, path, N).asDiagonal();
  if (!j.is_array() || j.size() != N) fail(path, "expected a number, " + std::to_string(N) + " diagonal entries, or an " +
                                                 std::to_string(N) + "x" + std::to_string(N) + " array");
  M m;
  for (int r = 0; r < N; ++r) m.row(r) = as_vector(j[static_cast<std::size_t>(r)], index(path, static_cast<std::size_t>(r)), N).transpose();
  return m;
}

std::string require_string(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) fail(child(path, key), "missing required field");
  if (!obj.at(key).is_string()) fail(child(path, key), "expected a string");
  return obj.at(key).get<std::string>();
}

std::uint64_t as_unsigned(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    fail(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

// --- vehicle parameters ---------------------------------------------------

QuadrotorParams read_quadrotor(const json& j, const std::string& path) {
  expect_keys(j, path, {"m", "rho", "S", "C_D", "K_q", "Lambda_q", "sigma", "L"});
  QuadrotorParams p;
  p.m = get_number(j, path, "m", p.m);
  p.rho = get_number(j, path, "rho", p.rho);
  p.S = get_number(j, path, "S", p.S);
  p.C_D = get_number(j, path, "C_D", p.C_D);
  if (j.contains("K_q")) p.K_q = as_square<3>(j.at("K_q"), child(path, "K_q"));
  if (j.contains("Lambda_q")) p.Lambda_q = as_square<3>(j.at("Lambda_q"), child(path, "Lambda_q"));
  if (j.contains("sigma")) {
    p.sigma = j.at("sigma").is_number() ? Vec3::Constant(as_number(j.at("sigma"), child(path, "sigma")))
                                        : as_vec3(j.at("sigma"), child(path, "sigma"));
  }
  if (j.contains("L")) {
    p.L = j.at("L").is_number() ? Vec3::Constant(as_number(j.at("L"), child(path, "L")))
                                : as_vec3(j.at("L"), child(path, "L"));
  }
  try {
    p.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return p;
}

FixedWingParams read_fixed_wing(const json& j, const std::string& path) {
  expect_keys(j, path, {"m", "rho", "S", "C_D0", "K_d", "g", "kappa_mu", "kappa_CL", "kappa_T1", "kappa_T2",
                        "kappa", "Lambda_f", "sigma_u", "sigma_w", "sigma_v", "L_u", "L_w", "L_v"});
  FixedWingParams p;
  p.m = get_number(j, path, "m", p.m);
  p.rho = get_number(j, path, "rho", p.rho);
  p.S = get_number(j, path, "S", p.S);
  p.C_D0 = get_number(j, path, "C_D0", p.C_D0);
  p.K_d = get_number(j, path, "K_d", p.K_d);
  p.g = get_number(j, path, "g", p.g);
  p.kappa_mu = get_number(j, path, "kappa_mu", p.kappa_mu);
  p.kappa_CL = get_number(j, path, "kappa_CL", p.kappa_CL);
  p.kappa_T1 = get_number(j, path, "kappa_T1", p.kappa_T1);
  p.kappa_T2 = get_number(j, path, "kappa_T2", p.kappa_T2);
  p.kappa = get_number(j, path, "kappa", p.kappa);
  if (j.contains("Lambda_f")) p.Lambda_f = as_square<2>(j.at("Lambda_f"), child(path, "Lambda_f"));
  p.sigma_u = get_number(j, path, "sigma_u", p.sigma_u);
  p.sigma_w = get_number(j, path, "sigma_w", p.sigma_w);
  p.sigma_v = get_number(j, path, "sigma_v", p.sigma_v);
  p.L_u = get_number(j, path, "L_u", p.L_u);
  p.L_w = get_number(j, path, "L_w", p.L_w);
  p.L_v = get_number(j, path, "L_v", p.L_v);
  try {
    p.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return p;
}

// --- trajectory, obstacles, planner ---------------------------------------

TrajectorySpec read_trajectory(const json& j, const std::string& path) {
  expect_object(j, path);
  TrajectorySpec t;
  if (j.contains("waypoints")) {
    expect_keys(j, path, {"waypoints", "altitude", "speed"});
    t.kind = TrajectorySpec::Kind::kWaypoints;
    const json& w = j.at("waypoints");
    const std::string wp = child(path, "waypoints");
    if (!w.is_array() || w.size() < 2) fail(wp, "expected at least 2 waypoints");
    for (std::size_t i = 0; i < w.size(); ++i) t.waypoints.push_back(as_vec2(w[i], index(wp, i)));
    t.altitude = require_number(j, path, "altitude");
    t.speed = require_number(j, path, "speed");
    if (!(t.speed > 0.0)) fail(child(path, "speed"), "must be positive");
    if (!(t.duration() > 0.0)) fail(wp, "path has zero length");
    return t;
  }

  t.kind = TrajectorySpec::Kind::kProfile;
  t.profile = require_string(j, path, "profile");
  if (t.profile == "ascent-cruise-descent") {
    expect_keys(j, path, {"profile", "speed", "climb_rate", "ascent_end", "descent_start", "duration", "origin"});
    AscentCruiseDescent& p = t.ascent_cruise_descent;
    p.speed = get_number(j, path, "speed", p.speed);
    p.climb_rate = get_number(j, path, "climb_rate", p.climb_rate);
    p.ascent_end = get_number(j, path, "ascent_end", p.ascent_end);
    p.descent_start = get_number(j, path, "descent_start", p.descent_start);
    p.duration = get_number(j, path, "duration", p.duration);
    if (j.contains("origin")) p.origin = as_vec3(j.at("origin"), child(path, "origin"));
    if (!(p.speed > 0.0)) fail(child(path, "speed"), "must be positive");
    if (!(p.ascent_end >= 0.0 && p.descent_start >= p.ascent_end && p.duration > p.descent_start))
      fail(path, "need 0 <= ascent_end <= descent_start < duration");
  } else if (t.profile == "lateral-sinusoid") {
    expect_keys(j, path, {"profile", "speed", "amplitude", "period", "altitude", "duration", "origin"});
    LateralSinusoid& p = t.lateral_sinusoid;
    p.speed = get_number(j, path, "speed", p.speed);
    p.amplitude = get_number(j, path, "amplitude", p.amplitude);
    p.period = get_number(j, path, "period", p.period);
    p.altitude = get_number(j, path, "altitude", p.altitude);
    p.duration = get_number(j, path, "duration", p.duration);
    if (j.contains("origin")) p.origin = as_vec2(j.at("origin"), child(path, "origin"));
    if (!(p.speed > 0.0 && p.period > 0.0 && p.duration > 0.0))
      fail(path, "speed, period and duration must be positive");
  } else {
    fail(child(path, "profile"), "unknown profile '" + t.profile +
                                     "' (expected ascent-cruise-descent or lateral-sinusoid)");
  }
  return t;
}

ObstacleSpec read_obstacle(const json& j, const std::string& path) {
  expect_object(j, path);
  ObstacleSpec o;
  o.id = require_string(j, path, "id");
  const std::string type = j.contains("type") ? require_string(j, path, "type") : "box";
  if (type == "box") {
    expect_keys(j, path, {"id", "type", "center", "half_extents", "yaw", "buffer"});
    o.kind = ObstacleSpec::Kind::kBox;
    if (!j.contains("center")) fail(child(path, "center"), "missing required field");
    if (!j.contains("half_extents")) fail(child(path, "half_extents"), "missing required field");
    o.center = as_vec3(j.at("center"), child(path, "center"));
    o.half_extents = as_vec3(j.at("half_extents"), child(path, "half_extents"));
    o.yaw = get_number(j, path, "yaw", 0.0);
  } else if (type == "halfspaces") {
    expect_keys(j, path, {"id", "type", "A", "b", "buffer"});
    o.kind = ObstacleSpec::Kind::kHalfspaces;
    if (!j.contains("A") || !j.at("A").is_array()) fail(child(path, "A"), "expected an array of 3-vectors");
    if (!j.contains("b")) fail(child(path, "b"), "missing required field");
    const json& A = j.at("A");
    o.A.resize(static_cast<Eigen::Index>(A.size()), 3);
    for (std::size_t i = 0; i < A.size(); ++i)
      o.A.row(static_cast<Eigen::Index>(i)) = as_vec3(A[i], index(child(path, "A"), i)).transpose();
    o.b = as_vector(j.at("b"), child(path, "b"), static_cast<int>(A.size()));
  } else {
    fail(child(path, "type"), "unknown obstacle type '" + type + "' (expected box or halfspaces)");
  }
  if (j.contains("buffer")) {
    o.buffer = as_number(j.at("buffer"), child(path, "buffer"));
    if (*o.buffer < 0.0) fail(child(path, "buffer"), "must be non-negative");
  }
  try {
    (void)o.build();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return o;
}

PlannerSpec read_planner(const json& j, const std::string& path) {
  expect_keys(j, path, {"start", "goal", "bounds", "altitude", "cruise_speed", "M", "N_max", "N_conv", "tol",
                        "r_w", "step", "goal_radius", "goal_bias", "dump_tree"});
  PlannerSpec p;
  PlannerConfig& c = p.config;
  if (!j.contains("start")) fail(child(path, "start"), "missing required field");
  if (!j.contains("goal")) fail(child(path, "goal"), "missing required field");
  if (!j.contains("bounds")) fail(child(path, "bounds"), "missing required field");
  p.start = as_vec2(j.at("start"), child(path, "start"));
  p.goal = as_vec2(j.at("goal"), child(path, "goal"));
  const std::string bp = child(path, "bounds");
  expect_keys(j.at("bounds"), bp, {"lo", "hi"});
  if (!j.at("bounds").contains("lo") || !j.at("bounds").contains("hi")) fail(bp, "expected lo and hi");
  c.bounds.lo = as_vec2(j.at("bounds").at("lo"), child(bp, "lo"));
  c.bounds.hi = as_vec2(j.at("bounds").at("hi"), child(bp, "hi"));
  c.altitude = require_number(j, path, "altitude");
  c.cruise_speed = require_number(j, path, "cruise_speed");
  auto count = [&](const char* key, std::size_t def) -> std::size_t {
    return j.contains(key) ? static_cast<std::size_t>(as_unsigned(j.at(key), child(path, key))) : def;
  };
  c.M = count("M", c.M);
  c.N_max = count("N_max", c.N_max);
  c.N_conv = count("N_conv", c.N_conv);
  c.tol = get_number(j, path, "tol", c.tol);
  c.r_w = get_number(j, path, "r_w", c.r_w);
  c.step = get_number(j, path, "step", c.step);
  c.goal_radius = get_number(j, path, "goal_radius", c.goal_radius);
  c.goal_bias = get_number(j, path, "goal_bias", c.goal_bias);
  if (j.contains("dump_tree")) {
    if (!j.at("dump_tree").is_boolean()) fail(child(path, "dump_tree"), "expected true or false");
    p.dump_tree = j.at("dump_tree").get<bool>();
  }
  try {
    c = c.resolved();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return p;
}

// --- writing ----------------------------------------------------------------

json vec_json(const VecX& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <typename Derived>
json mat_json(const Eigen::MatrixBase<Derived>& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

json params_json(const Scenario& s) {
  if (s.vehicle == VehicleKind::kQuadrotor) {
    const QuadrotorParams& p = s.quadrotor;
    return {{"m", p.m}, {"rho", p.rho}, {"S", p.S}, {"C_D", p.C_D}, {"K_q", mat_json(p.K_q)},
            {"Lambda_q", mat_json(p.Lambda_q)}, {"sigma", vec_json(p.sigma)}, {"L", vec_json(p.L)}};
  }
  const FixedWingParams& p = s.fixed_wing;
  return {{"m", p.m},
          {"rho", p.rho},
          {"S", p.S},
          {"C_D0", p.C_D0},
          {"K_d", p.K_d},
          {"g", p.g},
          {"kappa_mu", p.kappa_mu},
          {"kappa_CL", p.kappa_CL},
          {"kappa_T1", p.kappa_T1},
          {"kappa_T2", p.kappa_T2},
          {"kappa", p.kappa},
          {"Lambda_f", mat_json(p.Lambda_f)},
          {"sigma_u", p.sigma_u},
          {"sigma_w", p.sigma_w},
          {"sigma_v", p.sigma_v},
          {"L_u", p.L_u},
          {"L_w", p.L_w},
          {"L_v", p.L_v}};
}

json trajectory_json(const TrajectorySpec& t) {
  if (t.kind == TrajectorySpec::Kind::kWaypoints) {
    json w = json::array();
    for (const Vec2& p : t.waypoints) w.push_back(vec_json(p));
    return {{"waypoints", w}, {"altitude", t.altitude}, {"speed", t.speed}};
  }
  if (t.profile == "lateral-sinusoid") {
    const LateralSinusoid& p = t.lateral_sinusoid;
    return {{"profile", t.profile}, {"speed", p.speed},       {"amplitude", p.amplitude},
            {"period", p.period},   {"altitude", p.altitude}, {"duration", p.duration},
            {"origin", vec_json(p.origin)}};
  }
  const AscentCruiseDescent& p = t.ascent_cruise_descent;
  return {{"profile", t.profile},         {"speed", p.speed},       {"climb_rate", p.climb_rate},
          {"ascent_end", p.ascent_end},   {"descent_start", p.descent_start},
          {"duration", p.duration},       {"origin", vec_json(p.origin)}};
}

json obstacle_json(const ObstacleSpec& o) {
  json j;
  j["id"] = o.id;
  if (o.kind == ObstacleSpec::Kind::kBox) {
    j["type"] = "box";
    j["center"] = vec_json(o.center);
    j["half_extents"] = vec_json(o.half_extents);
    j["yaw"] = o.yaw;
  } else {
    j["type"] = "halfspaces";
    j["A"] = mat_json(o.A);
    j["b"] = vec_json(o.b);
  }
  if (o.buffer) j["buffer"] = *o.buffer;
  return j;
}

json planner_json(const PlannerSpec& p) {
  const PlannerConfig& c = p.config;
  return {{"start", vec_json(p.start)},
          {"goal", vec_json(p.goal)},
          {"bounds", {{"lo", vec_json(c.bounds.lo)}, {"hi", vec_json(c.bounds.hi)}}},
          {"altitude", c.altitude},
          {"cruise_speed", c.cruise_speed},
          {"M", c.M},
          {"N_max", c.N_max},
          {"N_conv", c.N_conv},
          {"tol", c.tol},
          {"r_w", c.r_w},
          {"step", c.step},
          {"goal_radius", c.goal_radius},
          {"goal_bias", c.goal_bias},
          {"dump_tree", p.dump_tree}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

CuboidObstacle ObstacleSpec::build() const {
  CuboidObstacle o = kind == Kind::kBox ? CuboidObstacle::from_box(id, center, half_extents, yaw)
                                        : CuboidObstacle::from_halfspaces(id, A, b);
  o.set_buffer(buffer.value_or(0.0));
  return o;
}

std::shared_ptr<const VehicleModel> Scenario::model() const {
  if (vehicle == VehicleKind::kQuadrotor) return std::make_shared<QuadrotorModel>(quadrotor);
  return std::make_shared<FixedWingModel>(fixed_wing);
}

DesiredTrajectory Scenario::desired_trajectory() const {
  if (!desired) throw ScenarioError("desired_trajectory: missing required field");
  if (desired->kind == TrajectorySpec::Kind::kWaypoints)
    return path_to_trajectory(desired->waypoints, desired->altitude, desired->speed, dt).trajectory;
  if (desired->profile == "lateral-sinusoid") return DesiredTrajectory(desired->lateral_sinusoid, dt);
  return DesiredTrajectory(desired->ascent_cruise_descent, dt);
}

TimeGrid Scenario::grid() const {
  double end = 0.0;
  if (tf) {
    end = *tf;
  } else if (desired) {
    end = t0 + desired->duration();
  } else {
    throw ScenarioError("grid.tf: required when no desired_trajectory is given");
  }
  return TimeGrid::make(t0, end, dt);
}

VecX Scenario::x0(const VehicleModel& m, const DesiredTrajectory& des) const {
  return initial_state ? *initial_state : m.matched_initial_state(des, t0);
}

MatX Scenario::P0(int state_dim) const {
  MatX P = MatX::Zero(state_dim, state_dim);
  if (initial_covariance_diagonal) P.diagonal() = *initial_covariance_diagonal;
  return P;
}

std::vector<CuboidObstacle> Scenario::build_obstacles() const {
  std::vector<CuboidObstacle> out;
  for (const ObstacleSpec& o : obstacles) out.push_back(o.build());
  return out;
}

void Scenario::validate() const {
  if (schema_version != kSchemaVersion)
    fail("schema_version", "unsupported version " + std::to_string(schema_version));
  if (!(beta > 0.0 && beta < 1.0)) fail("beta", "must lie in (0, 1)");
  if (!(dt > 0.0)) fail("grid.dt", "must be positive");
  if (tf && !(*tf > t0)) fail("grid.tf", "must exceed grid.t0");
  if (stride == 0) fail("stride", "must be >= 1");
  if (!desired && !planner) fail("desired_trajectory", "required unless a planner block is given");

  const int n = vehicle == VehicleKind::kQuadrotor ? QuadrotorState::kDim : FixedWingState::kDim;
  if (initial_state && initial_state->size() != n)
    fail("initial_state", "expected " + std::to_string(n) + " entries for " + to_string(vehicle));
  if (initial_covariance_diagonal) {
    if (initial_covariance_diagonal->size() != n)
      fail("initial_covariance", "expected " + std::to_string(n) + " diagonal entries for " + to_string(vehicle));
    if ((initial_covariance_diagonal->array() < 0.0).any()) fail("initial_covariance", "entries must be >= 0");
  }

  std::set<std::string> ids;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (!ids.insert(obstacles[i].id).second) fail(index("obstacles", i) + ".id", "duplicate id '" + obstacles[i].id + "'");
  }

  if (planner) {
    const Bounds2& b = planner->config.bounds;
    if (!b.contains(planner->start)) fail("planner.start", "outside planner bounds");
    if (!b.contains(planner->goal)) fail("planner.goal", "outside planner bounds");
    if (desired && desired->kind == TrajectorySpec::Kind::kWaypoints) {
      for (std::size_t i = 0; i < desired->waypoints.size(); ++i) {
        if (!b.contains(desired->waypoints[i]))
          fail(index("desired_trajectory.waypoints", i), "outside planner bounds");
      }
    }
  }
}

Scenario scenario_from_json(const json& j) {
  expect_keys(j, "", {"schema_version", "name", "vehicle", "params", "initial_state", "initial_covariance",
                      "desired_trajectory", "obstacles", "beta", "grid", "planner", "seed", "stride"});
  Scenario s;
  if (!j.contains("schema_version")) fail("schema_version", "missing required field");
  if (!j.at("schema_version").is_number_integer()) fail("schema_version", "expected an integer");
  s.schema_version = j.at("schema_version").get<int>();
  if (s.schema_version != kSchemaVersion)
    fail("schema_version", "unsupported version " + std::to_string(s.schema_version));
  if (j.contains("name")) {
    if (!j.at("name").is_string()) fail("name", "expected a string");
    s.name = j.at("name").get<std::string>();
  }
  try {
    s.vehicle = vehicle_kind_from_string(require_string(j, "", "vehicle"));
  } catch (const InvalidInput&) {
    fail("vehicle", "expected quadrotor or fixed-wing");
  }

  const json params = j.value("params", json::object());
  if (s.vehicle == VehicleKind::kQuadrotor) {
    s.quadrotor = read_quadrotor(params, "params");
  } else {
    s.fixed_wing = read_fixed_wing(params, "params");
  }

  if (j.contains("initial_state")) {
    const json& v = j.at("initial_state");
    if (!(v.is_string() && v.get<std::string>() == "matched")) s.initial_state = as_vector(v, "initial_state");
  }
  if (j.contains("initial_covariance")) {
    const json& v = j.at("initial_covariance");
    if (v.is_string()) {
      if (v.get<std::string>() != "zero") fail("initial_covariance", "expected \"zero\" or {\"diagonal\": [...]}");
    } else {
      expect_keys(v, "initial_covariance", {"diagonal"});
      if (!v.contains("diagonal")) fail("initial_covariance.diagonal", "missing required field");
      s.initial_covariance_diagonal = as_vector(v.at("diagonal"), "initial_covariance.diagonal");
    }
  }
  if (j.contains("desired_trajectory")) s.desired = read_trajectory(j.at("desired_trajectory"), "desired_trajectory");

  if (j.contains("obstacles")) {
    const json& obs = j.at("obstacles");
    if (!obs.is_array()) fail("obstacles", "expected an array");
    for (std::size_t i = 0; i < obs.size(); ++i) s.obstacles.push_back(read_obstacle(obs[i], index("obstacles", i)));
  }
  s.beta = get_number(j, "", "beta", s.beta);

  if (!j.contains("grid")) fail("grid", "missing required field");
  const json& g = j.at("grid");
  expect_keys(g, "grid", {"t0", "tf", "dt"});
  s.t0 = get_number(g, "grid", "t0", 0.0);
  if (g.contains("tf")) s.tf = as_number(g.at("tf"), "grid.tf");
  s.dt = require_number(g, "grid", "dt");

  if (j.contains("planner")) s.planner = read_planner(j.at("planner"), "planner");
  if (j.contains("seed")) s.seed = as_unsigned(j.at("seed"), "seed");
  if (j.contains("stride")) s.stride = static_cast<std::size_t>(as_unsigned(j.at("stride"), "stride"));
  s.validate();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  j["vehicle"] = to_string(s.vehicle);
  j["params"] = params_json(s);
  j["initial_state"] = s.initial_state ? vec_json(*s.initial_state) : json("matched");
  j["initial_covariance"] =
      s.initial_covariance_diagonal ? json{{"diagonal", vec_json(*s.initial_covariance_diagonal)}} : json("zero");
  if (s.desired) j["desired_trajectory"] = trajectory_json(*s.desired);
  json obs = json::array();
  for (const ObstacleSpec& o : s.obstacles) obs.push_back(obstacle_json(o));
  j["obstacles"] = obs;
  j["beta"] = s.beta;
  j["grid"] = {{"t0", s.t0}, {"dt", s.dt}};
  if (s.tf) j["grid"]["tf"] = *s.tf;
  if (s.planner) j["planner"] = planner_json(*s.planner);
  j["seed"] = s.seed;
  j["stride"] = s.stride;
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string() + ": cannot open file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
}

std::string canonical_dump(const Scenario& s) { return scenario_to_json(s).dump(); }

std::string scenario_hash(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_dump(s)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tubeplan
