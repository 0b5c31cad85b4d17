#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tubeplan/collision.hpp"
#include "tubeplan/planner.hpp"
#include "tubeplan/sim.hpp"
#include "tubeplan/vehicle_models.hpp"

namespace tubeplan {

inline constexpr int kSchemaVersion = 1;

/// Schema or referential error; the message starts with the offending field path.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Desired trajectory
// ---------------------------------------------------------------------------

/// Climb at climb_rate until ascent_end, cruise level, then descend at the same
/// rate from descent_start to duration. Horizontal motion is along +x at `speed`.
struct AscentCruiseDescent {
  double speed = 5.0;
  double climb_rate = 2.0;
  double ascent_end = 10.0;
  double descent_start = 30.0;
  double duration = 40.0;
  Vec3 origin = Vec3::Zero();

  Kinematics operator()(double t) const;
};

/// x = x0 + speed t, y = y0 + amplitude sin(2 pi t / period), h = altitude.
struct LateralSinusoid {
  double speed = 15.0;
  double amplitude = 20.0;
  double period = 17.5;
  double altitude = 50.0;
  double duration = 35.0;
  Vec2 origin = Vec2::Zero();

  Kinematics operator()(double t) const;
};

struct TrajectorySpec {
  enum class Kind { kProfile, kWaypoints };
  Kind kind = Kind::kProfile;
  std::string profile = "ascent-cruise-descent";
  AscentCruiseDescent ascent_cruise_descent;
  LateralSinusoid lateral_sinusoid;
  std::vector<Vec2> waypoints;
  double altitude = 10.0;
  double speed = 2.0;

  double duration() const;
};

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct ObstacleSpec {
  enum class Kind { kBox, kHalfspaces };
  std::string id;
  Kind kind = Kind::kBox;
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  double yaw = 0.0;
  FaceMatrix A;
  VecX b;
  std::optional<double> buffer;  ///< unset: planner initial buffer rule

  CuboidObstacle build() const;
};

struct PlannerSpec {
  Vec2 start = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  PlannerConfig config;
  bool dump_tree = false;
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name;
  VehicleKind vehicle = VehicleKind::kQuadrotor;
  QuadrotorParams quadrotor;
  FixedWingParams fixed_wing;
  std::optional<VecX> initial_state;               ///< unset: matched to the reference at t0
  std::optional<VecX> initial_covariance_diagonal;  ///< unset: zero
  std::optional<TrajectorySpec> desired;  ///< required unless a planner block is present
  std::vector<ObstacleSpec> obstacles;
  double beta = 0.999;
  double t0 = 0.0;
  std::optional<double> tf;  ///< unset: t0 + reference duration
  double dt = 0.01;
  std::optional<PlannerSpec> planner;
  std::uint64_t seed = 1;
  std::size_t stride = 1;

  void validate() const;
  std::shared_ptr<const VehicleModel> model() const;
  DesiredTrajectory desired_trajectory() const;
  TimeGrid grid() const;
  VecX x0(const VehicleModel& model, const DesiredTrajectory& des) const;
  MatX P0(int state_dim) const;
  std::vector<CuboidObstacle> build_obstacles() const;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);
std::string canonical_dump(const Scenario& s);
/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string scenario_hash(const Scenario& s);

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

enum class Verdict { kClear, kCollide };

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<std::size_t> stride;
  std::size_t runs = 10000;
  unsigned threads = 0;
};

struct ChannelDeviation {
  std::string channel;
  double max_relative_deviation = 0.0;
  double at_time = 0.0;
};

struct RunReport {
  std::string mode;
  std::string scenario_hash;
  std::uint64_t seed = 0;
  Verdict verdict = Verdict::kClear;
  std::vector<ClearanceReport> clearance;
  std::map<std::string, double> timings_ms;
  nlohmann::json config;
  nlohmann::json extra;  ///< mode-specific results
  std::vector<ChannelDeviation> deviations;
  bool degenerate = false;

  nlohmann::json to_json() const;
};

/// Applies command-line overrides to a copy of the scenario.
Scenario apply_overrides(const Scenario& s, const RunOptions& opt);

RunReport run_validate(const Scenario& scenario, const RunOptions& opt);
RunReport run_plan(const Scenario& scenario, const RunOptions& opt);
RunReport run_mc_compare(const Scenario& scenario, const RunOptions& opt);

/// Relative deviation |mc - lc| / lc over grid points with lc >= floor * max(lc).
ChannelDeviation max_relative_deviation(const std::vector<double>& t, const std::vector<double>& lc,
                                        const std::vector<double>& mc, double floor = 1e-2);

std::string to_string(Verdict v);

}  // namespace tubeplan
