#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tubeplan/collision.hpp"
#include "tubeplan/sim.hpp"
#include "tubeplan/types.hpp"
#include "tubeplan/uncertainty.hpp"
#include "tubeplan/vehicle_models.hpp"

namespace tubeplan {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Bounds2 {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Ones();

  bool contains(const Vec2& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  double diagonal() const { return (hi - lo).norm(); }
};

struct PlannerConfig {
  std::size_t M = 4;
  std::size_t N_max = 3000;
  std::size_t N_conv = 200;
  double tol = 0.01;
  double r_w = 0.0;   ///< rewiring radius; 0 selects 3 * step
  double step = 0.0;  ///< steer step; 0 selects bounds diagonal / 50
  double goal_radius = 1.0;
  double goal_bias = 0.05;
  Bounds2 bounds;
  double altitude = 10.0;
  double cruise_speed = 2.0;

  /// Fills step and r_w from the bounds when they are unset, then validates.
  PlannerConfig resolved() const;
  void validate() const;
  std::size_t regrow_cap() const { return std::max<std::size_t>(1, N_max / 4); }
};

// ---------------------------------------------------------------------------
// Planar obstacles
// ---------------------------------------------------------------------------

/// Convex polygon {p : n_i . p <= c_i}: a cuboid sliced at the planning altitude.
struct ConvexPolygon {
  std::string id;
  std::vector<Vec2> normals;
  std::vector<double> offsets;

  bool contains(const Vec2& p) const;
  /// Exact closed test: true if the segment pq touches the polygon.
  bool intersects_segment(const Vec2& p, const Vec2& q) const;
};

/// Slice of {A z <= b + d} at z = altitude; nullopt when the obstacle does not reach it.
std::optional<ConvexPolygon> slice_obstacle(const CuboidObstacle& obs, double altitude, double buffer);
std::vector<ConvexPolygon> slice_obstacles(const std::vector<CuboidObstacle>& obstacles, double altitude);

bool no_collision_2d(const Vec2& p, const Vec2& q, const std::vector<ConvexPolygon>& obstacles);

// ---------------------------------------------------------------------------
// Tree
// ---------------------------------------------------------------------------

struct PlanNode {
  Vec2 coords = Vec2::Zero();
  int parent = -1;
  double cost = 0.0;
  std::vector<int> children;
  bool orphan = false;
};

/// RRT* tree rooted at node 0 (the start). `solutions` holds nodes within the
/// goal radius whose closing segment to the goal is collision-free.
class PlanTree {
 public:
  PlanTree(const Vec2& start, const Vec2& goal, double goal_radius);

  const std::vector<PlanNode>& nodes() const { return nodes_; }
  const PlanNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return nodes_.size(); }
  const Vec2& start() const { return start_; }
  const Vec2& goal() const { return goal_; }
  double goal_radius() const { return goal_radius_; }
  double c_best() const { return c_best_; }
  bool has_solution() const { return c_best_ < kInf; }
  std::size_t orphan_count() const;

  int add_node(const Vec2& p, int parent);
  /// Re-parents `child`; costs in its subtree shift by the same delta.
  void set_parent(int child, int parent);
  /// Detaches `child` from its parent; its subtree becomes orphaned.
  void detach(int child);
  /// Makes `node` the root of its orphan component, then attaches it to `parent`.
  void reconnect_orphan(int node, int parent);
  /// Drops every node flagged in `remove`; children of dropped nodes are orphaned.
  void remove_nodes(const std::vector<bool>& remove);

  void consider_solution(int i, const std::vector<ConvexPolygon>& obstacles);
  /// Rebuilds the solution set against `obstacles` and recomputes c_best.
  void rebuild_solutions(const std::vector<ConvexPolygon>& obstacles);
  void refresh_best();

  /// Node path start .. best solution node, followed by the goal point.
  std::vector<Vec2> best_path() const;

  /// Cost recursion, acyclicity, single root and child-list agreement.
  bool consistent(std::string* why = nullptr, double tol = 1e-9) const;

 private:
  void mark_subtree(int root, bool orphan);
  void recompute_subtree_costs(int root);

  Vec2 start_;
  Vec2 goal_;
  double goal_radius_;
  std::vector<PlanNode> nodes_;
  std::vector<int> solutions_;
  double c_best_ = kInf;
};

// ---------------------------------------------------------------------------
// Informed RRT*
// ---------------------------------------------------------------------------

/// Uniform sample from the informed ellipse (foci start/goal, major axis c_best)
/// clipped to the bounds; uniform over the bounds (with goal bias) while c_best is infinite.
Vec2 sample_ellipse(const Vec2& start, const Vec2& goal, double c_best, const Bounds2& bounds,
                    double goal_bias, RandomStream& rng);

/// One AddNode step with choose-parent and rewiring. Returns the new node index,
/// or -1 when the sample was rejected.
int add_node(PlanTree& tree, const std::vector<ConvexPolygon>& obstacles, const PlannerConfig& cfg,
             RandomStream& rng);

struct InnerLoopStats {
  std::size_t iterations = 0;
  std::vector<double> cost_history;
  bool converged = false;
};

/// Runs AddNode until k reaches N_max or the relative best-cost change over
/// N_conv iterations falls to tol.
InnerLoopStats grow_until_converged(PlanTree& tree, const std::vector<ConvexPolygon>& obstacles,
                                    const PlannerConfig& cfg, RandomStream& rng);

PlanTree informed_rrt_star(const Vec2& start, const Vec2& goal,
                           const std::vector<ConvexPolygon>& obstacles, const PlannerConfig& cfg,
                           RandomStream& rng, InnerLoopStats* stats = nullptr);

/// Deletes nodes inside `grown`, severs edges crossing it, and regrows from the
/// rooted tree until every orphan subtree is reconnected or the regrow cap is hit.
/// Returns the number of AddNode iterations spent.
std::size_t cleanup_and_regrow(PlanTree& tree, const ConvexPolygon& grown,
                               const std::vector<ConvexPolygon>& obstacles, const PlannerConfig& cfg,
                               RandomStream& rng);

// ---------------------------------------------------------------------------
// From node path to desired trajectory
// ---------------------------------------------------------------------------

struct PlannedReference {
  DesiredTrajectory trajectory;
  std::vector<Vec3> waypoints;   ///< polyline at the planning altitude
  std::vector<double> arrival;   ///< time at each waypoint
  double duration = 0.0;
  double length = 0.0;
};

/// Constant-altitude, constant-speed traversal of the polyline.
PlannedReference path_to_trajectory(const std::vector<Vec2>& path, double altitude,
                                    double cruise_speed, double dt);

// ---------------------------------------------------------------------------
// Dynamic (chance-constrained) loop
// ---------------------------------------------------------------------------

struct VehicleSetup {
  std::shared_ptr<const VehicleModel> model;
  MatX P0;  ///< initial covariance
  double beta = 0.999;
  double dt = 0.01;
};

struct TubeEvaluation {
  PlannedReference reference;
  Trajectory nominal;
  CovarianceHistory covariance;
  Tube tube;
};

/// Nominal + linearization + covariance + tube along a planar path.
TubeEvaluation evaluate_path(const std::vector<Vec2>& path, const VehicleSetup& vehicle,
                             const PlannerConfig& cfg);

struct ObstacleDistance {
  std::string obstacle_id;
  double clearance = 0.0;  ///< tube-to-true-obstacle offset from buffer_touch_distance
  double d = 0.0;          ///< buffer change, clearance capped at the current buffer
  double t = 0.0;          ///< binding tube time
};

/// Per-obstacle buffer change for the tree's current best path.
std::vector<ObstacleDistance> comp_obs_dist(const PlanTree& tree,
                                            const std::vector<CuboidObstacle>& obstacles,
                                            const VehicleSetup& vehicle, const PlannerConfig& cfg,
                                            TubeEvaluation* evaluation = nullptr);

class NoSolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleEndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Initial buffer c * sqrt(lambda_max) of the initial position covariance (0 if P0 = 0).
double initial_buffer(const VehicleSetup& vehicle);

struct OuterIterationRecord {
  std::size_t iteration = 0;
  double c_best = kInf;
  std::size_t inner_iterations = 0;
  std::size_t regrow_iterations = 0;
  std::vector<double> buffers;        ///< buffers used during this iteration
  std::vector<ObstacleDistance> distances;  ///< empty on the last iteration
};

struct DynamicPlanResult {
  std::vector<Vec2> path;
  TubeEvaluation evaluation;
  std::vector<ClearanceReport> clearance;  ///< final tube vs true obstacles, stride 1
  std::vector<OuterIterationRecord> history;
  std::vector<CuboidObstacle> buffered_obstacles;  ///< obstacles with final buffers
  PlanTree tree{Vec2::Zero(), Vec2::Zero(), 1.0};
  bool clear = false;
};

DynamicPlanResult dynamic_informed_rrt_star(const Vec2& start, const Vec2& goal,
                                            const std::vector<CuboidObstacle>& obstacles,
                                            const VehicleSetup& vehicle, const PlannerConfig& cfg,
                                            std::uint64_t seed);

}  // namespace tubeplan
