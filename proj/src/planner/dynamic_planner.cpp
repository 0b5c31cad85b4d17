#include <cmath>

#include "tubeplan/planner.hpp"

namespace tubeplan {

namespace {

void check_endpoints(const Vec2& start, const Vec2& goal, const std::vector<ConvexPolygon>& slices) {
  for (const ConvexPolygon& poly : slices) {
    if (poly.contains(start))
      throw InfeasibleEndpointError("start lies inside buffered obstacle '" + poly.id + "'");
    if (poly.contains(goal))
      throw InfeasibleEndpointError("goal lies inside buffered obstacle '" + poly.id + "'");
  }
}

MatX initial_covariance(const VehicleSetup& vehicle) {
  const int n = vehicle.model->state_dim();
  if (vehicle.P0.size() == 0) return MatX::Zero(n, n);
  if (vehicle.P0.rows() != n || vehicle.P0.cols() != n)
    throw InvalidInput("initial covariance must be " + std::to_string(n) + "x" + std::to_string(n));
  return vehicle.P0;
}

}  // namespace

TubeEvaluation evaluate_path(const std::vector<Vec2>& path, const VehicleSetup& vehicle,
                             const PlannerConfig& cfg) {
  if (!vehicle.model) throw InvalidInput("evaluate_path: vehicle model missing");
  TubeEvaluation ev;
  ev.reference = path_to_trajectory(path, cfg.altitude, cfg.cruise_speed, vehicle.dt);
  const TimeGrid grid = TimeGrid::make(0.0, ev.reference.duration, vehicle.dt);
  const DesiredTrajectory& des = ev.reference.trajectory;
  const VecX x0 = vehicle.model->matched_initial_state(des, 0.0);
  ev.nominal = integrate_nominal(*vehicle.model, x0, des, grid);
  const LinearizationHistory lin = linearize(*vehicle.model, ev.nominal, des);
  ev.covariance = propagate_covariance(lin, initial_covariance(vehicle));
  ev.tube = build_tube(ev.nominal, ev.covariance, vehicle.beta, vehicle.model->position_rows());
  return ev;
}

std::vector<ObstacleDistance> comp_obs_dist(const PlanTree& tree,
                                            const std::vector<CuboidObstacle>& obstacles,
                                            const VehicleSetup& vehicle, const PlannerConfig& cfg,
                                            TubeEvaluation* evaluation) {
  const std::vector<Vec2> path = tree.best_path();
  if (path.empty()) throw NoSolutionError("comp_obs_dist: tree has no solution path");
  TubeEvaluation ev = evaluate_path(path, vehicle, cfg);
  const double c2 = chi2_quantile(vehicle.beta, 3);

  std::vector<ObstacleDistance> out;
  out.reserve(obstacles.size());
  for (const CuboidObstacle& obs : obstacles) {
    const BufferSolve bs = buffer_touch_distance(ev.tube, obs, c2);
    ObstacleDistance od;
    od.obstacle_id = obs.id();
    od.clearance = bs.clearance;
    od.d = std::min(bs.clearance, obs.buffer());
    od.t = bs.t;
    out.push_back(od);
  }
  if (evaluation) *evaluation = std::move(ev);
  return out;
}

double initial_buffer(const VehicleSetup& vehicle) {
  const MatX P0 = initial_covariance(vehicle);
  const auto rows = vehicle.model->position_rows();
  Mat3 S;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) S(i, j) = P0(rows[i], rows[j]);
  if (S.isZero(0.0)) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat3> es;
  es.computeDirect(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return std::sqrt(chi2_quantile(vehicle.beta, 3) * std::max(0.0, es.eigenvalues().maxCoeff()));
}

DynamicPlanResult dynamic_informed_rrt_star(const Vec2& start, const Vec2& goal,
                                            const std::vector<CuboidObstacle>& obstacles,
                                            const VehicleSetup& vehicle, const PlannerConfig& cfg,
                                            std::uint64_t seed) {
  const PlannerConfig c = cfg.resolved();
  if (!c.bounds.contains(start) || !c.bounds.contains(goal))
    throw InvalidInput("planner: start and goal must lie inside the bounds");

  RandomStream rng(seed);
  std::vector<CuboidObstacle> obs = obstacles;
  std::vector<ConvexPolygon> slices = slice_obstacles(obs, c.altitude);
  check_endpoints(start, goal, slices);

  DynamicPlanResult result;
  result.tree = PlanTree(start, goal, c.goal_radius);
  PlanTree& tree = result.tree;
  tree.consider_solution(0, slices);

  for (std::size_t m = 1; m <= c.M; ++m) {
    OuterIterationRecord rec;
    rec.iteration = m;
    for (const CuboidObstacle& o : obs) rec.buffers.push_back(o.buffer());

    const InnerLoopStats stats = grow_until_converged(tree, slices, c, rng);
    rec.inner_iterations = stats.iterations;
    rec.c_best = tree.c_best();

    if (m < c.M) {
      if (!tree.has_solution())
        throw NoSolutionError("no path found in outer iteration " + std::to_string(m));
      rec.distances = comp_obs_dist(tree, obs, vehicle, c);

      std::vector<std::size_t> grown;
      for (std::size_t j = 0; j < obs.size(); ++j) {
        const double d = rec.distances[j].d;
        obs[j].set_buffer(obs[j].buffer() - d);
        if (d < 0.0) grown.push_back(j);
      }
      slices = slice_obstacles(obs, c.altitude);
      if (!grown.empty()) check_endpoints(start, goal, slices);
      for (std::size_t j : grown) {
        if (auto poly = slice_obstacle(obs[j], c.altitude, obs[j].buffer()))
          rec.regrow_iterations += cleanup_and_regrow(tree, *poly, slices, c, rng);
      }
    }
    result.history.push_back(std::move(rec));
  }

  if (!tree.has_solution()) throw NoSolutionError("no path found after the final outer iteration");
  result.path = tree.best_path();
  result.evaluation = evaluate_path(result.path, vehicle, c);
  result.clearance = check_tube_collision(result.evaluation.tube, obstacles, 1);
  result.clear = true;
  for (const ClearanceReport& r : result.clearance) result.clear = result.clear && !r.collide;
  result.buffered_obstacles = std::move(obs);
  return result;
}

}  // namespace tubeplan
