#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tubeplan/planner.hpp"

using namespace tubeplan;
using namespace tubeplan::testing;

namespace {

/// Brute-force path cost from the edge set.
double edge_path_cost(const PlanTree& tree, int i) {
  double cost = 0.0;
  while (tree.node(i).parent >= 0) {
    const int p = tree.node(i).parent;
    cost += (tree.node(i).coords - tree.node(p).coords).norm();
    i = p;
  }
  return cost;
}

double point_box_gap(const CuboidObstacle& box, const Trajectory& nominal) {
  double best = kInf;
  for (const VecX& x : nominal.states) best = std::min(best, box.face_distance(x.head<3>()));
  return best;
}

VehicleSetup calm_vehicle() {
  QuadrotorParams p = calm_quadrotor();
  VehicleSetup v;
  v.model = std::make_shared<QuadrotorModel>(p);
  v.P0 = MatX::Zero(9, 9);
  return v;
}

}  // namespace

TEST_CASE("uniform sampling over the bounds") {
  Bounds2 b;
  b.lo = Vec2(-10, 0);
  b.hi = Vec2(30, 20);
  RandomStream rng(1);
  Vec2 mean = Vec2::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vec2 p = sample_ellipse(Vec2(0, 5), Vec2(20, 5), kInf, b, 0.0, rng);
    CHECK(b.contains(p));
    mean += p / n;
  }
  CHECK(std::abs(mean.x() - 10.0) < 0.01 * b.diagonal());
  CHECK(std::abs(mean.y() - 10.0) < 0.01 * b.diagonal());

  int at_goal = 0;
  for (int i = 0; i < 10000; ++i)
    if (sample_ellipse(Vec2(0, 5), Vec2(20, 5), kInf, b, 0.1, rng) == Vec2(20, 5)) ++at_goal;
  CHECK(at_goal == doctest::Approx(1000).epsilon(0.1));
}

TEST_CASE("informed sampling stays in the ellipse") {
  Bounds2 b;
  b.lo = Vec2(-50, -50);
  b.hi = Vec2(50, 50);
  const Vec2 s(-10, -5), g(10, 7);
  const double c_min = (g - s).norm();
  const double c_best = 1.3 * c_min;
  RandomStream rng(2);
  int inner = 0;
  const int n = 40000;
  const double a = 0.5 * c_best, bb = 0.5 * std::sqrt(c_best * c_best - c_min * c_min);
  const Vec2 e1 = (g - s) / c_min, e2(-e1.y(), e1.x()), mid = 0.5 * (s + g);
  for (int i = 0; i < n; ++i) {
    const Vec2 p = sample_ellipse(s, g, c_best, b, 0.0, rng);
    CHECK((p - s).norm() + (p - g).norm() <= c_best + 1e-9);
    const double u = (p - mid).dot(e1) / a, v = (p - mid).dot(e2) / bb;
    if (u * u + v * v <= 0.25) ++inner;
  }
  // Uniform density: the half-scale ellipse holds a quarter of the samples.
  CHECK(static_cast<double>(inner) / n == doctest::Approx(0.25).epsilon(0.04));

  for (int i = 0; i < 1000; ++i) {
    const Vec2 p = sample_ellipse(s, g, c_min, b, 0.0, rng);
    const Vec2 d = p - s;
    CHECK(std::abs(d.x() * e1.y() - d.y() * e1.x()) < 1e-9);
    CHECK((p - s).norm() + (p - g).norm() <= c_min + 1e-9);
  }

  Bounds2 tight;
  tight.lo = Vec2(-1, -1);
  tight.hi = Vec2(1, 1);
  for (int i = 0; i < 1000; ++i) CHECK(tight.contains(sample_ellipse(Vec2(-0.5, 0), Vec2(0.5, 0), 5.0, tight, 0.0, rng)));
}

TEST_CASE("obstacle slices") {
  const CuboidObstacle box = CuboidObstacle::from_box("b", Vec3(5, 5, 10), Vec3(2, 1, 3), 0.5);
  CHECK_FALSE(slice_obstacle(box, 20.0, 0.0).has_value());
  CHECK(slice_obstacle(box, 20.0, 10.0).has_value());
  const auto poly = slice_obstacle(box, 10.0, 0.0);
  REQUIRE(poly.has_value());
  CHECK(poly->normals.size() == 4);
  CHECK(poly->contains(Vec2(5, 5)));
  CHECK_FALSE(poly->contains(Vec2(8, 5)));
  const auto grown = slice_obstacle(box, 10.0, 1.0);
  CHECK(grown->contains(Vec2(5, 5) + 2.9 * Vec2(std::cos(0.5), std::sin(0.5))));
  CHECK_FALSE(poly->contains(Vec2(5, 5) + 2.9 * Vec2(std::cos(0.5), std::sin(0.5))));
}

TEST_CASE("segment collision test") {
  const std::vector<ConvexPolygon> obs{square("a", Vec2(10, 10), 2.0)};
  CHECK_FALSE(no_collision_2d(Vec2(9.5, 10), Vec2(10.5, 10.5), obs));
  CHECK(no_collision_2d(Vec2(0, 0), Vec2(30, 0), obs));
  CHECK_FALSE(no_collision_2d(Vec2(0, 10), Vec2(30, 10), obs));
  // Closed test: touching a face or corner counts as contact.
  CHECK_FALSE(no_collision_2d(Vec2(0, 12), Vec2(30, 12), obs));
  CHECK_FALSE(no_collision_2d(Vec2(6, 10), Vec2(10, 14), obs));
  CHECK(no_collision_2d(Vec2(0, 12.001), Vec2(30, 12.001), obs));

  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  std::vector<ConvexPolygon> polys{
      square("a", Vec2(5, 5), 2.0), square("b", Vec2(14, 12), 3.0),
      *slice_obstacle(CuboidObstacle::from_box("c", Vec3(6, 15, 10), Vec3(3, 1, 20), 0.7), 10.0, 0.0)};
  int hits = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Vec2 p(u(gen), u(gen)), q(u(gen), u(gen));
    bool sampled_hit = false;
    for (int s = 0; s <= 10000 && !sampled_hit; ++s) {
      const Vec2 x = p + (q - p) * (s / 10000.0);
      for (const ConvexPolygon& poly : polys) sampled_hit = sampled_hit || inside_closed(poly, x);
    }
    CHECK(no_collision_2d(p, q, polys) == !sampled_hit);
    hits += sampled_hit;
  }
  CHECK(hits > 200);
}

TEST_CASE("start already within the goal radius") {
  PlannerConfig cfg = square_config(10.0);
  cfg.N_max = 50;
  RandomStream rng(1);
  const PlanTree tree = informed_rrt_star(Vec2(1, 1), Vec2(1.5, 1), {}, cfg, rng);
  CHECK(tree.c_best() == doctest::Approx(0.5));
  const auto path = tree.best_path();
  REQUIRE(path.size() == 2);
  CHECK(path.front() == Vec2(1, 1));
  CHECK(path.back() == Vec2(1.5, 1));
}

TEST_CASE("rewiring through a new node") {
  PlanTree tree(Vec2(0, 0), Vec2(19, 19), 1.0);
  const int n1 = tree.add_node(Vec2(0, 4), 0);
  const int n2 = tree.add_node(Vec2(4, 4), n1);
  const int n3 = tree.add_node(Vec2(5, 5), n2);
  const double before2 = tree.node(n2).cost, before3 = tree.node(n3).cost;

  PlannerConfig cfg;
  const Vec2 target(3.0, 1.5);
  cfg.bounds.lo = target;
  cfg.bounds.hi = target + Vec2::Constant(1e-12);
  cfg.step = 100.0;
  cfg.r_w = 3.5;
  cfg.goal_bias = 0.0;
  RandomStream rng(1);
  const int id = add_node(tree, {}, cfg, rng);
  REQUIRE(id == 4);
  CHECK((tree.node(id).coords - target).norm() < 1e-9);
  CHECK(tree.node(id).parent == 0);
  CHECK(tree.node(n2).parent == id);
  CHECK(tree.node(n1).parent == 0);
  const double delta = before2 - tree.node(n2).cost;
  CHECK(delta > 1.0);
  CHECK(before3 - tree.node(n3).cost == doctest::Approx(delta));
  for (int i = 0; i < static_cast<int>(tree.size()); ++i)
    CHECK(tree.node(i).cost == doctest::Approx(edge_path_cost(tree, i)));
  CHECK(tree.consistent());
}

TEST_CASE("tree consistency under random mutations") {
  std::string first;
  CHECK(tree_fuzz(99, 10000, &first) == 0);
  if (!first.empty()) MESSAGE(first);
}

TEST_CASE("consistency check detects corruption") {
  PlanTree tree(Vec2(0, 0), Vec2(9, 9), 1.0);
  const int a = tree.add_node(Vec2(1, 0), 0);
  tree.add_node(Vec2(2, 0), a);
  CHECK(tree.consistent());
  tree.detach(a);
  CHECK(tree.consistent());
  CHECK(tree.orphan_count() == 2);
  tree.reconnect_orphan(2, 0);
  CHECK(tree.consistent());
  CHECK(tree.node(2).parent == 0);
  CHECK(tree.node(a).parent == 2);
  CHECK(tree.node(a).cost == doctest::Approx(3.0));
}

TEST_CASE("obstacle-free plan is nearly straight") {
  PlannerConfig cfg = square_config(50.0);
  cfg.N_conv = 500;
  cfg.tol = 1e-3;
  RandomStream rng(1);
  const Vec2 s(2, 25), g(48, 25);
  const PlanTree tree = informed_rrt_star(s, g, {}, cfg, rng);
  REQUIRE(tree.has_solution());
  CHECK(tree.c_best() <= 1.02 * (g - s).norm());
  CHECK(tree.consistent());
}

TEST_CASE("single wall with a gap") {
  PlannerConfig cfg = square_config(40.0);
  cfg.N_conv = 500;
  cfg.tol = 1e-3;
  const std::vector<ConvexPolygon> wall{
      *slice_obstacle(CuboidObstacle::from_box("low", Vec3(20, -12, 10), Vec3(1.5, 38, 20)), 10.0, 0.0),
      *slice_obstacle(CuboidObstacle::from_box("high", Vec3(20, 60, 10), Vec3(1.5, 30, 20)), 10.0, 0.0)};
  const Vec2 s(3, 8), g(37, 8);
  const double optimum = visibility_graph_shortest(s, g, wall);
  CHECK(optimum > (g - s).norm() + 1.0);
  RandomStream rng(3);
  const PlanTree tree = informed_rrt_star(s, g, wall, cfg, rng);
  REQUIRE(tree.has_solution());
  CHECK(tree.c_best() >= optimum - 1e-9);
  CHECK(tree.c_best() <= 1.05 * optimum);
  bool through_gap = false;
  const auto path = tree.best_path();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    CHECK(no_collision_2d(path[i], path[i + 1], wall));
    if ((path[i].x() - 20) * (path[i + 1].x() - 20) <= 0) {
      const double t = (20 - path[i].x()) / (path[i + 1].x() - path[i].x());
      const double y = path[i].y() + t * (path[i + 1].y() - path[i].y());
      through_gap = through_gap || (y > 26 && y < 30);
    }
  }
  CHECK(through_gap);
}

TEST_CASE("endpoints inside obstacles are rejected") {
  PlannerConfig cfg = square_config(20.0);
  RandomStream rng(1);
  const std::vector<ConvexPolygon> obs{square("a", Vec2(5, 5), 2.0)};
  CHECK_THROWS_AS(informed_rrt_star(Vec2(5, 5), Vec2(15, 15), obs, cfg, rng), InfeasibleEndpointError);
  CHECK_THROWS_AS(informed_rrt_star(Vec2(15, 15), Vec2(5.5, 5), obs, cfg, rng), InfeasibleEndpointError);
  CHECK_THROWS_AS(informed_rrt_star(Vec2(-1, 5), Vec2(15, 15), {}, cfg, rng), InvalidInput);
}

TEST_CASE("cleanup with growth that encloses no nodes") {
  PlannerConfig cfg = square_config(30.0);
  RandomStream rng(2);
  PlanTree tree = informed_rrt_star(Vec2(2, 2), Vec2(28, 2), {}, cfg, rng);
  const std::vector<PlanNode> before = tree.nodes();
  const double c_best = tree.c_best();
  const ConvexPolygon far = square("far", Vec2(15, 40), 2.0);
  const std::size_t spent = cleanup_and_regrow(tree, far, {far}, cfg, rng);
  CHECK(spent == 0);
  REQUIRE(tree.size() == before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(tree.nodes()[i].coords == before[i].coords);
    CHECK(tree.nodes()[i].parent == before[i].parent);
    CHECK(tree.nodes()[i].cost == before[i].cost);
  }
  CHECK(tree.c_best() == c_best);
}

TEST_CASE("cleanup when the root's only child is swallowed") {
  PlannerConfig cfg = square_config(30.0);
  PlanTree tree(Vec2(2, 15), Vec2(28, 15), 1.0);
  int prev = tree.add_node(Vec2(5, 15), 0);
  for (double x = 8; x <= 26; x += 3) {
    prev = tree.add_node(Vec2(x, 15), prev);
    tree.add_node(Vec2(x, 18), prev);
    tree.add_node(Vec2(x, 12), prev);
  }
  tree.rebuild_solutions({});
  REQUIRE(tree.node(0).children.size() == 1);
  const std::size_t size_before = tree.size();

  const ConvexPolygon grown = square("g", Vec2(5, 15), 0.8);
  RandomStream rng(4);
  cleanup_and_regrow(tree, grown, {grown}, cfg, rng);
  std::string why;
  CHECK(tree.consistent(&why));
  CHECK(tree.orphan_count() == 0);
  for (const PlanNode& n : tree.nodes()) CHECK_FALSE(grown.contains(n.coords));
  // Survivors are either reconnected (rooted) or were pruned.
  CHECK(tree.size() >= 1);
  CHECK(tree.size() <= size_before - 1 + cfg.regrow_cap());
  for (std::size_t i = 1; i < tree.size(); ++i) {
    const PlanNode& n = tree.nodes()[i];
    CHECK(no_collision_2d(tree.node(n.parent).coords, n.coords, {grown}));
  }
}

TEST_CASE("straight path to trajectory") {
  const PlannedReference ref = path_to_trajectory({Vec2(0, 0), Vec2(30, 40)}, 12.0, 2.5, 0.01);
  CHECK(ref.length == doctest::Approx(50.0));
  CHECK(ref.duration == doctest::Approx(20.0));
  const Kinematics mid = ref.trajectory.kinematics(10.0);
  CHECK((mid.r - Vec3(15, 20, 12)).norm() < 1e-12);
  CHECK((mid.rdot - Vec3(1.5, 2.0, 0.0)).norm() < 1e-12);
  CHECK(mid.rddot.norm() == 0.0);
}

TEST_CASE("polyline path to trajectory") {
  const PlannedReference ref =
      path_to_trajectory({Vec2(0, 0), Vec2(10, 0), Vec2(10, 0), Vec2(10, 5)}, 3.0, 5.0, 0.01);
  REQUIRE(ref.waypoints.size() == 3);
  CHECK(ref.arrival[1] == doctest::Approx(2.0));
  CHECK(ref.duration == doctest::Approx(3.0));
  CHECK((ref.trajectory.kinematics(2.0).rdot - Vec3(5, 0, 0)).norm() < 1e-12);
  CHECK((ref.trajectory.kinematics(2.5).r - Vec3(10, 2.5, 3)).norm() < 1e-12);
  CHECK((ref.trajectory.kinematics(-1.0).r - Vec3(-5, 0, 3)).norm() < 1e-12);
  CHECK((ref.trajectory.kinematics(4.0).r - Vec3(10, 10, 3)).norm() < 1e-12);
  CHECK_THROWS_AS(path_to_trajectory({Vec2(1, 1)}, 3.0, 5.0, 0.01), InvalidInput);
  CHECK_THROWS_AS(path_to_trajectory({Vec2(1, 1), Vec2(1, 1)}, 3.0, 5.0, 0.01), InvalidInput);
  CHECK_THROWS_AS(path_to_trajectory({Vec2(0, 0), Vec2(1, 1)}, 3.0, 0.0, 0.01), InvalidInput);
}

TEST_CASE("quadrotor tracks a straight planned segment exactly") {
  QuadrotorParams p = calm_quadrotor();
  p.C_D = 0.0;
  VehicleSetup v = calm_vehicle();
  v.model = std::make_shared<QuadrotorModel>(p);
  PlannerConfig cfg = square_config(50.0);
  cfg.cruise_speed = 3.0;
  const TubeEvaluation ev = evaluate_path({Vec2(5, 5), Vec2(45, 35)}, v, cfg);
  double worst = 0.0;
  for (std::size_t k = 0; k < ev.nominal.states.size(); ++k) {
    const Vec3 r_des = ev.reference.trajectory.kinematics(ev.nominal.grid.time(k)).r;
    worst = std::max(worst, (ev.nominal.states[k].head<3>() - r_des).norm());
  }
  CHECK(worst <= 1e-6);
  for (const ConfidenceEllipsoid& e : ev.tube.ellipsoids) CHECK(e.sigma.cwiseAbs().maxCoeff() < 1e-20);
}

TEST_CASE("buffer change without uncertainty is the geometric clearance") {
  QuadrotorParams p = calm_quadrotor();
  p.C_D = 0.0;
  VehicleSetup v = calm_vehicle();
  v.model = std::make_shared<QuadrotorModel>(p);
  PlannerConfig cfg = square_config(40.0);
  cfg.altitude = 10.0;
  PlanTree tree(Vec2(2, 20), Vec2(38, 20), 1.0);
  int prev = 0;
  for (double x = 6; x <= 38; x += 4) prev = tree.add_node(Vec2(x, 20), prev);
  tree.rebuild_solutions({});
  REQUIRE(tree.has_solution());

  CuboidObstacle near = CuboidObstacle::from_box("near", Vec3(20, 26, 10), Vec3(2, 2, 15));
  CuboidObstacle far = CuboidObstacle::from_box("far", Vec3(20, 5, 10), Vec3(2, 2, 15));
  near.set_buffer(10.0);
  far.set_buffer(1.0);
  TubeEvaluation ev;
  const auto d = comp_obs_dist(tree, {near, far}, v, cfg, &ev);
  REQUIRE(d.size() == 2);
  const double gap_near = point_box_gap(near, ev.nominal);
  const double gap_far = point_box_gap(far, ev.nominal);
  CHECK(gap_near == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(std::abs(d[0].clearance - gap_near) < 1e-3);
  CHECK(d[0].d == doctest::Approx(d[0].clearance));
  CHECK(d[1].clearance == doctest::Approx(gap_far).epsilon(1e-3));
  CHECK(d[1].d == 1.0);
}

TEST_CASE("initial buffer from the initial covariance") {
  VehicleSetup v = calm_vehicle();
  CHECK(initial_buffer(v) == 0.0);
  v.P0 = MatX::Identity(9, 9) * 0.01;
  v.P0(1, 1) = 0.04;
  CHECK(initial_buffer(v) == doctest::Approx(std::sqrt(chi2_quantile(0.999, 3) * 0.04)));
}

TEST_CASE("zero-noise dynamic planning collapses the buffers") {
  const VehicleSetup v = calm_vehicle();
  PlannerConfig cfg = square_config(60.0);
  cfg.cruise_speed = 3.0;
  std::vector<CuboidObstacle> obs{CuboidObstacle::from_box("a", Vec3(20, 25, 10), Vec3(3, 10, 15)),
                                  CuboidObstacle::from_box("b", Vec3(40, 35, 10), Vec3(3, 10, 15))};
  for (auto& o : obs) o.set_buffer(2.0);
  const DynamicPlanResult r = dynamic_informed_rrt_star(Vec2(3, 30), Vec2(57, 30), obs, v, cfg, 7);
  for (const CuboidObstacle& o : r.buffered_obstacles) CHECK(o.buffer() < 0.3);
  for (const CuboidObstacle& o : r.buffered_obstacles) CHECK(o.buffer() >= 0.0);
  CHECK(r.history.size() == cfg.M);
  CHECK(r.clear);
  CHECK(r.tree.consistent());

  // Plain planning against the true obstacles reaches a comparable cost.
  RandomStream rng(7);
  const PlanTree plain = informed_rrt_star(Vec2(3, 30), Vec2(57, 30), slice_obstacles(
      [&] {
        auto o = obs;
        for (auto& x : o) x.set_buffer(0.0);
        return o;
      }(), cfg.altitude), cfg, rng);
  CHECK(r.history.back().c_best <= 1.05 * plain.c_best());
  CHECK(plain.c_best() <= 1.05 * r.history.back().c_best);
}

TEST_CASE("dynamic planning is deterministic") {
  VehicleSetup v;
  v.model = std::make_shared<QuadrotorModel>(QuadrotorParams{});
  v.P0 = MatX::Zero(9, 9);
  PlannerConfig cfg = square_config(60.0);
  cfg.cruise_speed = 3.0;
  const std::vector<CuboidObstacle> obs{CuboidObstacle::from_box("a", Vec3(25, 28, 10), Vec3(3, 8, 15))};
  const DynamicPlanResult a = dynamic_informed_rrt_star(Vec2(3, 30), Vec2(57, 30), obs, v, cfg, 11);
  const DynamicPlanResult b = dynamic_informed_rrt_star(Vec2(3, 30), Vec2(57, 30), obs, v, cfg, 11);
  REQUIRE(a.path.size() == b.path.size());
  for (std::size_t i = 0; i < a.path.size(); ++i) CHECK(a.path[i] == b.path[i]);
  for (std::size_t j = 0; j < obs.size(); ++j)
    CHECK(a.buffered_obstacles[j].buffer() == b.buffered_obstacles[j].buffer());
  CHECK(a.clearance[0].min_cstar2 == b.clearance[0].min_cstar2);
}

TEST_CASE("planner configuration validation") {
  PlannerConfig cfg;
  cfg.bounds.hi = Vec2(10, 10);
  CHECK_NOTHROW(cfg.resolved());
  CHECK(cfg.resolved().step == doctest::Approx(std::sqrt(200.0) / 50.0));
  CHECK(cfg.resolved().r_w == doctest::Approx(3.0 * std::sqrt(200.0) / 50.0));
  cfg.goal_bias = 0.5;
  CHECK_THROWS_AS(cfg.resolved(), InvalidInput);
  cfg.goal_bias = 0.05;
  cfg.N_max = 0;
  CHECK_THROWS_AS(cfg.resolved(), InvalidInput);
  cfg.N_max = 100;
  cfg.bounds.hi = Vec2(0, 10);
  CHECK_THROWS_AS(cfg.resolved(), InvalidInput);
}
