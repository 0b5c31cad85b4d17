#include <cmath>
#include <numbers>

#include "tubeplan/planner.hpp"

namespace tubeplan {

PlannerConfig PlannerConfig::resolved() const {
  PlannerConfig c = *this;
  if (c.step <= 0.0) c.step = bounds.diagonal() / 50.0;
  if (c.r_w <= 0.0) c.r_w = 3.0 * c.step;
  c.validate();
  return c;
}

void PlannerConfig::validate() const {
  if (M == 0 || N_max == 0 || N_conv == 0) throw InvalidInput("planner: M, N_max and N_conv must be positive");
  if (!(tol > 0.0)) throw InvalidInput("planner: tol must be positive");
  if (!(step > 0.0) || !(r_w > 0.0)) throw InvalidInput("planner: step and r_w must be positive");
  if (!(goal_radius > 0.0)) throw InvalidInput("planner: goal_radius must be positive");
  if (!(goal_bias >= 0.0 && goal_bias <= 0.2)) throw InvalidInput("planner: goal_bias must lie in [0, 0.2]");
  if (!((bounds.hi.array() > bounds.lo.array()).all())) throw InvalidInput("planner: empty bounds");
  if (!(cruise_speed > 0.0)) throw InvalidInput("planner: cruise_speed must be positive");
  if (!std::isfinite(altitude)) throw InvalidInput("planner: altitude must be finite");
}

Vec2 sample_ellipse(const Vec2& start, const Vec2& goal, double c_best, const Bounds2& bounds,
                    double goal_bias, RandomStream& rng) {
  if (!std::isfinite(c_best)) {
    if (goal_bias > 0.0 && rng.uniform() < goal_bias) return goal;
    const double u = rng.uniform();
    const double v = rng.uniform();
    return bounds.lo + Vec2(u, v).cwiseProduct(bounds.hi - bounds.lo);
  }

  const Vec2 axis = goal - start;
  const double c_min = axis.norm();
  const double a = 0.5 * c_best;
  const double b = 0.5 * std::sqrt(std::max(0.0, c_best * c_best - c_min * c_min));
  const Vec2 e1 = c_min > 0.0 ? Vec2(axis / c_min) : Vec2(1.0, 0.0);
  const Vec2 e2(-e1.y(), e1.x());
  const Vec2 mid = 0.5 * (start + goal);

  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double r = std::sqrt(rng.uniform());
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const Vec2 q = mid + a * r * std::cos(phi) * e1 + b * r * std::sin(phi) * e2;
    if (bounds.contains(q)) return q;
  }
  return mid;
}

namespace {

int nearest_rooted(const PlanTree& tree, const Vec2& p) {
  int best = -1;
  double best_d2 = kInf;
  const auto& nodes = tree.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].orphan) continue;
    const double d2 = (nodes[i].coords - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<int> subtree(const PlanTree& tree, int root) {
  std::vector<int> out;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    out.push_back(i);
    const auto& ch = tree.node(i).children;
    stack.insert(stack.end(), ch.begin(), ch.end());
  }
  return out;
}

/// Attaches every orphan component that has a node within r_w of x_new.
void reconnect_orphans(PlanTree& tree, int x_new, const std::vector<ConvexPolygon>& obstacles,
                       const PlannerConfig& cfg) {
  const Vec2 p = tree.node(x_new).coords;
  const double r2 = cfg.r_w * cfg.r_w;
  while (tree.orphan_count() > 0) {
    int best = -1;
    double best_d = kInf;
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const PlanNode& n = tree.node(static_cast<int>(i));
      if (!n.orphan) continue;
      const double d2 = (n.coords - p).squaredNorm();
      if (d2 > r2 || d2 >= best_d * best_d) continue;
      if (!no_collision_2d(p, n.coords, obstacles)) continue;
      best = static_cast<int>(i);
      best_d = std::sqrt(d2);
    }
    if (best < 0) return;
    tree.reconnect_orphan(best, x_new);
    for (int i : subtree(tree, best)) tree.consider_solution(i, obstacles);
  }
}

}  // namespace

int add_node(PlanTree& tree, const std::vector<ConvexPolygon>& obstacles, const PlannerConfig& cfg,
             RandomStream& rng) {
  const Vec2 x_rand = sample_ellipse(tree.start(), tree.goal(), tree.c_best(), cfg.bounds,
                                     cfg.goal_bias, rng);
  const int x_nearest = nearest_rooted(tree, x_rand);
  const Vec2 from = tree.node(x_nearest).coords;
  const Vec2 dir = x_rand - from;
  const double dist = dir.norm();
  if (dist == 0.0) return -1;
  const Vec2 x_new = dist <= cfg.step ? x_rand : Vec2(from + dir * (cfg.step / dist));
  if (!no_collision_2d(from, x_new, obstacles)) return -1;

  // Near set among rooted nodes.
  std::vector<int> near;
  const double r2 = cfg.r_w * cfg.r_w;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const PlanNode& n = tree.node(static_cast<int>(i));
    if (!n.orphan && (n.coords - x_new).squaredNorm() <= r2) near.push_back(static_cast<int>(i));
  }

  // Choose parent.
  int x_min = x_nearest;
  double c_min = tree.node(x_nearest).cost + (x_new - from).norm();
  for (int j : near) {
    if (j == x_nearest) continue;
    const PlanNode& n = tree.node(j);
    const double c = n.cost + (x_new - n.coords).norm();
    if (c < c_min && no_collision_2d(n.coords, x_new, obstacles)) {
      x_min = j;
      c_min = c;
    }
  }
  const int id = tree.add_node(x_new, x_min);

  // Rewire.
  for (int j : near) {
    if (j == x_min) continue;
    const PlanNode& n = tree.node(j);
    const double c = tree.node(id).cost + (n.coords - x_new).norm();
    if (c < n.cost - 1e-12 * (1.0 + n.cost) && no_collision_2d(x_new, n.coords, obstacles)) {
      tree.set_parent(j, id);
    }
  }

  if (tree.orphan_count() > 0) reconnect_orphans(tree, id, obstacles, cfg);
  tree.consider_solution(id, obstacles);
  tree.refresh_best();
  return id;
}

InnerLoopStats grow_until_converged(PlanTree& tree, const std::vector<ConvexPolygon>& obstacles,
                                    const PlannerConfig& cfg, RandomStream& rng) {
  InnerLoopStats stats;
  stats.cost_history.reserve(cfg.N_max);
  while (stats.iterations < cfg.N_max) {
    add_node(tree, obstacles, cfg, rng);
    ++stats.iterations;
    stats.cost_history.push_back(tree.c_best());
    const std::size_t k = stats.iterations;
    if (k > cfg.N_conv) {
      const double prev = stats.cost_history[k - 1 - cfg.N_conv];
      const double cur = tree.c_best();
      if (std::isfinite(prev) && std::isfinite(cur) && std::abs((cur - prev) / prev) <= cfg.tol) {
        stats.converged = true;
        break;
      }
    }
  }
  return stats;
}

PlanTree informed_rrt_star(const Vec2& start, const Vec2& goal,
                           const std::vector<ConvexPolygon>& obstacles, const PlannerConfig& cfg,
                           RandomStream& rng, InnerLoopStats* stats) {
  const PlannerConfig c = cfg.resolved();
  if (!c.bounds.contains(start) || !c.bounds.contains(goal))
    throw InvalidInput("informed_rrt_star: start and goal must lie inside the bounds");
  for (const ConvexPolygon& poly : obstacles) {
    if (poly.contains(start)) throw InfeasibleEndpointError("start lies inside obstacle '" + poly.id + "'");
    if (poly.contains(goal)) throw InfeasibleEndpointError("goal lies inside obstacle '" + poly.id + "'");
  }
  PlanTree tree(start, goal, c.goal_radius);
  tree.consider_solution(0, obstacles);
  InnerLoopStats s = grow_until_converged(tree, obstacles, c, rng);
  if (stats) *stats = std::move(s);
  return tree;
}

std::size_t cleanup_and_regrow(PlanTree& tree, const ConvexPolygon& grown,
                               const std::vector<ConvexPolygon>& obstacles, const PlannerConfig& cfg,
                               RandomStream& rng) {
  std::vector<bool> inside(tree.size(), false);
  bool any_inside = false;
  for (std::size_t i = 1; i < tree.size(); ++i) {
    inside[i] = grown.contains(tree.node(static_cast<int>(i)).coords);
    any_inside = any_inside || inside[i];
  }
  if (any_inside) tree.remove_nodes(inside);

  for (std::size_t i = 1; i < tree.size(); ++i) {
    const PlanNode& n = tree.node(static_cast<int>(i));
    if (n.parent < 0) continue;
    if (grown.intersects_segment(tree.node(n.parent).coords, n.coords)) tree.detach(static_cast<int>(i));
  }
  tree.rebuild_solutions(obstacles);

  std::size_t iterations = 0;
  while (tree.orphan_count() > 0 && iterations < cfg.regrow_cap()) {
    add_node(tree, obstacles, cfg, rng);
    ++iterations;
  }

  if (tree.orphan_count() > 0) {
    std::vector<bool> orphaned(tree.size(), false);
    for (std::size_t i = 0; i < tree.size(); ++i) orphaned[i] = tree.node(static_cast<int>(i)).orphan;
    tree.remove_nodes(orphaned);
  }
  tree.refresh_best();
  return iterations;
}

}  // namespace tubeplan
