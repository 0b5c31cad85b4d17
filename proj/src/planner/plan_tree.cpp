#include <algorithm>
#include <cmath>
#include <sstream>

#include "tubeplan/planner.hpp"

namespace tubeplan {

namespace {

void erase_child(std::vector<int>& children, int child) {
  children.erase(std::remove(children.begin(), children.end(), child), children.end());
}

}  // namespace

PlanTree::PlanTree(const Vec2& start, const Vec2& goal, double goal_radius)
    : start_(start), goal_(goal), goal_radius_(goal_radius) {
  if (!(goal_radius > 0.0)) throw InvalidInput("PlanTree: goal radius must be positive");
  PlanNode root;
  root.coords = start;
  nodes_.push_back(root);
}

std::size_t PlanTree::orphan_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const PlanNode& n) { return n.orphan; }));
}

int PlanTree::add_node(const Vec2& p, int parent) {
  PlanNode n;
  n.coords = p;
  n.parent = parent;
  n.cost = node(parent).cost + (p - node(parent).coords).norm();
  n.orphan = node(parent).orphan;
  nodes_.push_back(n);
  const int id = static_cast<int>(nodes_.size()) - 1;
  nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

void PlanTree::set_parent(int child, int parent) {
  PlanNode& c = nodes_[static_cast<std::size_t>(child)];
  if (c.parent >= 0) erase_child(nodes_[static_cast<std::size_t>(c.parent)].children, child);
  c.parent = parent;
  nodes_[static_cast<std::size_t>(parent)].children.push_back(child);
  recompute_subtree_costs(child);
}

void PlanTree::detach(int child) {
  PlanNode& c = nodes_[static_cast<std::size_t>(child)];
  if (c.parent < 0) return;
  erase_child(nodes_[static_cast<std::size_t>(c.parent)].children, child);
  c.parent = -1;
  mark_subtree(child, true);
}

void PlanTree::reconnect_orphan(int node_id, int parent) {
  // Reverse the parent chain so node_id becomes the root of its component.
  int prev = -1;
  int cur = node_id;
  while (cur >= 0) {
    PlanNode& n = nodes_[static_cast<std::size_t>(cur)];
    const int next = n.parent;
    if (next >= 0) erase_child(nodes_[static_cast<std::size_t>(next)].children, cur);
    n.parent = prev;
    if (prev >= 0) nodes_[static_cast<std::size_t>(prev)].children.push_back(cur);
    prev = cur;
    cur = next;
  }
  PlanNode& n = nodes_[static_cast<std::size_t>(node_id)];
  n.parent = parent;
  nodes_[static_cast<std::size_t>(parent)].children.push_back(node_id);
  mark_subtree(node_id, false);
  recompute_subtree_costs(node_id);
}

void PlanTree::remove_nodes(const std::vector<bool>& remove) {
  if (remove.size() != nodes_.size()) throw InvalidInput("PlanTree::remove_nodes: size mismatch");
  if (remove[0]) throw InvalidInput("PlanTree::remove_nodes: cannot remove the root");

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!remove[i]) continue;
    for (int c : nodes_[i].children) {
      if (remove[static_cast<std::size_t>(c)]) continue;
      nodes_[static_cast<std::size_t>(c)].parent = -1;
      mark_subtree(c, true);
    }
  }

  std::vector<int> remap(nodes_.size(), -1);
  std::vector<PlanNode> kept;
  kept.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (remove[i]) continue;
    remap[i] = static_cast<int>(kept.size());
    kept.push_back(std::move(nodes_[i]));
  }
  for (PlanNode& n : kept) {
    if (n.parent >= 0) n.parent = remap[static_cast<std::size_t>(n.parent)];
    std::vector<int> children;
    for (int c : n.children) {
      if (remap[static_cast<std::size_t>(c)] >= 0) children.push_back(remap[static_cast<std::size_t>(c)]);
    }
    n.children = std::move(children);
  }
  nodes_ = std::move(kept);

  std::vector<int> sols;
  for (int s : solutions_) {
    if (remap[static_cast<std::size_t>(s)] >= 0) sols.push_back(remap[static_cast<std::size_t>(s)]);
  }
  solutions_ = std::move(sols);
  refresh_best();
}

void PlanTree::consider_solution(int i, const std::vector<ConvexPolygon>& obstacles) {
  const PlanNode& n = node(i);
  if (n.orphan || (n.coords - goal_).norm() > goal_radius_) return;
  if (!no_collision_2d(n.coords, goal_, obstacles)) return;
  if (std::find(solutions_.begin(), solutions_.end(), i) == solutions_.end()) solutions_.push_back(i);
  c_best_ = std::min(c_best_, n.cost + (n.coords - goal_).norm());
}

void PlanTree::rebuild_solutions(const std::vector<ConvexPolygon>& obstacles) {
  solutions_.clear();
  c_best_ = kInf;
  for (std::size_t i = 0; i < nodes_.size(); ++i) consider_solution(static_cast<int>(i), obstacles);
}

void PlanTree::refresh_best() {
  c_best_ = kInf;
  for (int s : solutions_) {
    const PlanNode& n = node(s);
    if (n.orphan) continue;
    c_best_ = std::min(c_best_, n.cost + (n.coords - goal_).norm());
  }
}

std::vector<Vec2> PlanTree::best_path() const {
  int best = -1;
  double best_cost = kInf;
  for (int s : solutions_) {
    const PlanNode& n = node(s);
    if (n.orphan) continue;
    const double c = n.cost + (n.coords - goal_).norm();
    if (c < best_cost) {
      best_cost = c;
      best = s;
    }
  }
  std::vector<Vec2> path;
  if (best < 0) return path;
  for (int i = best; i >= 0; i = node(i).parent) path.push_back(node(i).coords);
  std::reverse(path.begin(), path.end());
  if ((path.back() - goal_).norm() > 0.0) path.push_back(goal_);
  return path;
}

bool PlanTree::consistent(std::string* why, double tol) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (nodes_.empty()) return fail("empty tree");
  if (nodes_[0].parent != -1 || nodes_[0].orphan || nodes_[0].cost != 0.0)
    return fail("root must have no parent and zero cost");

  const int n = static_cast<int>(nodes_.size());
  for (int i = 0; i < n; ++i) {
    const PlanNode& nd = node(i);
    if (i != 0 && nd.parent < 0 && !nd.orphan) {
      std::ostringstream os;
      os << "node " << i << " is a second root";
      return fail(os.str());
    }
    if (nd.parent >= n) return fail("parent index out of range");
    if (nd.parent >= 0) {
      const PlanNode& par = node(nd.parent);
      if (std::count(par.children.begin(), par.children.end(), i) != 1)
        return fail("child list disagrees with parent link at node " + std::to_string(i));
      if (!nd.orphan) {
        if (par.orphan) return fail("rooted node under an orphan at node " + std::to_string(i));
        const double expect = par.cost + (nd.coords - par.coords).norm();
        if (std::abs(nd.cost - expect) > tol * (1.0 + expect))
          return fail("cost recursion violated at node " + std::to_string(i));
      }
    }
    for (int c : nd.children) {
      if (c < 0 || c >= n || node(c).parent != i)
        return fail("stale child entry at node " + std::to_string(i));
    }
    int hops = 0;
    for (int j = i; j >= 0; j = node(j).parent) {
      if (++hops > n) return fail("parent cycle through node " + std::to_string(i));
    }
  }

  double best = kInf;
  for (int s : solutions_) {
    const PlanNode& nd = node(s);
    if (nd.orphan) continue;
    if ((nd.coords - goal_).norm() > goal_radius_) return fail("solution node outside goal radius");
    best = std::min(best, nd.cost + (nd.coords - goal_).norm());
  }
  if (best != c_best_ && std::abs(best - c_best_) > tol * (1.0 + best))
    return fail("c_best disagrees with the solution set");
  return true;
}

void PlanTree::mark_subtree(int root, bool orphan) {
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    PlanNode& n = nodes_[static_cast<std::size_t>(i)];
    n.orphan = orphan;
    stack.insert(stack.end(), n.children.begin(), n.children.end());
  }
}

void PlanTree::recompute_subtree_costs(int root) {
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    PlanNode& n = nodes_[static_cast<std::size_t>(i)];
    if (n.parent >= 0) {
      const PlanNode& p = nodes_[static_cast<std::size_t>(n.parent)];
      n.cost = p.cost + (n.coords - p.coords).norm();
    }
    stack.insert(stack.end(), n.children.begin(), n.children.end());
  }
}

}  // namespace tubeplan
