#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tubeplan/planner.hpp"
#include "tubeplan/sim.hpp"
#include "tubeplan/vehicle_models.hpp"

namespace tubeplan::testing {

/// Scalar Ornstein-Uhlenbeck system xdot = -a x + b n.
class OuModel final : public VehicleModel {
 public:
  OuModel(double a, double b) : a_(a), b_(b) {}
  VehicleKind kind() const override { return VehicleKind::kQuadrotor; }
  int state_dim() const override { return 1; }
  int noise_dim() const override { return 1; }
  std::array<int, 3> position_rows() const override { return {0, 0, 0}; }
  VecX derivative(const VecX& x, const DesiredSample&, const VecX& noise) const override {
    VecX dx(1);
    dx(0) = -a_ * x(0) + b_ * noise(0);
    return dx;
  }
  VecX matched_initial_state(const DesiredTrajectory&, double) const override {
    return VecX::Zero(1);
  }

 private:
  double a_, b_;
};

inline DesiredTrajectory constant_trajectory(const Vec3& r, double dt = 0.01) {
  return DesiredTrajectory([r](double) { return Kinematics{r, Vec3::Zero(), Vec3::Zero()}; }, dt);
}

inline DesiredTrajectory straight_trajectory(const Vec3& r0, const Vec3& v, double dt = 0.01) {
  return DesiredTrajectory([r0, v](double t) { return Kinematics{r0 + v * t, v, Vec3::Zero()}; },
                           dt);
}

/// x = v t, y = a sin(w t), z = h0 + 0.5 sin(0.5 w t).
inline DesiredTrajectory weave_trajectory(double v, double a, double w, double h0,
                                          double dt = 0.01) {
  return DesiredTrajectory(
      [=](double t) {
        Kinematics k;
        k.r = Vec3(v * t, a * std::sin(w * t), h0 + 0.5 * std::sin(0.5 * w * t));
        k.rdot = Vec3(v, a * w * std::cos(w * t), 0.25 * w * std::cos(0.5 * w * t));
        k.rddot = Vec3(0.0, -a * w * w * std::sin(w * t), -0.125 * w * w * std::sin(0.5 * w * t));
        return k;
      },
      dt);
}

inline PlannerConfig square_config(double side) {
  PlannerConfig cfg;
  cfg.bounds.lo = Vec2::Zero();
  cfg.bounds.hi = Vec2::Constant(side);
  return cfg.resolved();
}

inline ConvexPolygon square(const std::string& id, const Vec2& c, double half) {
  return *slice_obstacle(CuboidObstacle::from_box(id, Vec3(c.x(), c.y(), 10.0), Vec3(half, half, 20.0)),
                         10.0, 0.0);
}

inline bool in_subtree(const PlanTree& tree, int root, int x) {
  for (int cur = x; cur >= 0; cur = tree.node(cur).parent)
    if (cur == root) return true;
  return false;
}

/// Random tree mutations; returns the number of steps after which the tree was inconsistent.
inline int tree_fuzz(std::uint64_t seed, int steps, std::string* first_violation = nullptr) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PlannerConfig cfg = square_config(30.0);
  const std::vector<ConvexPolygon> polys{square("a", Vec2(12, 15), 3.0), square("b", Vec2(20, 8), 2.0)};
  PlanTree tree(Vec2(2, 2), Vec2(28, 28), 1.5);
  RandomStream rng(seed + 1);
  auto pick = [&](auto pred) {
    std::vector<int> c;
    for (int i = 0; i < static_cast<int>(tree.size()); ++i)
      if (pred(i)) c.push_back(i);
    if (c.empty()) return -1;
    return c[static_cast<std::size_t>(u(gen) * c.size()) % c.size()];
  };

  std::string why;
  int violations = 0;
  for (int step = 0; step < steps; ++step) {
    const double op = u(gen);
    if (op < 0.45 || tree.size() < 5) {
      add_node(tree, polys, cfg, rng);
    } else if (op < 0.6) {
      const int child = pick([&](int i) { return i > 0 && !tree.node(i).orphan; });
      const int parent = pick([&](int i) { return !tree.node(i).orphan && (child < 0 || !in_subtree(tree, child, i)); });
      if (child > 0 && parent >= 0) tree.set_parent(child, parent);
    } else if (op < 0.7) {
      const int child = pick([&](int i) { return i > 0 && tree.node(i).parent >= 0; });
      if (child > 0) tree.detach(child);
    } else if (op < 0.8) {
      const int orphan = pick([&](int i) { return tree.node(i).orphan; });
      const int parent = pick([&](int i) { return !tree.node(i).orphan; });
      if (orphan >= 0) tree.reconnect_orphan(orphan, parent);
    } else if (op < 0.87) {
      std::vector<bool> remove(tree.size(), false);
      for (std::size_t i = 1; i < tree.size(); ++i) remove[i] = u(gen) < 0.05;
      tree.remove_nodes(remove);
    } else if (op < 0.9) {
      const ConvexPolygon grown = square("g", Vec2(30 * u(gen), 30 * u(gen)), 1.0 + 2 * u(gen));
      if (!grown.contains(tree.start()) && !grown.contains(tree.goal())) {
        std::vector<ConvexPolygon> all = polys;
        all.push_back(grown);
        PlannerConfig small = cfg;
        small.N_max = 40;
        cleanup_and_regrow(tree, grown, all, small, rng);
      }
    } else {
      tree.rebuild_solutions(polys);
    }
    tree.refresh_best();
    if (!tree.consistent(&why)) {
      if (violations++ == 0 && first_violation) *first_violation = "step " + std::to_string(step) + ": " + why;
    }
    if (tree.size() > 1500) {
      std::vector<bool> remove(tree.size(), false);
      for (std::size_t i = 1; i < tree.size(); ++i) remove[i] = u(gen) < 0.5;
      tree.remove_nodes(remove);
    }
  }
  return violations;
}

inline QuadrotorParams calm_quadrotor() {
  QuadrotorParams p;
  p.sigma = Vec3::Zero();
  return p;
}

// ---------------------------------------------------------------------------
// Independent transcription of the fixed-wing closed loop, generic in the
// scalar type so it can be differentiated by the complex step.
// ---------------------------------------------------------------------------

template <class T>
using Vec14 = std::array<T, 14>;

template <class T>
Vec14<T> fixed_wing_oracle(const Vec14<T>& s, const DesiredSample& des, const std::array<T, 3>& n,
                           const FixedWingParams& p) {
  using std::asin;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T x = s[0], y = s[1], h = s[2], V = s[3], psi = s[4], gam = s[5], thrust = s[6];
  const T Vd = s[7], psid = s[8], eu = s[9];
  const T ew0 = s[10], ew1 = s[11], ev0 = s[12], ev1 = s[13];
  const double m = p.m, g = p.g, rho = p.rho, S = p.S;
  const double spi = std::sqrt(std::numbers::pi);

  // Longitudinal outer loop.
  const T gam_d = asin((des.hdot() - p.kappa * (h - des.h())) / V);

  // Lateral outer loop by Cramer's rule.
  const T cg = cos(gam), sg = sin(gam);
  const T ex = x - des.r.x(), ey = y - des.r.y();
  const T edx = V * cg * cos(psi) - des.rdot.x();
  const T edy = V * cg * sin(psi) - des.rdot.y();
  const T sx = edx + p.kappa * ex, sy = edy + p.kappa * ey;
  const T rx = des.etaddot_fd.x() - p.kappa * edx - (p.Lambda_f(0, 0) * sx + p.Lambda_f(0, 1) * sy);
  const T ry = des.etaddot_fd.y() - p.kappa * edy - (p.Lambda_f(1, 0) * sx + p.Lambda_f(1, 1) * sy);
  const T a11 = cg * cos(psid), a12 = -Vd * cg * sin(psid);
  const T a21 = cg * sin(psid), a22 = Vd * cg * cos(psid);
  const T det = a11 * a22 - a12 * a21;
  const T dVd = (rx * a22 - a12 * ry) / det;
  const T dpsid = (a11 * ry - rx * a21) / det;

  // Inner loop.
  const T qS = S * V * V * rho;
  const T mu = p.kappa_mu * (psid - psi);
  const T CL = 2.0 * m * g * cg / qS + p.kappa_CL * (gam_d - gam);
  const T Tbar = m * g * sg + 0.5 * p.C_D0 * qS + 2.0 * p.K_d * m * m * g * g * cg * cg / qS;
  const T Td = Tbar + p.kappa_T2 * (Vd - V);

  // Gust filters.
  const T Au = -V / p.L_u;
  const T Cu = std::sqrt(2.0) * V * p.sigma_u * sqrt(p.L_u / V) / (p.L_u * spi);
  auto second = [&](double sigma, double L, T e0, T e1, T ni, T& w, T& wdot, T& d0, T& d1) {
    const T gain = V * sigma * sqrt(L / V) / (L * spi);
    const T c0 = gain * std::sqrt(3.0), c1 = gain * V / L;
    d0 = -2.0 * V / L * e0 - V * V / (L * L) * e1 + ni;
    d1 = e0;
    w = c0 * e0 + c1 * e1;
    wdot = c0 * d0 + c1 * d1;
  };
  T ww, wwdot, dw0, dw1, wv, wvdot, dv0, dv1;
  second(p.sigma_w, p.L_w, ew0, ew1, n[1], ww, wwdot, dw0, dw1);
  second(p.sigma_v, p.L_v, ev0, ev1, n[2], wv, wvdot, dv0, dv1);
  const T deu = Au * eu + n[0];
  const T wu = Cu * eu, wudot = Cu * deu;

  // Body (u, w, v) to inertial (x, y, h): Rz(psi) Ry(gamma) Rx(-mu).
  using M3 = std::array<std::array<T, 3>, 3>;
  auto mul = [](const M3& a, const M3& b) {
    M3 c{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        c[i][j] = T(0.0);
        for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
      }
    return c;
  };
  const T cp = cos(psi), sp = sin(psi), cm = cos(mu), sm = sin(mu);
  const T zero(0.0), one(1.0);
  const M3 Rz{{{cp, -sp, zero}, {sp, cp, zero}, {zero, zero, one}}};
  const M3 Ry{{{cg, zero, sg}, {zero, one, zero}, {-sg, zero, cg}}};
  const M3 Rx{{{one, zero, zero}, {zero, cm, sm}, {zero, -sm, cm}}};
  const M3 R = mul(mul(Rz, Ry), Rx);
  std::array<T, 3> w{}, wd{};
  for (int i = 0; i < 3; ++i) {
    w[i] = R[i][0] * wu + R[i][1] * ww + R[i][2] * wv;
    wd[i] = R[i][0] * wudot + R[i][1] * wwdot + R[i][2] * wvdot;
  }

  const T q = 0.5 * rho * S * V * V;
  const T lift = CL * q;
  const T drag = (p.C_D0 + p.K_d * CL * CL) * q;

  Vec14<T> d;
  d[0] = V * cg * cp + w[0];
  d[1] = V * cg * sp + w[1];
  d[2] = V * sg + w[2];
  d[3] = (thrust - drag) / m - g * sg - wd[0] * cg * cp - wd[1] * cg * sp + wd[2] * sg;
  d[4] = -(lift * sm - m * wd[0] * sp + m * wd[1] * cp) / (V * m * cg);
  d[5] = (lift * cm - m * g * cg + m * wd[0] * cp * sg + m * wd[1] * sg * sp + m * wd[2] * cg) /
         (V * m);
  d[6] = p.kappa_T1 * (Td - thrust);
  d[7] = dVd;
  d[8] = dpsid;
  d[9] = deu;
  d[10] = dw0;
  d[11] = dw1;
  d[12] = dv0;
  d[13] = dv1;
  return d;
}

inline VecX fixed_wing_oracle(const VecX& x, const DesiredSample& des, const Vec3& n,
                              const FixedWingParams& p) {
  Vec14<double> s;
  for (int i = 0; i < 14; ++i) s[i] = x(i);
  const Vec14<double> d = fixed_wing_oracle<double>(s, des, {n(0), n(1), n(2)}, p);
  VecX out(14);
  for (int i = 0; i < 14; ++i) out(i) = d[i];
  return out;
}

/// Complex-step Jacobians of the oracle with respect to state and noise.
inline std::pair<MatX, MatX> fixed_wing_oracle_jacobians(const VecX& x, const DesiredSample& des,
                                                         const FixedWingParams& p) {
  using C = std::complex<double>;
  constexpr double h = 1e-30;
  MatX A(14, 14), B(14, 3);
  for (int j = 0; j < 17; ++j) {
    Vec14<C> s;
    for (int i = 0; i < 14; ++i) s[i] = C(x(i), 0.0);
    std::array<C, 3> n{C(0.0), C(0.0), C(0.0)};
    if (j < 14) s[j] += C(0.0, h);
    else n[j - 14] += C(0.0, h);
    const Vec14<C> d = fixed_wing_oracle<C>(s, des, n, p);
    for (int i = 0; i < 14; ++i) {
      if (j < 14) A(i, j) = d[i].imag() / h;
      else B(i, j - 14) = d[i].imag() / h;
    }
  }
  return {A, B};
}

// ---------------------------------------------------------------------------
// Planar geometry oracles
// ---------------------------------------------------------------------------

inline bool strictly_inside(const ConvexPolygon& poly, const Vec2& p, double margin = 1e-9) {
  for (std::size_t i = 0; i < poly.normals.size(); ++i)
    if (poly.normals[i].dot(p) >= poly.offsets[i] - margin) return false;
  return true;
}

inline bool inside_closed(const ConvexPolygon& poly, const Vec2& p) {
  for (std::size_t i = 0; i < poly.normals.size(); ++i)
    if (poly.normals[i].dot(p) > poly.offsets[i]) return false;
  return true;
}

/// Vertices of a convex polygon by pairwise line intersection.
inline std::vector<Vec2> polygon_vertices(const ConvexPolygon& poly) {
  std::vector<Vec2> out;
  const std::size_t m = poly.normals.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      Mat2 N;
      N.row(0) = poly.normals[i].transpose();
      N.row(1) = poly.normals[j].transpose();
      if (std::abs(N.determinant()) < 1e-12) continue;
      const Vec2 v = N.partialPivLu().solve(Vec2(poly.offsets[i], poly.offsets[j]));
      bool ok = true;
      for (std::size_t k = 0; k < m; ++k)
        if (poly.normals[k].dot(v) > poly.offsets[k] + 1e-9) ok = false;
      if (ok) out.push_back(v);
    }
  return out;
}

/// Shortest path length through polygon corners; an edge is visible when no
/// densely sampled point lies strictly inside any polygon.
inline double visibility_graph_shortest(const Vec2& start, const Vec2& goal,
                                        const std::vector<ConvexPolygon>& polys) {
  std::vector<Vec2> nodes{start, goal};
  for (const ConvexPolygon& poly : polys)
    for (const Vec2& v : polygon_vertices(poly)) nodes.push_back(v);
  const std::size_t n = nodes.size();
  auto visible = [&](const Vec2& a, const Vec2& b) {
    constexpr int kSamples = 2000;
    for (int s = 1; s < kSamples; ++s) {
      const Vec2 p = a + (b - a) * (static_cast<double>(s) / kSamples);
      for (const ConvexPolygon& poly : polys)
        if (strictly_inside(poly, p, 1e-7)) return false;
    }
    return true;
  };
  std::vector<double> dist(n, kInf);
  std::vector<bool> done(n, false);
  dist[0] = 0.0;
  for (std::size_t iter = 0; iter < n; ++iter) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i] && (u == n || dist[i] < dist[u])) u = i;
    if (u == n || !std::isfinite(dist[u])) break;
    done[u] = true;
    for (std::size_t v = 0; v < n; ++v) {
      if (done[v]) continue;
      const double c = dist[u] + (nodes[v] - nodes[u]).norm();
      if (c < dist[v] && visible(nodes[u], nodes[v])) dist[v] = c;
    }
  }
  return dist[1];
}

}  // namespace tubeplan::testing
