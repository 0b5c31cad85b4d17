#include <cmath>

#include "tubeplan/collision.hpp"

namespace tubeplan {

namespace {

double max_eigenvalue(const Mat3& sigma) {
  Eigen::SelfAdjointEigenSolver<Mat3> es;
  es.computeDirect(0.5 * (sigma + sigma.transpose()), Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t stride) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < n; k += stride) idx.push_back(k);
  if (n > 0 && idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

}  // namespace

bool sphere_prefilter(const ConfidenceEllipsoid& ell, const BoundingSphere& sphere) {
  const double ell_radius = std::sqrt(ell.c2 * max_eigenvalue(ell.sigma));
  return (ell.center - sphere.center).norm() <= ell_radius + sphere.radius;
}

bool sphere_prefilter(const ConfidenceEllipsoid& ell, const CuboidObstacle& obs) {
  // Circumsphere of the obstacle as buffered; face offsets move corners by
  // more than d, so the radius is taken from the offset vertices directly.
  return sphere_prefilter(ell, obs.bounding_sphere(std::max(obs.buffer(), 0.0)));
}

std::vector<ClearanceReport> check_tube_collision(const Tube& tube,
                                                  const std::vector<CuboidObstacle>& obstacles,
                                                  std::size_t stride) {
  if (stride == 0) throw InvalidInput("check_tube_collision: stride must be >= 1");
  std::vector<ClearanceReport> reports;
  reports.reserve(obstacles.size());
  const double c2 = tube.empty() ? 0.0 : tube.ellipsoids.front().c2;

  for (const CuboidObstacle& obs : obstacles) {
    ClearanceReport rep;
    rep.obstacle_id = obs.id();
    rep.c2 = c2;
    const BoundingSphere sphere = obs.bounding_sphere(0.0);
    QpWarmStart warm;
    for (std::size_t k : sample_indices(tube.size(), stride)) {
      const ConfidenceEllipsoid& ell = tube.ellipsoids[k];
      ++rep.samples_checked;
      if (!sphere_prefilter(ell, sphere)) continue;
      QpResult qp;
      try {
        qp = solve_qp(ell.sigma, ell.center, obs.A(), obs.b(), &warm);
      } catch (const std::exception& e) {
        throw CollisionCheckError(obs.id(), ell.t, e.what());
      }
      ++rep.qp_solves;
      if (qp.cstar2 < rep.min_cstar2) {
        rep.min_cstar2 = qp.cstar2;
        rep.argmin_t = ell.t;
        rep.worst_z = qp.z_star;
      }
    }
    rep.collide = rep.min_cstar2 < c2;
    reports.push_back(rep);
  }
  return reports;
}

BufferSolve buffer_touch_distance(const Tube& tube, const CuboidObstacle& obs, double c2) {
  if (tube.empty()) throw InvalidInput("buffer_touch_distance: empty tube");

  BufferSolve out;
  out.cstar2_true = std::numeric_limits<double>::infinity();
  QpWarmStart warm;
  for (std::size_t k = 0; k < tube.size(); ++k) {
    const ConfidenceEllipsoid& ell = tube.ellipsoids[k];
    const QpResult qp = solve_qp(ell.sigma, ell.center, obs.A(), obs.b(), &warm);
    if (qp.cstar2 < out.cstar2_true) {
      out.cstar2_true = qp.cstar2;
      out.sample = k;
      out.t = ell.t;
    }
  }

  const ConfidenceEllipsoid& ell = tube.ellipsoids[out.sample];
  QpWarmStart local;
  auto cstar2_at = [&](double d) {
    return solve_qp(ell.sigma, ell.center, obs.A(), obs.offset_b(d), &local).cstar2;
  };

  // Bracket: c*^2 is non-increasing in the offset d.
  const double scale = std::max(std::sqrt(c2 * max_eigenvalue(ell.sigma)), 1e-3);
  double lo = 0.0;
  double hi = 0.0;
  if (out.cstar2_true > c2) {
    hi = scale;
    for (int i = 0; cstar2_at(hi) > c2; ++i) {
      if (i > 200) throw BracketFailure("buffer_touch_distance: could not bracket from above");
      lo = hi;
      hi *= 2.0;
    }
  } else {
    lo = -scale;
    for (int i = 0;; ++i) {
      if (i > 200) throw BracketFailure("buffer_touch_distance: could not bracket from below");
      if (!obs.interior_point(lo)) {
        // Shrunk past emptiness: locate the smallest non-empty offset in (lo, hi].
        double empty = lo;
        double nonempty = hi;
        for (int j = 0; j < 60; ++j) {
          const double m = 0.5 * (empty + nonempty);
          (obs.interior_point(m) ? nonempty : empty) = m;
        }
        if (nonempty < hi && cstar2_at(nonempty) > c2) {
          lo = nonempty;
          break;
        }
        throw BracketFailure("buffer_touch_distance: tube engulfs obstacle '" + obs.id() +
                             "'; no shrink offset reaches c*^2 = c^2");
      }
      if (cstar2_at(lo) > c2) break;
      hi = lo;
      lo *= 2.0;
    }
  }

  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double g = cstar2_at(mid);
    if (std::abs(g - c2) <= 1e-6) break;
    if (g > c2) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-13 * (1.0 + std::abs(mid))) break;
  }
  out.clearance = mid;
  return out;
}

}  // namespace tubeplan
