#include <cmath>

#include "tubeplan/collision.hpp"

namespace tubeplan {

namespace {

double feasibility_tol(const VecX& b) { return 1e-9 * (1.0 + b.cwiseAbs().maxCoeff()); }

bool has_recession_direction(const FaceMatrix& A) {
  Eigen::FullPivLU<MatX> lu(A);
  if (lu.rank() < 3) return true;
  // A pointed recession cone in R^3 has an extreme ray on two face planes.
  const Eigen::Index m = A.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const Vec3 d = A.row(i).transpose().cross(A.row(j).transpose());
      if (d.norm() < 1e-12) continue;
      for (double sign : {1.0, -1.0}) {
        if (((A * (sign * d)).array() <= 1e-12).all()) return true;
      }
    }
  }
  return false;
}

}  // namespace

std::vector<Vec3> polytope_vertices(const FaceMatrix& A, const VecX& b) {
  std::vector<Vec3> out;
  const Eigen::Index m = A.rows();
  const double tol = feasibility_tol(b);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      for (Eigen::Index k = j + 1; k < m; ++k) {
        Mat3 M;
        M.row(0) = A.row(i);
        M.row(1) = A.row(j);
        M.row(2) = A.row(k);
        if (std::abs(M.determinant()) < 1e-12) continue;
        const Vec3 v = M.partialPivLu().solve(Vec3(b(i), b(j), b(k)));
        if (((A * v - b).array() > tol).any()) continue;
        bool duplicate = false;
        for (const Vec3& w : out) {
          if ((w - v).norm() <= 1e-9 * (1.0 + v.norm())) {
            duplicate = true;
            break;
          }
        }
        if (!duplicate) out.push_back(v);
      }
    }
  }
  return out;
}

CuboidObstacle CuboidObstacle::from_box(std::string id, const Vec3& center, const Vec3& half,
                                        double yaw) {
  if ((half.array() <= 0).any()) throw InvalidInput("obstacle '" + id + "': half extents must be positive");
  const Vec3 ex(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 ey(-std::sin(yaw), std::cos(yaw), 0.0);
  const Vec3 ez(0.0, 0.0, 1.0);
  FaceMatrix A(6, 3);
  VecX b(6);
  const Vec3 axes[3] = {ex, ey, ez};
  for (int i = 0; i < 3; ++i) {
    A.row(2 * i) = axes[i].transpose();
    b(2 * i) = axes[i].dot(center) + half(i);
    A.row(2 * i + 1) = -axes[i].transpose();
    b(2 * i + 1) = -axes[i].dot(center) + half(i);
  }
  CuboidObstacle obs;
  obs.id_ = std::move(id);
  obs.A_ = A;
  obs.b_ = b;
  return obs;
}

CuboidObstacle CuboidObstacle::from_halfspaces(std::string id, const FaceMatrix& A, const VecX& b) {
  if (A.rows() != b.size() || A.rows() < 4)
    throw InvalidInput("obstacle '" + id + "': need at least 4 faces with matching b");
  FaceMatrix An = A;
  VecX bn = b;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double norm = A.row(i).norm();
    if (!(norm > 1e-12)) throw InvalidInput("obstacle '" + id + "': zero face normal");
    An.row(i) /= norm;
    bn(i) /= norm;
  }
  if (has_recession_direction(An)) throw InvalidInput("obstacle '" + id + "': region is unbounded");
  if (polytope_vertices(An, bn).empty()) throw InvalidInput("obstacle '" + id + "': region is empty");
  CuboidObstacle obs;
  obs.id_ = std::move(id);
  obs.A_ = An;
  obs.b_ = bn;
  return obs;
}

std::vector<Vec3> CuboidObstacle::vertices(double d) const { return polytope_vertices(A_, offset_b(d)); }

std::optional<Vec3> CuboidObstacle::interior_point(double d) const {
  const auto verts = vertices(d);
  if (verts.empty()) return std::nullopt;
  Vec3 c = Vec3::Zero();
  for (const Vec3& v : verts) c += v;
  return c / static_cast<double>(verts.size());
}

BoundingSphere CuboidObstacle::bounding_sphere(double d) const {
  const auto verts = vertices(d);
  BoundingSphere s;
  if (verts.empty()) return s;
  for (const Vec3& v : verts) s.center += v;
  s.center /= static_cast<double>(verts.size());
  for (const Vec3& v : verts) s.radius = std::max(s.radius, (v - s.center).norm());
  return s;
}

double CuboidObstacle::face_distance(const Vec3& z) const { return (A_ * z - b_).maxCoeff(); }

}  // namespace tubeplan
