#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tubeplan/types.hpp"
#include "tubeplan/uncertainty.hpp"

namespace tubeplan {

using FaceMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

class InfeasibleRegion : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QpIterationLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BracketFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solver failure annotated with the obstacle and the tube sample time.
class CollisionCheckError : public std::runtime_error {
 public:
  CollisionCheckError(const std::string& obstacle, double t, const std::string& what)
      : std::runtime_error("obstacle '" + obstacle + "' at t = " + std::to_string(t) + " s: " + what) {}
};

struct BoundingSphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// Convex obstacle {z : A z <= b + d*1}. Rows of A have unit norm so the
/// buffer d moves every face outward by d metres.
class CuboidObstacle {
 public:
  CuboidObstacle() = default;

  /// Axis-aligned box rotated by `yaw` about the vertical axis.
  static CuboidObstacle from_box(std::string id, const Vec3& center, const Vec3& half_extents,
                                 double yaw = 0.0);
  /// Raw half-spaces; rows are normalized. Throws InvalidInput if the set is
  /// empty, unbounded, or a row is zero.
  static CuboidObstacle from_halfspaces(std::string id, const FaceMatrix& A, const VecX& b);

  const std::string& id() const { return id_; }
  const FaceMatrix& A() const { return A_; }
  const VecX& b() const { return b_; }
  double buffer() const { return buffer_; }
  void set_buffer(double d) { buffer_ = d; }

  /// Right-hand side with every face moved outward by d.
  VecX offset_b(double d) const { return b_ + VecX::Constant(b_.size(), d); }
  VecX buffered_b() const { return offset_b(buffer_); }

  /// Vertices of {A z <= b + d}; empty if that set is empty.
  std::vector<Vec3> vertices(double d = 0.0) const;
  /// Vertex average; an interior point whenever the set has volume.
  std::optional<Vec3> interior_point(double d = 0.0) const;
  BoundingSphere bounding_sphere(double d = 0.0) const;
  /// Largest face violation max_i(a_i z - b_i); <= d means z is inside the d-offset set.
  double face_distance(const Vec3& z) const;

 private:
  std::string id_;
  FaceMatrix A_;
  VecX b_;
  double buffer_ = 0.0;
};

std::vector<Vec3> polytope_vertices(const FaceMatrix& A, const VecX& b);

struct QpResult {
  Vec3 z_star = Vec3::Zero();
  double cstar2 = 0.0;
  std::vector<int> active;
  int iterations = 0;
  double kkt_residual = 0.0;
};

/// Optional warm start carried between consecutive tube samples.
struct QpWarmStart {
  bool valid = false;
  Vec3 z = Vec3::Zero();
  std::vector<int> active;
};

/// min (z - center)^T sigma^-1 (z - center)  s.t.  A z <= b, by a primal
/// active-set method on the whitened problem. A near-singular sigma is
/// regularized with 1e-12 * trace(sigma) on the diagonal.
QpResult solve_qp(const Mat3& sigma, const Vec3& center, const FaceMatrix& A, const VecX& b,
                  QpWarmStart* warm = nullptr);

/// Necessary condition for intersection of the ellipsoid with the buffered obstacle.
bool sphere_prefilter(const ConfidenceEllipsoid& ell, const CuboidObstacle& obs);
bool sphere_prefilter(const ConfidenceEllipsoid& ell, const BoundingSphere& obstacle_sphere);

struct ClearanceReport {
  std::string obstacle_id;
  double min_cstar2 = std::numeric_limits<double>::infinity();
  double argmin_t = std::numeric_limits<double>::quiet_NaN();
  Vec3 worst_z = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  double c2 = 0.0;
  bool collide = false;
  std::size_t samples_checked = 0;
  std::size_t qp_solves = 0;
};

/// Checks every stride-th tube sample (and the last one) against the true
/// obstacles. min_cstar2 stays +inf when the prefilter rejects every sample.
std::vector<ClearanceReport> check_tube_collision(const Tube& tube,
                                                  const std::vector<CuboidObstacle>& obstacles,
                                                  std::size_t stride = 1);

struct BufferSolve {
  /// Uniform face offset of the true obstacle at which the binding ellipsoid
  /// just touches it: positive when the tube clears the obstacle, negative
  /// when it intrudes.
  double clearance = 0.0;
  std::size_t sample = 0;
  double t = 0.0;
  double cstar2_true = 0.0;  ///< c*^2 against the true obstacle at that sample
};

/// Finds the binding tube sample (minimum c*^2 against the true obstacle) and
/// bisects on the face offset d' until c*^2 = c2 there.
BufferSolve buffer_touch_distance(const Tube& tube, const CuboidObstacle& obs, double c2);

}  // namespace tubeplan
