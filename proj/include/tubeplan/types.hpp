#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tubeplan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Raised when a model is evaluated outside the region where its equations are defined
/// (zero airspeed, singular lateral controller, ...).
class ModelDomainError : public std::domain_error {
 public:
  explicit ModelDomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised when inputs have inconsistent dimensions or violate a structural precondition.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace tubeplan
