#pragma once

#include <array>
#include <vector>

#include "tubeplan/sim.hpp"
#include "tubeplan/types.hpp"

namespace tubeplan {

/// Integrates dP/dt = A P + P A^T + B_n B_n^T with RK4 on the linearization grid.
/// A and B_n are interpolated linearly at half steps; P is symmetrized every step.
CovarianceHistory propagate_covariance(const LinearizationHistory& lin, const MatX& P0);

/// Regularized lower incomplete gamma P(a, x). Series below x = a + 1,
/// Lentz continued fraction above.
double regularized_gamma_p(double a, double x);

/// CDF of the chi-squared distribution with `dof` degrees of freedom.
double chi2_cdf(double x, int dof);

/// c^2 with chi2_cdf(c^2, dof) = beta, by bisection. Throws InvalidInput outside (0, 1).
double chi2_quantile(double beta, int dof = 3);

/// {w : (w - center)^T sigma^-1 (w - center) <= c2} at time t.
struct ConfidenceEllipsoid {
  double t = 0.0;
  Vec3 center = Vec3::Zero();
  Mat3 sigma = Mat3::Zero();
  double c2 = 0.0;
};

struct Tube {
  std::vector<ConfidenceEllipsoid> ellipsoids;
  double beta = 0.0;

  bool empty() const { return ellipsoids.empty(); }
  std::size_t size() const { return ellipsoids.size(); }
};

/// Ellipsoid tube from the nominal positions and the matching 3x3 covariance blocks.
Tube build_tube(const Trajectory& nominal, const CovarianceHistory& cov, double beta,
                const std::array<int, 3>& position_rows);

}  // namespace tubeplan
