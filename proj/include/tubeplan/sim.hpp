#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tubeplan/types.hpp"
#include "tubeplan/vehicle_models.hpp"

namespace tubeplan {

/// Uniform time grid t_k = t0 + k*dt, k = 0 .. count-1.
struct TimeGrid {
  double t0 = 0.0;
  double tf = 1.0;
  double dt = 0.01;
  std::size_t count = 0;

  /// Builds the grid with count = round((tf - t0)/dt) + 1.
  static TimeGrid make(double t0, double tf, double dt);
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  bool operator==(const TimeGrid&) const = default;
};

struct Trajectory {
  TimeGrid grid;
  std::vector<VecX> states;
  VehicleKind kind = VehicleKind::kQuadrotor;
};

struct LinearizationHistory {
  TimeGrid grid;
  std::vector<MatX> A;    ///< df/dX along the nominal
  std::vector<MatX> B_n;  ///< df/dn along the nominal
};

struct CovarianceHistory {
  TimeGrid grid;
  std::vector<MatX> P;
};

/// Model-domain failure annotated with the simulation time at which it occurred.
class SimulationError : public ModelDomainError {
 public:
  SimulationError(const std::string& what, double t)
      : ModelDomainError(what + " (t = " + std::to_string(t) + " s)"), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Classical RK4 with n = 0.
Trajectory integrate_nominal(const VehicleModel& model, const VecX& x0,
                             const DesiredTrajectory& des, const TimeGrid& grid);

/// Finite-difference step used for state column i.
inline double fd_step(double x) { return std::max(1e-6, 1e-6 * std::abs(x)); }

/// Central-difference Jacobians of f w.r.t. X and n at every grid point.
LinearizationHistory linearize(const VehicleModel& model, const Trajectory& nominal,
                               const DesiredTrajectory& des);

// ---------------------------------------------------------------------------
// Random numbers
//
// Every Monte Carlo run owns a std::mt19937_64 seeded with (base_seed + run
// index). Uniforms take the top 53 bits of one draw, u = (k + 0.5) * 2^-53, and
// standard normals are produced by the inverse CDF, z = -sqrt(2) erfc^-1(2u).
// Both steps are fully specified, so runs are bit-reproducible across platforms.
// ---------------------------------------------------------------------------

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// One Euler-Maruyama sample path; n_k ~ N(0, I)/sqrt(dt) drawn independently per step.
Trajectory mc_run(const VehicleModel& model, const VecX& x0, const DesiredTrajectory& des,
                  const TimeGrid& grid, std::uint64_t seed);

/// Euler integration with n = 0 (the zero-noise limit of mc_run).
Trajectory integrate_euler(const VehicleModel& model, const VecX& x0,
                           const DesiredTrajectory& des, const TimeGrid& grid);

struct EnsembleResult {
  Trajectory mean;
  CovarianceHistory covariance;  ///< unbiased sample covariance
  std::size_t runs = 0;
};

/// Runs `runs` sample paths seeded base_seed + i and reduces them into a mean
/// and sample covariance. Work is split into a fixed set of contiguous blocks
/// merged in a fixed order, so the result does not depend on `threads`.
EnsembleResult mc_ensemble(const VehicleModel& model, const VecX& x0,
                           const DesiredTrajectory& des, const TimeGrid& grid,
                           std::size_t runs, std::uint64_t base_seed, unsigned threads = 0);

}  // namespace tubeplan
