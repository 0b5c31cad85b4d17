#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>

#include "tubeplan/types.hpp"

namespace tubeplan {

// ---------------------------------------------------------------------------
// Desired trajectory
// ---------------------------------------------------------------------------

/// Reference kinematics at one instant. Position is (x1, x2, x3) for the
/// quadrotor and (x, y, h) for the fixed-wing aircraft.
struct Kinematics {
  Vec3 r = Vec3::Zero();
  Vec3 rdot = Vec3::Zero();
  Vec3 rddot = Vec3::Zero();
};

/// Everything a closed-loop right-hand side needs from the reference at time t.
/// `etaddot_fd` is the central finite-difference estimate of the planar
/// acceleration used by the fixed-wing lateral controller.
struct DesiredSample {
  double t = 0.0;
  Vec3 r = Vec3::Zero();
  Vec3 rdot = Vec3::Zero();
  Vec3 rddot = Vec3::Zero();
  Vec2 etaddot_fd = Vec2::Zero();

  double h() const { return r.z(); }
  double hdot() const { return rdot.z(); }
  Vec2 eta() const { return r.head<2>(); }
  Vec2 etadot() const { return rdot.head<2>(); }
};

/// Time-parameterized reference. Planar acceleration for the fixed-wing
/// controller is estimated by central differences of the reference velocity
/// with step `fd_step` (normally the integration step).
class DesiredTrajectory {
 public:
  using Fn = std::function<Kinematics(double)>;

  DesiredTrajectory() = default;
  DesiredTrajectory(Fn fn, double fd_step) : fn_(std::move(fn)), fd_step_(fd_step) {}

  DesiredSample sample(double t) const;
  Kinematics kinematics(double t) const { return fn_(t); }
  double fd_step() const { return fd_step_; }
  explicit operator bool() const { return static_cast<bool>(fn_); }

 private:
  Fn fn_;
  double fd_step_ = 0.01;
};

// ---------------------------------------------------------------------------
// Quadrotor
// ---------------------------------------------------------------------------

struct QuadrotorParams {
  double m = 1.0;
  double rho = 1.225;
  double S = 0.05;
  double C_D = 1.0;
  Mat3 K_q = 2.0 * Mat3::Identity();
  Mat3 Lambda_q = 2.0 * Mat3::Identity();
  Vec3 sigma = Vec3::Constant(1.0);  ///< gust intensity per inertial axis (m/s)
  Vec3 L = Vec3::Constant(50.0);     ///< gust length per inertial axis (m)

  void validate() const;
};

/// Flattened layout: [r(3), V0(3), eta(3)].
struct QuadrotorState {
  static constexpr int kDim = 9;
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 eta = Vec3::Zero();

  VecX flatten() const;
  static QuadrotorState from_vector(const VecX& x);
};

/// Dynamic-extension tracking law; returns the commanded acceleration.
Vec3 quad_controller(const QuadrotorState& state, const DesiredSample& des,
                     const QuadrotorParams& params);

/// Closed-loop quadrotor right-hand side with per-axis first-order Dryden filters.
/// Throws ModelDomainError when the inertial speed is zero.
VecX quad_deriv(const QuadrotorState& state, const DesiredSample& des, const Vec3& noise,
                const QuadrotorParams& params);

// ---------------------------------------------------------------------------
// Fixed-wing
// ---------------------------------------------------------------------------

struct FixedWingParams {
  double m = 5.0;
  double rho = 1.225;
  double S = 0.5;
  double C_D0 = 0.02;
  double K_d = 0.05;
  double g = 9.81;
  double kappa_mu = -3.0;
  double kappa_CL = 2.0;
  double kappa_T1 = 2.0;
  double kappa_T2 = 20.0;
  double kappa = 0.5;
  Mat2 Lambda_f = Mat2::Identity();
  double sigma_u = 1.0, sigma_w = 1.0, sigma_v = 1.0;
  double L_u = 50.0, L_w = 50.0, L_v = 50.0;

  void validate() const;
};

/// Flattened layout:
/// [x, y, h, V, psi, gamma, T, V_des, psi_des, eta_u, eta_w(2), eta_v(2)].
struct FixedWingState {
  static constexpr int kDim = 14;
  enum Index : int {
    kX = 0, kY, kH, kV, kPsi, kGamma, kT, kVDes, kPsiDes, kEtaU, kEtaW0, kEtaW1, kEtaV0, kEtaV1
  };

  double x = 0, y = 0, h = 0;
  double V = 1, psi = 0, gamma = 0;
  double T = 0, V_des = 1, psi_des = 0;
  double eta_u = 0;
  Vec2 eta_w = Vec2::Zero();
  Vec2 eta_v = Vec2::Zero();

  VecX flatten() const;
  static FixedWingState from_vector(const VecX& x);
};

/// Singularity guard for the fixed-wing controllers.
inline constexpr double kSingularityEps = 1e-6;
/// The longitudinal outer loop saturates its asin argument at +-(1 - kAsinClamp).
inline constexpr double kAsinClamp = 1e-9;

struct InnerLoopCommand {
  double mu = 0.0;
  double C_L = 0.0;
  double T_des = 0.0;
};

/// Feed-forward lift coefficient and thrust for steady flight at (V, gamma).
double trim_lift_coefficient(double V, double gamma, const FixedWingParams& p);
double trim_thrust(double V, double gamma, const FixedWingParams& p);

InnerLoopCommand fw_inner_loop(const FixedWingState& state, double gamma_des,
                               const FixedWingParams& params);

double fw_outer_longitudinal(double h, double V, const DesiredSample& des, double kappa);

/// Returns (dV_des/dt, dpsi_des/dt) from the sliding-surface lateral law.
Vec2 fw_outer_lateral(const FixedWingState& state, const DesiredSample& des,
                      const FixedWingParams& params);

/// Body-axis (u, w, v) components to inertial (x, y, h) components for the
/// heading / path-angle / roll sequence (psi, gamma, mu).
Vec3 wind_rotation(const Vec3& w_body, double psi, double gamma, double mu);

struct DrydenFilters {
  double A_u = 0, B_u = 1, C_u = 0;
  Mat2 A_w = Mat2::Zero();
  Vec2 B_w = Vec2(1, 0);
  Eigen::RowVector2d C_w = Eigen::RowVector2d::Zero();
  Mat2 A_v = Mat2::Zero();
  Vec2 B_v = Vec2(1, 0);
  Eigen::RowVector2d C_v = Eigen::RowVector2d::Zero();
};

DrydenFilters dryden_fw_filters(double V, const FixedWingParams& params);

VecX fw_deriv(const FixedWingState& state, const DesiredSample& des, const Vec3& noise,
              const FixedWingParams& params);

// ---------------------------------------------------------------------------
// Uniform model interface
// ---------------------------------------------------------------------------

enum class VehicleKind { kQuadrotor, kFixedWing };

std::string to_string(VehicleKind kind);
VehicleKind vehicle_kind_from_string(const std::string& s);

/// dX/dt = f(X, X_des(t), n, theta) for one vehicle with fixed parameters.
class VehicleModel {
 public:
  virtual ~VehicleModel() = default;
  virtual VehicleKind kind() const = 0;
  virtual int state_dim() const = 0;
  virtual int noise_dim() const = 0;
  /// Rows of the state holding the 3D position used for confidence ellipsoids.
  virtual std::array<int, 3> position_rows() const = 0;
  virtual VecX derivative(const VecX& x, const DesiredSample& des, const VecX& noise) const = 0;
  /// State that sits on the reference at time t with zero gust-filter states.
  virtual VecX matched_initial_state(const DesiredTrajectory& des, double t) const = 0;
};

class QuadrotorModel final : public VehicleModel {
 public:
  explicit QuadrotorModel(QuadrotorParams params) : params_(std::move(params)) {
    params_.validate();
  }
  VehicleKind kind() const override { return VehicleKind::kQuadrotor; }
  int state_dim() const override { return QuadrotorState::kDim; }
  int noise_dim() const override { return 3; }
  std::array<int, 3> position_rows() const override { return {0, 1, 2}; }
  VecX derivative(const VecX& x, const DesiredSample& des, const VecX& noise) const override;
  VecX matched_initial_state(const DesiredTrajectory& des, double t) const override;
  const QuadrotorParams& params() const { return params_; }

 private:
  QuadrotorParams params_;
};

class FixedWingModel final : public VehicleModel {
 public:
  explicit FixedWingModel(FixedWingParams params) : params_(std::move(params)) {
    params_.validate();
  }
  VehicleKind kind() const override { return VehicleKind::kFixedWing; }
  int state_dim() const override { return FixedWingState::kDim; }
  int noise_dim() const override { return 3; }
  std::array<int, 3> position_rows() const override {
    return {FixedWingState::kX, FixedWingState::kY, FixedWingState::kH};
  }
  VecX derivative(const VecX& x, const DesiredSample& des, const VecX& noise) const override;
  VecX matched_initial_state(const DesiredTrajectory& des, double t) const override;
  const FixedWingParams& params() const { return params_; }

 private:
  FixedWingParams params_;
};

}  // namespace tubeplan
