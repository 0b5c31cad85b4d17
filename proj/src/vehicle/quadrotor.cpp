#include <cmath>
#include <numbers>

#include "tubeplan/vehicle_models.hpp"

namespace tubeplan {

namespace {

bool positive_definite(const Mat3& m) {
  const Mat3 sym = 0.5 * (m + m.transpose());
  Eigen::LLT<Mat3> llt(sym);
  return llt.info() == Eigen::Success;
}

}  // namespace

void QuadrotorParams::validate() const {
  if (!(m > 0 && rho > 0 && S > 0)) throw InvalidInput("quadrotor: m, rho, S must be positive");
  if (!(C_D >= 0)) throw InvalidInput("quadrotor: C_D must be non-negative");
  if (!positive_definite(K_q) || !positive_definite(Lambda_q))
    throw InvalidInput("quadrotor: K_q and Lambda_q must be positive definite");
  if ((sigma.array() < 0).any()) throw InvalidInput("quadrotor: sigma must be non-negative");
  if ((L.array() <= 0).any()) throw InvalidInput("quadrotor: L must be positive");
}

VecX QuadrotorState::flatten() const {
  VecX x(kDim);
  x << r, v, eta;
  return x;
}

QuadrotorState QuadrotorState::from_vector(const VecX& x) {
  if (x.size() != kDim) throw InvalidInput("quadrotor state must have 9 entries");
  QuadrotorState s;
  s.r = x.segment<3>(0);
  s.v = x.segment<3>(3);
  s.eta = x.segment<3>(6);
  return s;
}

Vec3 quad_controller(const QuadrotorState& state, const DesiredSample& des,
                     const QuadrotorParams& params) {
  const Vec3 e = state.r - des.r;
  const Vec3 edot = state.v - des.rdot;
  const Vec3 s_c = edot + params.K_q * e;
  return des.rddot - params.K_q * edot - params.Lambda_q * s_c;
}

VecX quad_deriv(const QuadrotorState& state, const DesiredSample& des, const Vec3& noise,
                const QuadrotorParams& params) {
  const double speed = state.v.norm();
  if (!(speed > 0.0)) {
    throw ModelDomainError("quadrotor: Dryden filter undefined at zero inertial speed");
  }

  Vec3 A, C;
  for (int i = 0; i < 3; ++i) {
    const double L = params.L(i);
    A(i) = -speed / L;
    C(i) = std::sqrt(2.0) * speed * params.sigma(i) * std::sqrt(L / speed) /
           (L * std::sqrt(std::numbers::pi));
  }
  const Vec3 wind = C.cwiseProduct(state.eta);
  const Vec3 v_rel = state.v - wind;
  const Vec3 u = quad_controller(state, des, params);
  const double drag_k = 0.5 / params.m * params.rho * params.S * params.C_D;

  VecX dx(QuadrotorState::kDim);
  dx.segment<3>(0) = state.v;
  dx.segment<3>(3) = u - drag_k * v_rel * v_rel.norm();
  dx.segment<3>(6) = A.cwiseProduct(state.eta) + noise;  // B_i = 1
  return dx;
}

VecX QuadrotorModel::derivative(const VecX& x, const DesiredSample& des,
                                const VecX& noise) const {
  return quad_deriv(QuadrotorState::from_vector(x), des, noise.head<3>(), params_);
}

VecX QuadrotorModel::matched_initial_state(const DesiredTrajectory& des, double t) const {
  const Kinematics k = des.kinematics(t);
  QuadrotorState s;
  s.r = k.r;
  s.v = k.rdot;
  return s.flatten();
}

}  // namespace tubeplan
