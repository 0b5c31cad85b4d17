#include <algorithm>
#include <cmath>
#include <numbers>

#include "tubeplan/vehicle_models.hpp"

namespace tubeplan {

void FixedWingParams::validate() const {
  if (!(m > 0 && rho > 0 && S > 0 && g > 0))
    throw InvalidInput("fixed-wing: m, rho, S, g must be positive");
  if (!(C_D0 >= 0 && K_d >= 0)) throw InvalidInput("fixed-wing: drag polar must be non-negative");
  if (!(sigma_u >= 0 && sigma_w >= 0 && sigma_v >= 0))
    throw InvalidInput("fixed-wing: gust intensities must be non-negative");
  if (!(L_u > 0 && L_w > 0 && L_v > 0)) throw InvalidInput("fixed-wing: gust lengths must be positive");
  // -Lambda_f must be Hurwitz.
  Eigen::EigenSolver<Mat2> es(-Lambda_f);
  if ((es.eigenvalues().real().array() >= 0).any())
    throw InvalidInput("fixed-wing: -Lambda_f must be Hurwitz");
}

VecX FixedWingState::flatten() const {
  VecX out(kDim);
  out << x, y, h, V, psi, gamma, T, V_des, psi_des, eta_u, eta_w, eta_v;
  return out;
}

FixedWingState FixedWingState::from_vector(const VecX& v) {
  if (v.size() != kDim) throw InvalidInput("fixed-wing state must have 14 entries");
  FixedWingState s;
  s.x = v(kX);
  s.y = v(kY);
  s.h = v(kH);
  s.V = v(kV);
  s.psi = v(kPsi);
  s.gamma = v(kGamma);
  s.T = v(kT);
  s.V_des = v(kVDes);
  s.psi_des = v(kPsiDes);
  s.eta_u = v(kEtaU);
  s.eta_w = Vec2(v(kEtaW0), v(kEtaW1));
  s.eta_v = Vec2(v(kEtaV0), v(kEtaV1));
  return s;
}

double trim_lift_coefficient(double V, double gamma, const FixedWingParams& p) {
  return 2.0 * p.m * p.g * std::cos(gamma) / (p.S * V * V * p.rho);
}

double trim_thrust(double V, double gamma, const FixedWingParams& p) {
  const double q_s = p.S * V * V * p.rho;
  const double cg = std::cos(gamma);
  return p.m * p.g * std::sin(gamma) + 0.5 * p.C_D0 * q_s +
         2.0 * p.K_d * p.m * p.m * p.g * p.g * cg * cg / q_s;
}

InnerLoopCommand fw_inner_loop(const FixedWingState& state, double gamma_des,
                               const FixedWingParams& params) {
  if (!(state.V > 0.0)) throw ModelDomainError("fixed-wing: inner loop requires V > 0");
  InnerLoopCommand cmd;
  cmd.mu = params.kappa_mu * (state.psi_des - state.psi);
  cmd.C_L = trim_lift_coefficient(state.V, state.gamma, params) +
            params.kappa_CL * (gamma_des - state.gamma);
  cmd.T_des = trim_thrust(state.V, state.gamma, params) + params.kappa_T2 * (state.V_des - state.V);
  return cmd;
}

double fw_outer_longitudinal(double h, double V, const DesiredSample& des, double kappa) {
  if (!(V > 0.0)) throw ModelDomainError("fixed-wing: longitudinal loop requires V > 0");
  const double arg = (des.hdot() - kappa * (h - des.h())) / V;
  const double lim = 1.0 - kAsinClamp;
  return std::asin(std::clamp(arg, -lim, lim));
}

Vec2 fw_outer_lateral(const FixedWingState& state, const DesiredSample& des,
                      const FixedWingParams& params) {
  const double cg = std::cos(state.gamma);
  if (!(std::abs(cg) > kSingularityEps) || !(state.V_des > kSingularityEps)) {
    throw ModelDomainError("fixed-wing: lateral controller singular (cos(gamma) or V_des ~ 0)");
  }
  const Vec2 e = Vec2(state.x, state.y) - des.eta();
  const Vec2 edot = state.V * cg * Vec2(std::cos(state.psi), std::sin(state.psi)) - des.etadot();
  const Vec2 s = edot + params.kappa * e;

  const double cpd = std::cos(state.psi_des);
  const double spd = std::sin(state.psi_des);
  Mat2 A;
  A << cg * cpd, -state.V_des * cg * spd,
       cg * spd, state.V_des * cg * cpd;
  const Vec2 rhs = des.etaddot_fd - params.kappa * edot - params.Lambda_f * s;
  return A.partialPivLu().solve(rhs);
}

Vec3 wind_rotation(const Vec3& w_body, double psi, double gamma, double mu) {
  const double cps = std::cos(psi), sps = std::sin(psi);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  const double cm = std::cos(mu), sm = std::sin(mu);
  const double wu = w_body(0), ww = w_body(1), wv = w_body(2);

  const double wx = wu * cg * cps - ww * (cm * sps + cps * sg * sm) - wv * (sm * sps - cm * cps * sg);
  const double wy = wv * (cps * sm + cm * sg * sps) + ww * (cm * cps - sg * sm * sps) + wu * cg * sps;
  const double wh = wv * cg * cm - wu * sg - ww * cg * sm;
  return {wx, wy, wh};
}

DrydenFilters dryden_fw_filters(double V, const FixedWingParams& p) {
  if (!(V > 0.0)) throw ModelDomainError("fixed-wing: Dryden filters require V > 0");
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  DrydenFilters f;

  f.A_u = -V / p.L_u;
  f.B_u = 1.0;
  f.C_u = std::sqrt(2.0) * V * p.sigma_u * std::sqrt(p.L_u / V) / (p.L_u * sqrt_pi);

  auto second_order = [&](double sigma, double L, Mat2& A, Vec2& B, Eigen::RowVector2d& C) {
    A << -2.0 * V / L, -V * V / (L * L),
         1.0, 0.0;
    B << 1.0, 0.0;
    const double gain = V * sigma * std::sqrt(L / V) / (L * sqrt_pi);
    C << gain * std::sqrt(3.0), gain * V / L;
  };
  second_order(p.sigma_w, p.L_w, f.A_w, f.B_w, f.C_w);
  second_order(p.sigma_v, p.L_v, f.A_v, f.B_v, f.C_v);
  return f;
}

VecX fw_deriv(const FixedWingState& s, const DesiredSample& des, const Vec3& noise,
              const FixedWingParams& p) {
  if (!(s.V > kSingularityEps)) throw ModelDomainError("fixed-wing: airspeed V ~ 0");
  if (!(std::abs(std::cos(s.gamma)) > kSingularityEps))
    throw ModelDomainError("fixed-wing: flight-path angle at +-90 deg");

  const double gamma_des = fw_outer_longitudinal(s.h, s.V, des, p.kappa);
  const Vec2 lateral = fw_outer_lateral(s, des, p);
  const InnerLoopCommand cmd = fw_inner_loop(s, gamma_des, p);

  // Gust filters: w_i = C_i eta_i, wdot_i = C_i A_i eta_i + C_i B_i n_i.
  const DrydenFilters f = dryden_fw_filters(s.V, p);
  const double n_u = noise(0), n_w = noise(1), n_v = noise(2);
  const Vec3 w_body(f.C_u * s.eta_u, f.C_w * s.eta_w, f.C_v * s.eta_v);
  const Vec3 wdot_body(f.C_u * (f.A_u * s.eta_u + f.B_u * n_u),
                       f.C_w * (f.A_w * s.eta_w + f.B_w * n_w),
                       f.C_v * (f.A_v * s.eta_v + f.B_v * n_v));
  const Vec3 w = wind_rotation(w_body, s.psi, s.gamma, cmd.mu);
  const Vec3 wdot = wind_rotation(wdot_body, s.psi, s.gamma, cmd.mu);

  const double q_s = 0.5 * p.rho * p.S * s.V * s.V;
  const double C_D = p.C_D0 + p.K_d * cmd.C_L * cmd.C_L;
  const double lift = cmd.C_L * q_s;
  const double drag = C_D * q_s;

  const double cps = std::cos(s.psi), sps = std::sin(s.psi);
  const double cg = std::cos(s.gamma), sg = std::sin(s.gamma);
  const double cm = std::cos(cmd.mu), sm = std::sin(cmd.mu);
  const double m = p.m;

  VecX dx(FixedWingState::kDim);
  dx(FixedWingState::kX) = s.V * cg * cps + w(0);
  dx(FixedWingState::kY) = s.V * cg * sps + w(1);
  dx(FixedWingState::kH) = s.V * sg + w(2);
  dx(FixedWingState::kV) = (s.T - drag) / m - p.g * sg - wdot(0) * cg * cps -
                           wdot(1) * cg * sps + wdot(2) * sg;
  dx(FixedWingState::kPsi) =
      -1.0 / (s.V * m * cg) * (lift * sm - m * wdot(0) * sps + m * wdot(1) * cps);
  dx(FixedWingState::kGamma) =
      1.0 / (s.V * m) *
      (lift * cm - m * p.g * cg + m * wdot(0) * cps * sg + m * wdot(1) * sg * sps + m * wdot(2) * cg);
  dx(FixedWingState::kT) = p.kappa_T1 * (cmd.T_des - s.T);
  dx(FixedWingState::kVDes) = lateral(0);
  dx(FixedWingState::kPsiDes) = lateral(1);
  dx(FixedWingState::kEtaU) = f.A_u * s.eta_u + f.B_u * n_u;
  dx.segment<2>(FixedWingState::kEtaW0) = f.A_w * s.eta_w + f.B_w * n_w;
  dx.segment<2>(FixedWingState::kEtaV0) = f.A_v * s.eta_v + f.B_v * n_v;
  return dx;
}

VecX FixedWingModel::derivative(const VecX& x, const DesiredSample& des,
                                const VecX& noise) const {
  return fw_deriv(FixedWingState::from_vector(x), des, noise.head<3>(), params_);
}

VecX FixedWingModel::matched_initial_state(const DesiredTrajectory& des, double t) const {
  const Kinematics k = des.kinematics(t);
  FixedWingState s;
  s.x = k.r.x();
  s.y = k.r.y();
  s.h = k.r.z();
  s.V = k.rdot.norm();
  if (!(s.V > kSingularityEps)) throw ModelDomainError("fixed-wing: reference speed ~ 0 at start");
  s.psi = std::atan2(k.rdot.y(), k.rdot.x());
  s.gamma = std::asin(std::clamp(k.rdot.z() / s.V, -1.0, 1.0));
  s.T = trim_thrust(s.V, s.gamma, params_);
  s.V_des = s.V;
  s.psi_des = s.psi;
  return s.flatten();
}

}  // namespace tubeplan
