#include <cmath>

#include "tubeplan/sim.hpp"

namespace tubeplan {

TimeGrid TimeGrid::make(double t0, double tf, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("time grid: dt must be positive");
  if (!(tf > t0)) throw InvalidInput("time grid: tf must exceed t0");
  TimeGrid g;
  g.t0 = t0;
  g.dt = dt;
  g.count = static_cast<std::size_t>(std::llround((tf - t0) / dt)) + 1;
  g.tf = g.time(g.count - 1);
  return g;
}

namespace {

VecX eval(const VehicleModel& model, const VecX& x, const DesiredTrajectory& des, double t,
          const VecX& noise) {
  try {
    return model.derivative(x, des.sample(t), noise);
  } catch (const SimulationError&) {
    throw;
  } catch (const ModelDomainError& e) {
    throw SimulationError(e.what(), t);
  }
}

void check_finite(const VecX& x, double t) {
  if (!x.allFinite()) throw SimulationError("state became non-finite", t);
}

}  // namespace

Trajectory integrate_nominal(const VehicleModel& model, const VecX& x0,
                             const DesiredTrajectory& des, const TimeGrid& grid) {
  if (x0.size() != model.state_dim()) throw InvalidInput("initial state has wrong dimension");
  Trajectory traj;
  traj.grid = grid;
  traj.kind = model.kind();
  traj.states.reserve(grid.count);
  traj.states.push_back(x0);

  const VecX zero = VecX::Zero(model.noise_dim());
  const double h = grid.dt;
  VecX x = x0;
  for (std::size_t k = 0; k + 1 < grid.count; ++k) {
    const double t = grid.time(k);
    const VecX k1 = eval(model, x, des, t, zero);
    const VecX k2 = eval(model, x + 0.5 * h * k1, des, t + 0.5 * h, zero);
    const VecX k3 = eval(model, x + 0.5 * h * k2, des, t + 0.5 * h, zero);
    const VecX k4 = eval(model, x + h * k3, des, t + h, zero);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_finite(x, t + h);
    traj.states.push_back(x);
  }
  return traj;
}

Trajectory integrate_euler(const VehicleModel& model, const VecX& x0,
                           const DesiredTrajectory& des, const TimeGrid& grid) {
  if (x0.size() != model.state_dim()) throw InvalidInput("initial state has wrong dimension");
  Trajectory traj;
  traj.grid = grid;
  traj.kind = model.kind();
  traj.states.reserve(grid.count);
  traj.states.push_back(x0);
  const VecX zero = VecX::Zero(model.noise_dim());
  VecX x = x0;
  for (std::size_t k = 0; k + 1 < grid.count; ++k) {
    const double t = grid.time(k);
    x += grid.dt * eval(model, x, des, t, zero);
    check_finite(x, t + grid.dt);
    traj.states.push_back(x);
  }
  return traj;
}

LinearizationHistory linearize(const VehicleModel& model, const Trajectory& nominal,
                               const DesiredTrajectory& des) {
  const int n = model.state_dim();
  const int m = model.noise_dim();
  LinearizationHistory lin;
  lin.grid = nominal.grid;
  lin.A.reserve(nominal.states.size());
  lin.B_n.reserve(nominal.states.size());

  const VecX zero = VecX::Zero(m);
  for (std::size_t k = 0; k < nominal.states.size(); ++k) {
    const double t = nominal.grid.time(k);
    const VecX& x = nominal.states[k];
    if (x.size() != n) throw InvalidInput("nominal state has wrong dimension");
    const DesiredSample s = des.sample(t);
    auto f = [&](const VecX& xx, const VecX& nn) {
      try {
        return model.derivative(xx, s, nn);
      } catch (const ModelDomainError& e) {
        throw SimulationError(e.what(), t);
      }
    };

    MatX A(n, n);
    VecX xp = x, xm = x;
    for (int i = 0; i < n; ++i) {
      const double h = fd_step(x(i));
      xp(i) = x(i) + h;
      xm(i) = x(i) - h;
      A.col(i) = (f(xp, zero) - f(xm, zero)) / (2.0 * h);
      xp(i) = x(i);
      xm(i) = x(i);
    }

    MatX B(n, m);
    VecX np = zero, nm = zero;
    for (int j = 0; j < m; ++j) {
      const double h = fd_step(0.0);
      np(j) = h;
      nm(j) = -h;
      B.col(j) = (f(x, np) - f(x, nm)) / (2.0 * h);
      np(j) = 0.0;
      nm(j) = 0.0;
    }
    lin.A.push_back(std::move(A));
    lin.B_n.push_back(std::move(B));
  }
  return lin;
}

}  // namespace tubeplan
