#include "tubeplan/uncertainty.hpp"

namespace tubeplan {

namespace {

MatX lyapunov_rhs(const MatX& A, const MatX& BBt, const MatX& P) {
  MatX AP = A * P;
  return AP + AP.transpose() + BBt;
}

}  // namespace

CovarianceHistory propagate_covariance(const LinearizationHistory& lin, const MatX& P0) {
  const std::size_t count = lin.A.size();
  if (count == 0 || lin.B_n.size() != count) throw InvalidInput("linearization history is empty or ragged");
  const Eigen::Index n = lin.A.front().rows();
  if (P0.rows() != n || P0.cols() != n) throw InvalidInput("P0 dimension does not match the state");
  for (std::size_t k = 0; k < count; ++k) {
    if (lin.A[k].rows() != n || lin.A[k].cols() != n || lin.B_n[k].rows() != n)
      throw InvalidInput("linearization matrices have inconsistent dimensions");
  }

  CovarianceHistory out;
  out.grid = lin.grid;
  out.P.reserve(count);
  MatX P = 0.5 * (P0 + P0.transpose());
  out.P.push_back(P);

  const double h = lin.grid.dt;
  MatX Q0 = lin.B_n[0] * lin.B_n[0].transpose();
  for (std::size_t k = 0; k + 1 < count; ++k) {
    const MatX& A0 = lin.A[k];
    const MatX& A1 = lin.A[k + 1];
    const MatX Amid = 0.5 * (A0 + A1);
    const MatX Bmid = 0.5 * (lin.B_n[k] + lin.B_n[k + 1]);
    const MatX Qmid = Bmid * Bmid.transpose();
    MatX Q1 = lin.B_n[k + 1] * lin.B_n[k + 1].transpose();

    const MatX k1 = lyapunov_rhs(A0, Q0, P);
    const MatX k2 = lyapunov_rhs(Amid, Qmid, P + 0.5 * h * k1);
    const MatX k3 = lyapunov_rhs(Amid, Qmid, P + 0.5 * h * k2);
    const MatX k4 = lyapunov_rhs(A1, Q1, P + h * k3);
    P += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    P = 0.5 * (P + P.transpose()).eval();
    out.P.push_back(P);
    Q0 = std::move(Q1);
  }
  return out;
}

Tube build_tube(const Trajectory& nominal, const CovarianceHistory& cov, double beta,
                const std::array<int, 3>& rows) {
  if (!(nominal.grid == cov.grid) || nominal.states.size() != cov.P.size())
    throw InvalidInput("nominal trajectory and covariance history are on different grids");
  Tube tube;
  tube.beta = beta;
  const double c2 = chi2_quantile(beta, 3);
  tube.ellipsoids.reserve(nominal.states.size());
  for (std::size_t k = 0; k < nominal.states.size(); ++k) {
    const VecX& x = nominal.states[k];
    const MatX& P = cov.P[k];
    ConfidenceEllipsoid e;
    e.t = nominal.grid.time(k);
    e.c2 = c2;
    for (int i = 0; i < 3; ++i) {
      if (rows[i] < 0 || rows[i] >= x.size() || rows[i] >= P.rows())
        throw InvalidInput("position row index out of range");
      e.center(i) = x(rows[i]);
      for (int j = 0; j < 3; ++j) e.sigma(i, j) = P(rows[i], rows[j]);
    }
    tube.ellipsoids.push_back(e);
  }
  return tube;
}

}  // namespace tubeplan
