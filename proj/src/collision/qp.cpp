#include <algorithm>
#include <cmath>

#include "tubeplan/collision.hpp"

namespace tubeplan {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kAbsRegularization = 1e-18;

/// Cholesky factor of sigma, regularized when sigma is near-singular.
Mat3 metric_factor(const Mat3& sigma) {
  const Mat3 sym = 0.5 * (sigma + sigma.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> es;
  es.computeDirect(sym, Eigen::EigenvaluesOnly);
  const double trace = sym.trace();
  Mat3 reg = sym;
  if (es.eigenvalues().minCoeff() <= 1e-12 * trace || trace <= 0.0) {
    reg += std::max(1e-12 * trace, kAbsRegularization) * Mat3::Identity();
  }
  Eigen::LLT<Mat3> llt(reg);
  if (llt.info() != Eigen::Success) {
    reg = sym + std::max(1e-12 * std::abs(trace), kAbsRegularization) * Mat3::Identity() +
          std::max(0.0, -es.eigenvalues().minCoeff()) * Mat3::Identity();
    llt.compute(reg);
  }
  return llt.matrixL();
}

struct WorkingSet {
  std::vector<int> rows;

  MatX matrix(const MatX& G) const {
    MatX N(rows.size(), 3);
    for (std::size_t r = 0; r < rows.size(); ++r) N.row(r) = G.row(rows[r]);
    return N;
  }
  bool contains(int i) const { return std::find(rows.begin(), rows.end(), i) != rows.end(); }
};

bool independent_with(const MatX& G, const WorkingSet& ws, int candidate) {
  WorkingSet trial = ws;
  trial.rows.push_back(candidate);
  const MatX N = trial.matrix(G);
  Eigen::FullPivLU<MatX> lu(N);
  lu.setThreshold(1e-10);
  return lu.rank() == static_cast<Eigen::Index>(trial.rows.size());
}

}  // namespace

QpResult solve_qp(const Mat3& sigma, const Vec3& center, const FaceMatrix& A, const VecX& b,
                  QpWarmStart* warm) {
  if (A.rows() != b.size() || A.rows() == 0) throw InvalidInput("solve_qp: A and b sizes differ");
  const Mat3 L = metric_factor(sigma);

  // Whitened problem: min |y|^2  s.t.  G y <= h,  z = center + L y.
  MatX G = A * L;
  VecX h = b - A * center;
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    const double norm = G.row(i).norm();
    G.row(i) /= norm;
    h(i) /= norm;
  }

  QpResult res;
  if ((h.array() >= 0.0).all()) {
    res.z_star = center;
    res.cstar2 = 0.0;
    if (warm) *warm = {true, center, {}};
    return res;
  }

  const double tol = 1e-12 * (1.0 + h.cwiseAbs().maxCoeff());
  auto whiten = [&](const Vec3& z) -> Vec3 { return L.triangularView<Eigen::Lower>().solve(z - center); };

  Vec3 y;
  WorkingSet ws;
  bool started = false;
  if (warm && warm->valid) {
    y = whiten(warm->z);
    if (((G * y - h).array() <= tol).all()) {
      started = true;
      for (int i : warm->active) {
        if (i >= 0 && i < G.rows() && std::abs(G.row(i).dot(y) - h(i)) <= tol &&
            independent_with(G, ws, i)) {
          ws.rows.push_back(i);
        }
      }
    }
  }
  if (!started) {
    const auto inner = polytope_vertices(A, b);
    if (inner.empty()) throw InfeasibleRegion("solve_qp: constraint region is empty");
    Vec3 z0 = Vec3::Zero();
    for (const Vec3& v : inner) z0 += v;
    z0 /= static_cast<double>(inner.size());
    y = whiten(z0);
  }

  VecX lambda;
  for (int it = 0; it < kMaxIterations; ++it) {
    res.iterations = it + 1;
    Vec3 p;
    VecX proj_coeff;
    if (ws.rows.empty()) {
      p = -y;
    } else {
      const MatX N = ws.matrix(G);
      const MatX NNt = N * N.transpose();
      proj_coeff = NNt.ldlt().solve(N * y);
      p = -(y - N.transpose() * proj_coeff);
    }

    if (p.norm() <= 1e-12 * (1.0 + y.norm())) {
      if (ws.rows.empty()) {
        lambda.resize(0);
        break;
      }
      lambda = -proj_coeff;
      Eigen::Index worst = 0;
      if (lambda.minCoeff(&worst) >= -1e-12 * (1.0 + y.norm())) break;
      ws.rows.erase(ws.rows.begin() + worst);
      continue;
    }

    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < static_cast<int>(G.rows()); ++i) {
      if (ws.contains(i)) continue;
      const double gp = G.row(i).dot(p);
      if (gp <= 1e-14) continue;
      const double step = std::max(0.0, (h(i) - G.row(i).dot(y)) / gp);
      if (step < alpha) {
        alpha = step;
        blocking = i;
      }
    }
    y += alpha * p;
    if (blocking >= 0) {
      if (!independent_with(G, ws, blocking)) {
        throw QpIterationLimit("solve_qp: degenerate working set");
      }
      ws.rows.push_back(blocking);
    }
    if (it + 1 == kMaxIterations) throw QpIterationLimit("solve_qp: iteration limit reached");
  }

  // KKT residual in the whitened coordinates.
  Vec3 stationarity = y;
  for (std::size_t r = 0; r < ws.rows.size() && r < static_cast<std::size_t>(lambda.size()); ++r)
    stationarity += lambda(r) * G.row(ws.rows[r]).transpose();
  const double primal = std::max(0.0, (G * y - h).maxCoeff());
  const double dual = lambda.size() ? std::max(0.0, -lambda.minCoeff()) : 0.0;
  res.kkt_residual = std::max({stationarity.norm(), primal, dual});

  res.z_star = center + L * y;
  res.cstar2 = y.squaredNorm();
  res.active = ws.rows;
  if (warm) *warm = {true, res.z_star, ws.rows};
  return res;
}

}  // namespace tubeplan
