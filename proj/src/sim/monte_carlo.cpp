#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <boost/math/special_functions/erf.hpp>

#include "tubeplan/sim.hpp"

namespace tubeplan {

double RandomStream::uniform() {
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * uniform());
}

namespace {

/// Euler-Maruyama stepping with a per-step callback on (k, x_k).
template <typename Visit>
void euler_maruyama(const VehicleModel& model, const VecX& x0, const DesiredTrajectory& des,
                    const TimeGrid& grid, std::uint64_t seed, Visit&& visit) {
  if (x0.size() != model.state_dim()) throw InvalidInput("initial state has wrong dimension");
  RandomStream rng(seed);
  const double noise_scale = 1.0 / std::sqrt(grid.dt);
  VecX x = x0;
  VecX noise(model.noise_dim());
  visit(std::size_t{0}, x);
  for (std::size_t k = 0; k + 1 < grid.count; ++k) {
    const double t = grid.time(k);
    for (int j = 0; j < noise.size(); ++j) noise(j) = rng.normal() * noise_scale;
    try {
      x += grid.dt * model.derivative(x, des.sample(t), noise);
    } catch (const ModelDomainError& e) {
      throw SimulationError(e.what(), t);
    }
    if (!x.allFinite()) throw SimulationError("sample path became non-finite", t + grid.dt);
    visit(k + 1, x);
  }
}

/// Running mean and centred second moment at every grid point.
struct Moments {
  std::size_t n = 0;
  std::vector<VecX> mean;
  std::vector<MatX> m2;  // lower triangle only until finalized

  Moments(std::size_t count, int dim)
      : mean(count, VecX::Zero(dim)), m2(count, MatX::Zero(dim, dim)) {}
};

void merge_into(Moments& a, const Moments& b) {
  if (b.n == 0) return;
  if (a.n == 0) {
    a = b;
    return;
  }
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double nab = na + nb;
  for (std::size_t k = 0; k < a.mean.size(); ++k) {
    const VecX delta = b.mean[k] - a.mean[k];
    a.mean[k] += delta * (nb / nab);
    a.m2[k] += b.m2[k];
    a.m2[k].selfadjointView<Eigen::Lower>().rankUpdate(delta, na * nb / nab);
  }
  a.n += b.n;
}

}  // namespace

Trajectory mc_run(const VehicleModel& model, const VecX& x0, const DesiredTrajectory& des,
                  const TimeGrid& grid, std::uint64_t seed) {
  Trajectory traj;
  traj.grid = grid;
  traj.kind = model.kind();
  traj.states.reserve(grid.count);
  euler_maruyama(model, x0, des, grid, seed,
                 [&](std::size_t, const VecX& x) { traj.states.push_back(x); });
  return traj;
}

EnsembleResult mc_ensemble(const VehicleModel& model, const VecX& x0,
                           const DesiredTrajectory& des, const TimeGrid& grid,
                           std::size_t runs, std::uint64_t base_seed, unsigned threads) {
  if (runs < 2) throw InvalidInput("mc_ensemble needs at least 2 runs");
  const int dim = model.state_dim();
  const std::size_t blocks = std::min<std::size_t>(16, runs);

  std::vector<Moments> partial;
  partial.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) partial.emplace_back(grid.count, dim);

  auto run_block = [&](std::size_t b) {
    Moments& acc = partial[b];
    const std::size_t first = b * runs / blocks;
    const std::size_t last = (b + 1) * runs / blocks;
    for (std::size_t i = first; i < last; ++i) {
      const double n_new = static_cast<double>(acc.n + 1);
      euler_maruyama(model, x0, des, grid, base_seed + i, [&](std::size_t k, const VecX& x) {
        const VecX delta = x - acc.mean[k];
        acc.mean[k] += delta / n_new;
        acc.m2[k].selfadjointView<Eigen::Lower>().rankUpdate(delta, (n_new - 1.0) / n_new);
      });
      ++acc.n;
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  if (threads <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < blocks; b = next++) {
          try {
            run_block(b);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  // Fixed-order pairwise merge.
  for (std::size_t stride = 1; stride < blocks; stride *= 2) {
    for (std::size_t b = 0; b + stride < blocks; b += 2 * stride) merge_into(partial[b], partial[b + stride]);
  }
  Moments& total = partial.front();

  EnsembleResult out;
  out.runs = runs;
  out.mean.grid = grid;
  out.mean.kind = model.kind();
  out.mean.states = std::move(total.mean);
  out.covariance.grid = grid;
  out.covariance.P.reserve(grid.count);
  const double denom = static_cast<double>(runs - 1);
  for (auto& m2 : total.m2) {
    MatX full = m2.selfadjointView<Eigen::Lower>();
    out.covariance.P.push_back(full / denom);
  }
  return out;
}

}  // namespace tubeplan
