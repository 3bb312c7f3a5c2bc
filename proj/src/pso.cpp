#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "batfit/optimize.hpp"
#include "batfit/rng.hpp"

namespace batfit {

FitReport fit_pso(const FitProblem& problem, const PsoConfig& cfg,
                  std::uint64_t seed, int workers) {
  problem.validate();
  if (cfg.swarm_size < 1)
    throw std::invalid_argument("fit_pso: swarm_size must be >= 1");
  const auto t_start = std::chrono::steady_clock::now();

  const std::size_t n = problem.dimension();
  const std::size_t swarm = static_cast<std::size_t>(cfg.swarm_size);
  // search runs in log coordinates for positive-bounded parameters, so
  // initial sampling is log-uniform and steps act multiplicatively
  const SearchScale scale(problem.space);

  std::vector<StreamRng> rngs;
  rngs.reserve(swarm);
  for (std::size_t p = 0; p < swarm; ++p) rngs.emplace_back(seed, p);

  std::vector<double> vmax(n);
  for (std::size_t j = 0; j < n; ++j)
    vmax[j] = cfg.velocity_clamp * (scale.upper[j] - scale.lower[j]);

  std::vector<std::vector<double>> pos(swarm), vel(swarm), pbest(swarm);
  std::vector<double> pbest_val(swarm);
  for (std::size_t p = 0; p < swarm; ++p) {
    pos[p].resize(n);
    vel[p].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      pos[p][j] = rngs[p].uniform(scale.lower[j], scale.upper[j]);
      vel[p][j] = rngs[p].uniform(-vmax[j], vmax[j]);
    }
  }

  auto externals = [&](const std::vector<std::vector<double>>& internal) {
    std::vector<std::vector<double>> out(internal.size());
    for (std::size_t p = 0; p < internal.size(); ++p)
      out[p] = scale.to_params(internal[p]);
    return out;
  };

  FitReport report;
  report.method = "pso";
  report.seed = seed;

  auto values = evaluate_batch(externals(pos), problem, workers);
  report.evaluations = swarm;

  std::vector<double> gbest;
  double gbest_val = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < swarm; ++p) {
    pbest[p] = pos[p];
    pbest_val[p] = values[p];
    if (values[p] < gbest_val) {  // strict: ties keep the lowest index
      gbest_val = values[p];
      gbest = pos[p];
    }
  }
  report.trace.push_back(gbest_val);

  for (int it = 0; it < cfg.max_iterations; ++it) {
    for (std::size_t p = 0; p < swarm; ++p) {
      for (std::size_t j = 0; j < n; ++j) {
        const double u1 = rngs[p].uniform();
        const double u2 = rngs[p].uniform();
        double v = cfg.inertia * vel[p][j] +
                   cfg.cognitive * u1 * (pbest[p][j] - pos[p][j]) +
                   cfg.social * u2 * (gbest[j] - pos[p][j]);
        v = std::clamp(v, -vmax[j], vmax[j]);
        vel[p][j] = v;
        pos[p][j] = std::clamp(pos[p][j] + v, scale.lower[j], scale.upper[j]);
      }
    }
    values = evaluate_batch(externals(pos), problem, workers);
    report.evaluations += swarm;
    for (std::size_t p = 0; p < swarm; ++p) {
      if (values[p] < pbest_val[p]) {
        pbest_val[p] = values[p];
        pbest[p] = pos[p];
      }
      if (values[p] < gbest_val) {
        gbest_val = values[p];
        gbest = pos[p];
      }
    }
    report.trace.push_back(gbest_val);
  }

  report.iterations = static_cast<std::size_t>(cfg.max_iterations);
  report.best_theta = canonicalize(problem.space.clamp(scale.to_params(gbest)));
  report.mse = gbest_val;
  report.low_identifiability = report.trace.front() == report.trace.back() &&
                               cfg.max_iterations > 0;
  report.execution_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace batfit
