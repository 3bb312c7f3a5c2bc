#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "batfit/optimize.hpp"
#include "batfit/rng.hpp"

namespace batfit {

FitReport fit_simulated_annealing(const FitProblem& problem, const SaConfig& cfg,
                                  std::uint64_t seed, int /*workers*/) {
  problem.validate();
  if (cfg.iterations < 0 || cfg.cooling < 0.0 || cfg.cooling > 1.0 ||
      cfg.t0 < 0.0 || cfg.proposal_scale < 0.0)
    throw std::invalid_argument("fit_simulated_annealing: invalid config");
  const auto t_start = std::chrono::steady_clock::now();

  const std::size_t n = problem.dimension();
  const SearchScale scale(problem.space);
  StreamRng rng(seed, 0);

  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j)
    x[j] = rng.uniform(scale.lower[j], scale.upper[j]);

  FitReport report;
  report.method = "sa";
  report.seed = seed;

  double fx = objective_mse(scale.to_params(x), problem);
  report.evaluations = 1;
  std::vector<double> best = x;
  double fbest = fx;
  report.trace.push_back(fbest);

  double temp = cfg.t0;
  std::vector<double> y(n);
  for (int it = 0; it < cfg.iterations; ++it) {
    for (std::size_t j = 0; j < n; ++j) {
      const double width = scale.upper[j] - scale.lower[j];
      y[j] = std::clamp(x[j] + cfg.proposal_scale * width * rng.normal(),
                        scale.lower[j], scale.upper[j]);
    }
    const double fy = objective_mse(scale.to_params(y), problem);
    ++report.evaluations;
    bool accept = fy <= fx;
    if (!accept && temp > 0.0)
      accept = rng.uniform() < std::exp(-(fy - fx) / temp);
    if (accept) {
      x = y;
      fx = fy;
      if (fx < fbest) {
        fbest = fx;
        best = x;
      }
    }
    report.trace.push_back(fbest);
    temp *= cfg.cooling;
  }

  report.iterations = static_cast<std::size_t>(cfg.iterations);
  report.best_theta = canonicalize(problem.space.clamp(scale.to_params(best)));
  report.mse = fbest;
  report.low_identifiability =
      report.trace.front() == report.trace.back() && cfg.iterations > 0;
  report.execution_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace batfit
