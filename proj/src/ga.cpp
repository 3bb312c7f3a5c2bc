#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "batfit/optimize.hpp"
#include "batfit/rng.hpp"

namespace batfit {

namespace {

std::size_t pick_index(StreamRng& rng, std::size_t n) {
  const std::size_t i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
  return std::min(i, n - 1);
}

}  // namespace

FitReport fit_genetic(const FitProblem& problem, const GaConfig& cfg,
                      std::uint64_t seed, int workers) {
  problem.validate();
  if (cfg.population < 4)
    throw std::invalid_argument("fit_genetic: population must be >= 4");
  const auto t_start = std::chrono::steady_clock::now();

  const std::size_t n = problem.dimension();
  const std::size_t pop_size = static_cast<std::size_t>(cfg.population);

  std::vector<StreamRng> rngs;
  rngs.reserve(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) rngs.emplace_back(seed, i);

  const SearchScale scale(problem.space);

  // population lives in scaled coordinates
  std::vector<std::vector<double>> pop(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) {
    pop[i].resize(n);
    if (cfg.initial) {
      const auto clamped = problem.space.clamp(*cfg.initial);
      for (std::size_t j = 0; j < n; ++j)
        pop[i][j] = scale.is_log[j] ? std::log(clamped[j]) : clamped[j];
    } else {
      for (std::size_t j = 0; j < n; ++j)
        pop[i][j] = rngs[i].uniform(scale.lower[j], scale.upper[j]);
    }
  }

  auto externals = [&](const std::vector<std::vector<double>>& internal) {
    std::vector<std::vector<double>> out(internal.size());
    for (std::size_t p = 0; p < internal.size(); ++p)
      out[p] = scale.to_params(internal[p]);
    return out;
  };

  FitReport report;
  report.method = "ga";
  report.seed = seed;

  auto fitness = evaluate_batch(externals(pop), problem, workers);
  report.evaluations = pop_size;

  auto best_index = [&]() {
    std::size_t b = 0;
    for (std::size_t i = 1; i < pop_size; ++i)
      if (fitness[i] < fitness[b]) b = i;
    return b;
  };

  std::size_t elite = best_index();
  std::vector<double> best = pop[elite];
  double fbest = fitness[elite];
  report.trace.push_back(fbest);

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<std::vector<double>> next(pop_size);
    next[0] = pop[elite];  // elitism of 1

    for (std::size_t i = 1; i < pop_size; ++i) {
      StreamRng& rng = rngs[i];
      // two binary tournaments; ties keep the lower index
      auto tournament = [&]() -> const std::vector<double>& {
        const std::size_t a = pick_index(rng, pop_size);
        const std::size_t b = pick_index(rng, pop_size);
        return fitness[std::min(a, b)] <= fitness[std::max(a, b)]
                   ? pop[std::min(a, b)]
                   : pop[std::max(a, b)];
      };
      const auto& pa = tournament();
      const auto& pb = tournament();

      const double blend = rng.uniform();
      std::vector<double> child(n);
      for (std::size_t j = 0; j < n; ++j)
        child[j] = pb[j] + blend * (pa[j] - pb[j]);  // exact when pa == pb

      for (std::size_t j = 0; j < n; ++j) {
        if (rng.uniform() < cfg.mutation_rate) {
          const double width = scale.upper[j] - scale.lower[j];
          child[j] += cfg.mutation_scale * width * rng.normal();
        }
        child[j] = std::clamp(child[j], scale.lower[j], scale.upper[j]);
      }
      next[i] = std::move(child);
    }

    pop = std::move(next);
    fitness = evaluate_batch(externals(pop), problem, workers);
    report.evaluations += pop_size;
    elite = best_index();
    if (fitness[elite] < fbest) {
      fbest = fitness[elite];
      best = pop[elite];
    }
    report.trace.push_back(fbest);
  }

  report.iterations = static_cast<std::size_t>(cfg.generations);
  report.best_theta = canonicalize(problem.space.clamp(scale.to_params(best)));
  report.mse = fbest;
  report.low_identifiability =
      report.trace.front() == report.trace.back() && cfg.generations > 0;
  report.execution_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace batfit
