#include "batfit/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace batfit {

void SearchSpace::validate() const {
  if (lower.size() != upper.size() || lower.empty())
    throw std::invalid_argument("SearchSpace: bound vectors must match and be non-empty");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) ||
        !(lower[i] < upper[i]))
      throw std::invalid_argument("SearchSpace: need lower < upper elementwise");
    if (i < 5 && lower[i] <= 0.0)
      throw std::invalid_argument("SearchSpace: circuit-parameter bounds must be positive");
  }
}

std::vector<double> SearchSpace::clamp(std::vector<double> theta) const {
  for (std::size_t i = 0; i < theta.size(); ++i)
    theta[i] = std::clamp(theta[i], lower[i], upper[i]);
  return theta;
}

std::vector<double> SearchSpace::center() const {
  std::vector<double> c(lower.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
  return c;
}

SearchSpace SearchSpace::default_circuit() {
  SearchSpace s;
  s.lower = {1e-4, 1e-4, 10.0, 1e-4, 1e2};
  s.upper = {1.0, 1.0, 1e4, 1.0, 1e6};
  return s;
}

SearchSpace SearchSpace::default_joint(int ocv_degree) {
  SearchSpace s = default_circuit();
  // constant term spans the Li-ion plateau; higher orders are shape terms
  s.lower.push_back(2.0);
  s.upper.push_back(4.5);
  for (int k = 1; k <= ocv_degree; ++k) {
    s.lower.push_back(-3.0);
    s.upper.push_back(3.0);
  }
  return s;
}

std::size_t FitProblem::dimension() const {
  return ocv ? 5u : 5u + static_cast<std::size_t>(ocv_degree) + 1u;
}

void FitProblem::validate() const {
  segment.validate();
  cell.validate();
  space.validate();
  if (ocv) ocv->validate();
  if (space.dimension() != dimension())
    throw std::invalid_argument("FitProblem: search-space dimension does not match OCV mode");
}

FitProblem FitProblem::from_segment(DischargeSegment segment,
                                    std::optional<OcvCurve> ocv,
                                    SearchSpace space, int ocv_degree) {
  FitProblem p;
  p.cell = CellSpec{segment.capacity_ah, segment.soc_start};
  p.segment = std::move(segment);
  p.ocv = std::move(ocv);
  p.ocv_degree = ocv_degree;
  if (space.dimension() == 0)
    space = p.ocv ? SearchSpace::default_circuit()
                  : SearchSpace::default_joint(ocv_degree);
  p.space = std::move(space);
  p.validate();
  return p;
}

SearchScale::SearchScale(const SearchSpace& space) {
  const std::size_t n = space.dimension();
  lower.resize(n);
  upper.resize(n);
  is_log.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    is_log[j] = space.lower[j] > 0.0;
    lower[j] = is_log[j] ? std::log(space.lower[j]) : space.lower[j];
    upper[j] = is_log[j] ? std::log(space.upper[j]) : space.upper[j];
  }
}

std::vector<double> SearchScale::to_params(const std::vector<double>& internal) const {
  std::vector<double> out(internal.size());
  for (std::size_t j = 0; j < internal.size(); ++j)
    out[j] = is_log[j] ? std::exp(internal[j]) : internal[j];
  return out;
}

EcmParams params_from_theta(std::span<const double> theta) {
  if (theta.size() < 5)
    throw std::invalid_argument("theta: need at least 5 coordinates");
  return EcmParams{theta[0], theta[1], theta[2], theta[3], theta[4]};
}

OcvCurve curve_from_theta(std::span<const double> theta,
                          const FitProblem& problem) {
  if (problem.ocv) return *problem.ocv;
  OcvCurve curve;
  curve.coefficients.assign(theta.begin() + 5, theta.end());
  return curve;
}

double objective_mse(std::span<const double> theta, const FitProblem& problem) {
  if (theta.size() != problem.dimension())
    throw std::invalid_argument("objective_mse: theta dimension mismatch");
  const EcmParams params = params_from_theta(theta);
  const OcvCurve curve = curve_from_theta(theta, problem);
  const auto sim = simulate_terminal_voltage(params, curve, problem.cell,
                                             problem.segment.time,
                                             problem.segment.current);
  double acc = 0.0;
  for (std::size_t k = 0; k < sim.voltage.size(); ++k) {
    const double r = sim.voltage[k] - problem.segment.voltage[k];
    acc += r * r;
  }
  return acc / static_cast<double>(sim.voltage.size());
}

std::vector<double> canonicalize(std::vector<double> theta) {
  if (theta.size() < 5)
    throw std::invalid_argument("canonicalize: need at least 5 coordinates");
  if (theta[1] * theta[2] > theta[3] * theta[4]) {
    std::swap(theta[1], theta[3]);
    std::swap(theta[2], theta[4]);
  }
  return theta;
}

std::vector<double> evaluate_batch(const std::vector<std::vector<double>>& batch,
                                   const FitProblem& problem, int workers) {
  std::vector<double> values(batch.size());
  if (workers <= 1 || batch.size() < 2) {
    for (std::size_t i = 0; i < batch.size(); ++i)
      values[i] = objective_mse(batch[i], problem);
    return values;
  }
  const std::size_t n = batch.size();
  const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += nw)
        values[i] = objective_mse(batch[i], problem);
    });
  }
  for (auto& t : pool) t.join();
  return values;
}

std::pair<std::vector<double>, double> grid_oracle(const FitProblem& problem,
                                                   int points_per_dim) {
  problem.validate();
  if (points_per_dim < 2)
    throw std::invalid_argument("grid_oracle: need at least 2 points per dimension");
  if (problem.dimension() != 5)
    throw std::invalid_argument("grid_oracle: fixed-OCV (5-dimensional) problems only");

  std::vector<std::vector<double>> axes(5);
  for (std::size_t d = 0; d < 5; ++d) {
    for (int k = 0; k < points_per_dim; ++k) {
      const double frac = static_cast<double>(k) / (points_per_dim - 1);
      axes[d].push_back(problem.space.lower[d] *
                        std::pow(problem.space.upper[d] / problem.space.lower[d], frac));
    }
  }

  std::vector<double> best;
  double best_mse = std::numeric_limits<double>::infinity();
  std::array<int, 5> idx{};
  std::vector<double> theta(5);
  while (true) {
    for (std::size_t d = 0; d < 5; ++d) theta[d] = axes[d][idx[d]];
    const double mse = objective_mse(theta, problem);
    if (mse < best_mse) {  // strict: first (lexicographic) point wins ties
      best_mse = mse;
      best = theta;
    }
    std::size_t d = 5;
    while (d-- > 0) {
      if (++idx[d] < points_per_dim) break;
      idx[d] = 0;
      if (d == 0) return {best, best_mse};
    }
  }
}

PsoConfig pso_config_from(const KeyValueConfig& cfg) {
  PsoConfig c;
  c.swarm_size = static_cast<int>(config_long(cfg, "pso.swarm_size", c.swarm_size));
  c.inertia = config_double(cfg, "pso.inertia", c.inertia);
  c.cognitive = config_double(cfg, "pso.cognitive", c.cognitive);
  c.social = config_double(cfg, "pso.social", c.social);
  c.max_iterations = static_cast<int>(config_long(cfg, "pso.max_iterations", c.max_iterations));
  c.velocity_clamp = config_double(cfg, "pso.velocity_clamp", c.velocity_clamp);
  return c;
}

SaConfig sa_config_from(const KeyValueConfig& cfg) {
  SaConfig c;
  c.iterations = static_cast<int>(config_long(cfg, "sa.iterations", c.iterations));
  c.t0 = config_double(cfg, "sa.t0", c.t0);
  c.cooling = config_double(cfg, "sa.cooling", c.cooling);
  c.proposal_scale = config_double(cfg, "sa.proposal_scale", c.proposal_scale);
  return c;
}

GaConfig ga_config_from(const KeyValueConfig& cfg) {
  GaConfig c;
  c.population = static_cast<int>(config_long(cfg, "ga.population", c.population));
  c.generations = static_cast<int>(config_long(cfg, "ga.generations", c.generations));
  c.mutation_rate = config_double(cfg, "ga.mutation_rate", c.mutation_rate);
  c.mutation_scale = config_double(cfg, "ga.mutation_scale", c.mutation_scale);
  return c;
}

LmConfig lm_config_from(const KeyValueConfig& cfg) {
  LmConfig c;
  c.max_iterations = static_cast<int>(config_long(cfg, "lm.max_iterations", c.max_iterations));
  c.grad_tol = config_double(cfg, "lm.grad_tol", c.grad_tol);
  c.step_tol = config_double(cfg, "lm.step_tol", c.step_tol);
  return c;
}

SearchSpace search_space_from(const KeyValueConfig& cfg) {
  SearchSpace s = SearchSpace::default_circuit();
  const char* names[] = {"r0", "r1", "c1", "r2", "c2"};
  for (std::size_t i = 0; i < 5; ++i) {
    s.lower[i] = config_double(cfg, std::string("bounds.") + names[i] + ".lo", s.lower[i]);
    s.upper[i] = config_double(cfg, std::string("bounds.") + names[i] + ".hi", s.upper[i]);
  }
  s.validate();
  return s;
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods = {"ls", "pso", "sa", "ga"};
  return methods;
}

FitReport run_method(const std::string& method, const FitProblem& problem,
                     const KeyValueConfig& cfg, std::uint64_t seed,
                     int workers) {
  if (method == "ls")
    return fit_least_squares(problem, lm_config_from(cfg), seed, workers);
  if (method == "pso")
    return fit_pso(problem, pso_config_from(cfg), seed, workers);
  if (method == "sa")
    return fit_simulated_annealing(problem, sa_config_from(cfg), seed, workers);
  if (method == "ga")
    return fit_genetic(problem, ga_config_from(cfg), seed, workers);
  throw std::invalid_argument("unknown method '" + method +
                              "' (valid: ls, pso, sa, ga)");
}

}  // namespace batfit
