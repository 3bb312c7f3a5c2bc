#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "batfit/config.hpp"
#include "batfit/dataset.hpp"
#include "batfit/ecm.hpp"

namespace batfit {

// Per-parameter box bounds. The first five coordinates are always
// (r0, r1, c1, r2, c2); joint-OCV problems append polynomial coefficients.
struct SearchSpace {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dimension() const { return lower.size(); }
  void validate() const;
  std::vector<double> clamp(std::vector<double> theta) const;
  std::vector<double> center() const;

  static SearchSpace default_circuit();
  static SearchSpace default_joint(int ocv_degree);
};

// Objective context: one discharge segment, the OCV mode, and the box.
struct FitProblem {
  DischargeSegment segment;
  std::optional<OcvCurve> ocv;  // set -> fixed-OCV mode (5 parameters)
  CellSpec cell;
  SearchSpace space;
  int ocv_degree = 5;  // joint mode only

  std::size_t dimension() const;
  void validate() const;

  static FitProblem from_segment(DischargeSegment segment,
                                 std::optional<OcvCurve> ocv = std::nullopt,
                                 SearchSpace space = {},
                                 int ocv_degree = 5);
};

// Log-scaled view of the box used by the stochastic searchers:
// positive-bounded coordinates are explored in log space so decade-spanning
// ranges are covered uniformly.
struct SearchScale {
  explicit SearchScale(const SearchSpace& space);
  std::vector<double> lower, upper;  // transformed bounds
  std::vector<bool> is_log;
  std::vector<double> to_params(const std::vector<double>& internal) const;
};

EcmParams params_from_theta(std::span<const double> theta);
OcvCurve curve_from_theta(std::span<const double> theta,
                          const FitProblem& problem);

// mean((v_pred - v_meas)^2) over the segment; pure.
double objective_mse(std::span<const double> theta, const FitProblem& problem);

// Resolves the branch-permutation degeneracy: swap pairs if r1*c1 > r2*c2.
std::vector<double> canonicalize(std::vector<double> theta);

struct FitReport {
  std::vector<double> best_theta;
  double mse = 0.0;
  double execution_time = 0.0;  // seconds, optimizer core only
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::vector<double> trace;  // best-so-far MSE per iteration
  std::uint64_t seed = 0;
  std::string method;
  bool converged = true;
  bool low_identifiability = false;

  EcmParams best_params() const { return params_from_theta(best_theta); }
};

struct LmConfig {
  int max_iterations = 200;
  double grad_tol = 1e-10;
  double step_tol = 1e-12;
  std::optional<std::vector<double>> initial;  // default: box center
};

struct PsoConfig {
  int swarm_size = 30;
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
  int max_iterations = 1500;
  double velocity_clamp = 0.5;  // fraction of box width
};

struct SaConfig {
  int iterations = 4000;
  double t0 = 1e-4;
  double cooling = 0.998;
  double proposal_scale = 0.05;  // fraction of box width
};

struct GaConfig {
  int population = 60;
  int generations = 2000;
  double mutation_rate = 0.2;
  double mutation_scale = 0.03;  // fraction of box width
  std::optional<std::vector<double>> initial;  // seed the whole population
};

FitReport fit_least_squares(const FitProblem& problem, const LmConfig& cfg = {},
                            std::uint64_t seed = 42, int workers = 1);
FitReport fit_pso(const FitProblem& problem, const PsoConfig& cfg = {},
                  std::uint64_t seed = 42, int workers = 1);
FitReport fit_simulated_annealing(const FitProblem& problem,
                                  const SaConfig& cfg = {},
                                  std::uint64_t seed = 42, int workers = 1);
FitReport fit_genetic(const FitProblem& problem, const GaConfig& cfg = {},
                      std::uint64_t seed = 42, int workers = 1);

// Exhaustive log-spaced grid search; ties broken lexicographically.
// Fixed-OCV (5-dimensional) problems only.
std::pair<std::vector<double>, double> grid_oracle(const FitProblem& problem,
                                                   int points_per_dim);

// Gradient of objective_mse from the least-squares module's residual
// Jacobian: (2/N) * J^T r.
std::vector<double> lm_objective_gradient(std::span<const double> theta,
                                          const FitProblem& problem);

// Evaluate a candidate batch, optionally on several workers; results are
// returned in candidate-index order regardless of scheduling.
std::vector<double> evaluate_batch(const std::vector<std::vector<double>>& batch,
                                   const FitProblem& problem, int workers);

// Config-file bindings (keys: pso.*, sa.*, ga.*, lm.*, bounds.<name>.{lo,hi}).
PsoConfig pso_config_from(const KeyValueConfig& cfg);
SaConfig sa_config_from(const KeyValueConfig& cfg);
GaConfig ga_config_from(const KeyValueConfig& cfg);
LmConfig lm_config_from(const KeyValueConfig& cfg);
SearchSpace search_space_from(const KeyValueConfig& cfg);

// Dispatch by method name: "ls", "pso", "sa", "ga".
FitReport run_method(const std::string& method, const FitProblem& problem,
                     const KeyValueConfig& cfg, std::uint64_t seed,
                     int workers = 1);
const std::vector<std::string>& known_methods();

}  // namespace batfit
