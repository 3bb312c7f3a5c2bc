#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "batfit/optimize.hpp"

namespace batfit {

namespace {

std::vector<double> residuals(std::span<const double> theta,
                              const FitProblem& problem) {
  const EcmParams params = params_from_theta(theta);
  const OcvCurve curve = curve_from_theta(theta, problem);
  const auto sim = simulate_terminal_voltage(params, curve, problem.cell,
                                             problem.segment.time,
                                             problem.segment.current);
  std::vector<double> r(sim.voltage.size());
  for (std::size_t k = 0; k < r.size(); ++k)
    r[k] = sim.voltage[k] - problem.segment.voltage[k];
  return r;
}

double sse(const std::vector<double>& r) {
  double acc = 0.0;
  for (double x : r) acc += x * x;
  return acc;
}

// Central-difference Jacobian of the residual vector, N x n.
std::vector<std::vector<double>> jacobian(const std::vector<double>& theta,
                                          const FitProblem& problem,
                                          std::size_t& evals) {
  const std::size_t n = theta.size();
  const std::size_t nsamp = problem.segment.time.size();
  std::vector<std::vector<double>> jac(nsamp, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const double width = problem.space.upper[j] - problem.space.lower[j];
    const double h = std::max(1e-7 * std::fabs(theta[j]), 1e-10 * width);
    std::vector<double> tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    const auto rp = residuals(tp, problem);
    const auto rm = residuals(tm, problem);
    evals += 2;
    for (std::size_t k = 0; k < nsamp; ++k)
      jac[k][j] = (rp[k] - rm[k]) / (2.0 * h);
  }
  return jac;
}

// Solve (A + lambda*diag(A)) x = b by Gaussian elimination with pivoting.
bool solve_damped(std::vector<std::vector<double>> a, std::vector<double> b,
                  double lambda, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i][i];
    a[i][i] = d + lambda * (d > 0.0 ? d : 1.0);
  }
  x.assign(n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-300) return false;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t r = n; r-- > 0;) {
    double acc = b[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return true;
}

}  // namespace

std::vector<double> lm_objective_gradient(std::span<const double> theta,
                                          const FitProblem& problem) {
  const std::vector<double> th(theta.begin(), theta.end());
  const auto r = residuals(th, problem);
  std::size_t evals = 0;
  const auto jac = jacobian(th, problem, evals);
  const double inv_n = 1.0 / static_cast<double>(r.size());
  std::vector<double> g(th.size(), 0.0);
  for (std::size_t k = 0; k < r.size(); ++k)
    for (std::size_t j = 0; j < th.size(); ++j) g[j] += jac[k][j] * r[k];
  for (double& gj : g) gj *= 2.0 * inv_n;
  return g;
}

FitReport fit_least_squares(const FitProblem& problem, const LmConfig& cfg,
                            std::uint64_t seed, int /*workers*/) {
  problem.validate();
  const auto t_start = std::chrono::steady_clock::now();

  const std::size_t n = problem.dimension();
  const double nsamp = static_cast<double>(problem.segment.time.size());
  std::vector<double> x =
      cfg.initial ? problem.space.clamp(*cfg.initial) : problem.space.center();
  if (x.size() != n)
    throw std::invalid_argument("fit_least_squares: initial point dimension mismatch");

  FitReport report;
  report.method = "ls";
  report.seed = seed;
  report.converged = false;

  auto r = residuals(x, problem);
  report.evaluations = 1;
  double cur_sse = sse(r);
  report.trace.push_back(cur_sse / nsamp);

  double lambda = 1e-3;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    report.iterations = static_cast<std::size_t>(iter) + 1;

    const auto jac = jacobian(x, problem, report.evaluations);

    double jmax = 0.0;
    for (const auto& row : jac)
      for (double v : row) jmax = std::max(jmax, std::fabs(v));
    if (jmax == 0.0) {
      // residual insensitive to every parameter: nothing identifiable here
      report.low_identifiability = true;
      break;
    }

    // g = J^T r, A = J^T J
    std::vector<double> g(n, 0.0);
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < r.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        g[i] += jac[k][i] * r[k];
        for (std::size_t j = i; j < n; ++j) a[i][j] += jac[k][i] * jac[k][j];
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) a[i][j] = a[j][i];

    double grad_norm = 0.0;
    for (double gi : g) grad_norm += gi * gi;
    grad_norm = 2.0 / nsamp * std::sqrt(grad_norm);
    if (grad_norm < cfg.grad_tol) {
      report.converged = true;
      break;
    }

    // damped step with retry on rejection
    bool accepted = false;
    std::vector<double> neg_g(n);
    for (std::size_t i = 0; i < n; ++i) neg_g[i] = -g[i];
    while (lambda < 1e14) {
      std::vector<double> delta;
      if (!solve_damped(a, neg_g, lambda, delta)) {
        lambda *= 10.0;
        continue;
      }
      std::vector<double> x_new(n);
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + delta[i];
      x_new = problem.space.clamp(std::move(x_new));
      const auto r_new = residuals(x_new, problem);
      ++report.evaluations;
      const double new_sse = sse(r_new);
      if (new_sse < cur_sse) {
        double step_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = x_new[i] - x[i];
          step_norm += d * d;
        }
        step_norm = std::sqrt(step_norm);
        x = std::move(x_new);
        r = r_new;
        cur_sse = new_sse;
        report.trace.push_back(cur_sse / nsamp);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (step_norm < cfg.step_tol) report.converged = true;
        break;
      }
      lambda *= 3.0;
    }
    if (!accepted) {
      // no descent direction left at any damping: stationary in the box
      report.converged = true;
      break;
    }
    if (report.converged) break;
  }

  report.best_theta = canonicalize(x);
  report.mse = cur_sse / nsamp;
  report.execution_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace batfit
