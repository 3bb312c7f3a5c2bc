#include "batfit/ecm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace batfit {

namespace {

bool finite(double x) { return std::isfinite(x); }

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

void EcmParams::validate() const {
  const double v[] = {r0, r1, c1, r2, c2};
  for (double x : v) {
    if (!finite(x) || x <= 0.0)
      throw std::domain_error("EcmParams: all fields must be positive and finite");
  }
  if (r1 * c1 > r2 * c2)
    throw std::domain_error("EcmParams: expected canonical ordering r1*c1 <= r2*c2");
}

void OcvCurve::validate() const {
  if (coefficients.empty())
    throw std::domain_error("OcvCurve: needs at least one coefficient");
  for (double c : coefficients)
    if (!finite(c)) throw std::domain_error("OcvCurve: non-finite coefficient");
  if (!(0.0 <= soc_lo && soc_lo < soc_hi && soc_hi <= 1.0))
    throw std::domain_error("OcvCurve: valid_range must satisfy 0 <= lo < hi <= 1");
  // sanity envelope for a Li-ion single cell, sampled across the valid range
  for (int k = 0; k <= 100; ++k) {
    const double soc = soc_lo + (soc_hi - soc_lo) * (k / 100.0);
    const double v = eval(soc);
    if (!finite(v) || v < 0.5 || v > 6.0)
      throw std::domain_error("OcvCurve: evaluated voltage outside [0.5, 6.0] V");
  }
}

double OcvCurve::eval(double soc) const {
  const double s = std::clamp(soc, soc_lo, soc_hi);
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
    acc = acc * s + *it;
  return acc;
}

void CellSpec::validate() const {
  if (!finite(capacity_ah) || capacity_ah <= 0.0)
    throw std::domain_error("CellSpec: capacity must be positive");
  if (!finite(soc_init) || soc_init < 0.0 || soc_init > 1.0)
    throw std::domain_error("CellSpec: soc_init must lie in [0, 1]");
}

double branch_decay_factor(double r, double c, double dt) {
  if (!finite(r) || !finite(c) || !finite(dt) || r <= 0.0 || c <= 0.0 || dt < 0.0)
    throw std::domain_error("branch_decay_factor: need r > 0, c > 0, dt >= 0");
  // exp underflows to 0 for dt >> r*c; keep the (0, 1] contract
  return std::max(std::exp(-dt / (r * c)), std::numeric_limits<double>::min());
}

double step_branch(double v_prev, double i, double r, double c, double dt) {
  if (!finite(v_prev) || !finite(i))
    throw std::domain_error("step_branch: non-finite input");
  const double alpha = branch_decay_factor(r, c, dt);
  return alpha * v_prev + r * (1.0 - alpha) * i;
}

double coulomb_count(double soc_prev, double i, double dt, double capacity_ah) {
  if (!finite(soc_prev) || !finite(i) || !finite(dt) || !finite(capacity_ah) ||
      capacity_ah <= 0.0 || dt < 0.0)
    throw std::domain_error("coulomb_count: invalid input");
  return clamp01(soc_prev - i * dt / (3600.0 * capacity_ah));
}

double ocv_eval(const OcvCurve& curve, double soc) { return curve.eval(soc); }

OcvCurve fit_ocv(std::span<const std::pair<double, double>> points, int degree) {
  if (degree < 0) throw std::invalid_argument("fit_ocv: degree must be >= 0");
  const std::size_t n = static_cast<std::size_t>(degree) + 1;
  if (points.size() < n)
    throw std::invalid_argument("fit_ocv: need at least degree+1 points");

  // normal equations A x = b with A = V^T V for the Vandermonde matrix V
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  std::vector<double> pow_cache(2 * n - 1);
  for (const auto& [soc, volt] : points) {
    double p = 1.0;
    for (std::size_t k = 0; k < 2 * n - 1; ++k) {
      pow_cache[k] = p;
      p *= soc;
    }
    for (std::size_t r = 0; r < n; ++r) {
      b[r] += pow_cache[r] * volt;
      for (std::size_t c = 0; c < n; ++c) a[r][c] += pow_cache[r + c];
    }
  }

  // Gaussian elimination with partial pivoting
  std::vector<double> x(n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-12)
      throw std::runtime_error("fit_ocv: rank-deficient system, points cannot determine coefficients");
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

  OcvCurve curve;
  curve.coefficients = std::move(x);
  return curve;
}

SimulationResult simulate_terminal_voltage(const EcmParams& params,
                                           const OcvCurve& ocv,
                                           const CellSpec& cell,
                                           std::span<const double> time,
                                           std::span<const double> current) {
  if (time.size() != current.size())
    throw std::invalid_argument("simulate: time/current length mismatch");
  if (time.size() < 2)
    throw std::invalid_argument("simulate: need at least 2 samples");
  for (std::size_t k = 0; k < time.size(); ++k) {
    if (!finite(time[k]) || !finite(current[k]))
      throw std::invalid_argument("simulate: non-finite sample");
    if (k > 0 && time[k] <= time[k - 1])
      throw std::invalid_argument("simulate: timestamps must be strictly increasing");
  }

  SimulationResult out;
  out.voltage.reserve(time.size());
  out.states.reserve(time.size());

  SimulationState st{0.0, 0.0, cell.soc_init};
  double t_prev = 0.0;
  for (std::size_t k = 0; k < time.size(); ++k) {
    const double dt = std::max(time[k] - t_prev, 0.0);
    t_prev = time[k];
    const double i = current[k];
    st.soc = coulomb_count(st.soc, i, dt, cell.capacity_ah);
    st.v1 = step_branch(st.v1, i, params.r1, params.c1, dt);
    st.v2 = step_branch(st.v2, i, params.r2, params.c2, dt);
    // sum the branch drops first so a branch swap is bit-identical
    const double v = ocv.eval(st.soc) - (st.v1 + st.v2) - i * params.r0;
    out.voltage.push_back(v);
    out.states.push_back(st);
  }
  return out;
}

OcvCurve load_ocv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open OCV file: " + path);
  OcvCurve curve;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double c;
    if (!(ss >> c)) throw std::runtime_error("malformed OCV file line: " + line);
    curve.coefficients.push_back(c);
  }
  if (curve.coefficients.empty())
    throw std::runtime_error("OCV file has no coefficients: " + path);
  return curve;
}

void save_ocv_file(const OcvCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write OCV file: " + path);
  out << "# ocv degree=" << curve.coefficients.size() - 1 << "\n";
  out.precision(17);
  for (double c : curve.coefficients) out << c << "\n";
}

}  // namespace batfit
