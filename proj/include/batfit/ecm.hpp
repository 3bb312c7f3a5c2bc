#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace batfit {

// Dual-polarization (2RC) circuit constants: a series resistance and two
// parallel RC branches. Canonical ordering puts the faster time constant
// (r1*c1) first.
struct EcmParams {
  double r0;  // series resistance, ohm
  double r1;  // branch-1 resistance, ohm
  double c1;  // branch-1 capacitance, farad
  double r2;  // branch-2 resistance, ohm
  double c2;  // branch-2 capacitance, farad

  void validate() const;  // throws std::domain_error on violation
  bool canonical() const { return r1 * c1 <= r2 * c2; }
};

// Open-circuit voltage as a polynomial in SOC, lowest degree first.
struct OcvCurve {
  std::vector<double> coefficients;
  double soc_lo = 0.0;
  double soc_hi = 1.0;

  void validate() const;
  double eval(double soc) const;
};

struct SimulationState {
  double v1;   // branch-1 polarization voltage
  double v2;   // branch-2 polarization voltage
  double soc;  // state of charge, clamped to [0, 1]
};

struct CellSpec {
  double capacity_ah = 2.0;
  double soc_init = 1.0;

  void validate() const;
};

// alpha = exp(-dt / (r*c)), in (0, 1]
double branch_decay_factor(double r, double c, double dt);

// Zero-order-hold update of one RC branch over dt with constant current i.
double step_branch(double v_prev, double i, double r, double c, double dt);

// SOC update by coulomb counting; positive current discharges.
double coulomb_count(double soc_prev, double i, double dt, double capacity_ah);

double ocv_eval(const OcvCurve& curve, double soc);

// Least-squares polynomial fit of (soc, voltage) points.
OcvCurve fit_ocv(std::span<const std::pair<double, double>> points, int degree);

struct SimulationResult {
  std::vector<double> voltage;
  std::vector<SimulationState> states;
};

// Terminal voltage over a sampled current profile:
//   v[k] = ocv(soc[k]) - (v1[k] + v2[k]) - i[k]*r0
// Branch states advance by zero-order hold with the same-sample current.
SimulationResult simulate_terminal_voltage(const EcmParams& params,
                                           const OcvCurve& ocv,
                                           const CellSpec& cell,
                                           std::span<const double> time,
                                           std::span<const double> current);

// Plain-text OCV file: one coefficient per line, lowest degree first,
// optional "# ocv degree=<n>" header.
OcvCurve load_ocv_file(const std::string& path);
void save_ocv_file(const OcvCurve& curve, const std::string& path);

}  // namespace batfit
