#include <cmath>
#include <doctest.h>
#include <filesystem>
#include <vector>

#include "batfit/ecm.hpp"
#include "batfit/rng.hpp"

using namespace batfit;

namespace {

// Test-local oracle: step-by-step transcription of the 2RC recurrence,
// kept independent of simulate_terminal_voltage.
std::vector<double> oracle_simulate(const EcmParams& p, const OcvCurve& ocv,
                                    const CellSpec& cell,
                                    const std::vector<double>& time,
                                    const std::vector<double>& current) {
  double v1 = 0.0, v2 = 0.0, soc = cell.soc_init, t_prev = 0.0;
  std::vector<double> out;
  for (std::size_t k = 0; k < time.size(); ++k) {
    const double dt = std::max(time[k] - t_prev, 0.0);
    t_prev = time[k];
    const double i = current[k];
    soc = std::clamp(soc - i * dt / (3600.0 * cell.capacity_ah), 0.0, 1.0);
    const double a1 = std::exp(-dt / (p.r1 * p.c1));
    const double a2 = std::exp(-dt / (p.r2 * p.c2));
    v1 = a1 * v1 + p.r1 * (1.0 - a1) * i;
    v2 = a2 * v2 + p.r2 * (1.0 - a2) * i;
    out.push_back(ocv.eval(soc) - (v1 + v2) - i * p.r0);
  }
  return out;
}

OcvCurve constant_ocv(double v) {
  OcvCurve c;
  c.coefficients = {v};
  return c;
}

}  // namespace

TEST_CASE("branch_decay_factor examples") {
  CHECK(branch_decay_factor(1, 1, 0) == 1.0);
  CHECK(branch_decay_factor(1, 1, 1) == doctest::Approx(0.36787944117144233).epsilon(1e-12));
  CHECK(branch_decay_factor(2, 0.5, 0.6931471805599453) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(branch_decay_factor(0, 1, 1), std::domain_error);
  CHECK_THROWS_AS(branch_decay_factor(1, -1, 1), std::domain_error);
  CHECK_THROWS_AS(branch_decay_factor(1, 1, -1), std::domain_error);
  CHECK_THROWS_AS(branch_decay_factor(NAN, 1, 1), std::domain_error);
}

TEST_CASE("branch_decay_factor stays in (0,1]") {
  StreamRng rng(7, 0);
  for (int k = 0; k < 1000; ++k) {
    const double r = rng.log_uniform(1e-4, 1.0);
    const double c = rng.log_uniform(1.0, 1e6);
    const double dt = rng.uniform(0.0, 1e4);
    const double a = branch_decay_factor(r, c, dt);
    CHECK(a > 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("step_branch examples") {
  CHECK(step_branch(0, 0, 1, 1, 1) == 0.0);
  CHECK(step_branch(1, 0, 1, 1, 0) == 1.0);
  // alpha = exp(-1), v = 0.05 * (1 - alpha) * 2
  const double expected = 0.05 * (1.0 - std::exp(-1.0)) * 2.0;
  CHECK(step_branch(0, 2, 0.05, 1000, 50) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(0.06321205588285577).epsilon(1e-12));
}

TEST_CASE("step_branch approaches r*i for large dt") {
  CHECK(step_branch(0.3, 2.0, 0.05, 10.0, 1e6) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("branch boundedness from zero state") {
  StreamRng rng(11, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const double r = rng.log_uniform(1e-3, 1.0);
    const double c = rng.log_uniform(10.0, 1e5);
    const double imax = rng.uniform(0.1, 5.0);
    double v = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double i = rng.uniform(-imax, imax);
      const double dt = rng.uniform(0.0, 100.0);
      v = step_branch(v, i, r, c, dt);
      CHECK(std::fabs(v) <= r * imax + 1e-15);
    }
  }
}

TEST_CASE("coulomb_count examples") {
  CHECK(coulomb_count(1.0, 0, 3600, 2) == 1.0);
  CHECK(coulomb_count(1.0, 1, 3600, 2) == 0.5);  // half the capacity in 1 h
  CHECK(coulomb_count(1.0, 2, 3600, 2) == 0.0);  // full capacity, clamped
  CHECK(coulomb_count(0.01, 2, 3600, 2) == 0.0);
  CHECK_THROWS_AS(coulomb_count(0.5, 1, 10, 0), std::domain_error);
  CHECK_THROWS_AS(coulomb_count(0.5, NAN, 10, 2), std::domain_error);
}

TEST_CASE("ocv_eval examples") {
  OcvCurve constant = constant_ocv(3.7);
  CHECK(ocv_eval(constant, 0.5) == 3.7);

  OcvCurve linear;
  linear.coefficients = {3.0, 1.0};
  CHECK(ocv_eval(linear, 0.25) == 3.25);
  CHECK(ocv_eval(linear, 1.5) == 4.0);   // clamped to soc=1
  CHECK(ocv_eval(linear, -0.5) == 3.0);  // clamped to soc=0
}

TEST_CASE("OcvCurve validation") {
  OcvCurve empty;
  CHECK_THROWS_AS(empty.validate(), std::domain_error);

  OcvCurve too_high = constant_ocv(7.0);
  CHECK_THROWS_AS(too_high.validate(), std::domain_error);

  OcvCurve ok;
  ok.coefficients = {3.0, 1.0};
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("fit_ocv exact line through two points") {
  std::vector<std::pair<double, double>> pts = {{0.0, 3.0}, {1.0, 4.0}};
  const OcvCurve c = fit_ocv(pts, 1);
  REQUIRE(c.coefficients.size() == 2);
  CHECK(c.coefficients[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(c.coefficients[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_ocv recovers a noiseless quadratic") {
  std::vector<std::pair<double, double>> pts;
  for (int k = 0; k < 10; ++k) {
    const double s = k / 9.0;
    pts.emplace_back(s, 3.2 + 0.9 * s * s);
  }
  const OcvCurve c = fit_ocv(pts, 2);
  REQUIRE(c.coefficients.size() == 3);
  CHECK(std::fabs(c.coefficients[0] - 3.2) < 1e-9);
  CHECK(std::fabs(c.coefficients[1]) < 1e-9);
  CHECK(std::fabs(c.coefficients[2] - 0.9) < 1e-9);
}

TEST_CASE("fit_ocv matches a direct normal-equations oracle") {
  // degree-1 closed form: slope/intercept from the normal equations
  std::vector<std::pair<double, double>> pts = {{0.0, 3.0}, {0.5, 3.6}, {1.0, 3.9}};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pts.size());
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;

  const OcvCurve c = fit_ocv(pts, 1);
  CHECK(c.coefficients[0] == doctest::Approx(intercept).epsilon(1e-12));
  CHECK(c.coefficients[1] == doctest::Approx(slope).epsilon(1e-12));
}

TEST_CASE("fit_ocv rejects underdetermined input") {
  std::vector<std::pair<double, double>> pts = {{0.5, 3.0}, {0.5, 3.1}, {0.5, 3.2}};
  CHECK_THROWS(fit_ocv(pts, 2));
  std::vector<std::pair<double, double>> one = {{0.0, 3.0}};
  CHECK_THROWS_AS(fit_ocv(one, 1), std::invalid_argument);
}

TEST_CASE("simulate: zero current pins voltage to OCV(soc_init)") {
  const EcmParams p{0.1, 0.01, 100, 0.02, 5000};
  const CellSpec cell{2.0, 0.8};
  OcvCurve ocv;
  ocv.coefficients = {3.0, 1.0};
  std::vector<double> time, current;
  for (int k = 0; k < 50; ++k) {
    time.push_back(k * 2.0);
    current.push_back(0.0);
  }
  const auto sim = simulate_terminal_voltage(p, ocv, cell, time, current);
  for (double v : sim.voltage) CHECK(v == ocv.eval(0.8));
  for (const auto& st : sim.states) CHECK(st.soc == 0.8);
}

TEST_CASE("simulate: frozen branch leaves V = OCV - i*r0") {
  // r1*c1 enormous: branch-1 barely charges over the horizon; branch-2 tiny r
  const EcmParams p{0.1, 1e-9, 1e12, 1e-9, 1e15};
  const CellSpec cell{100.0, 1.0};
  const OcvCurve ocv = constant_ocv(3.7);
  std::vector<double> time, current;
  for (int k = 0; k < 100; ++k) {
    time.push_back(static_cast<double>(k));
    current.push_back(1.0);
  }
  const auto sim = simulate_terminal_voltage(p, ocv, cell, time, current);
  for (double v : sim.voltage)
    CHECK(v == doctest::Approx(3.7 - 0.1).epsilon(1e-9));
}

TEST_CASE("simulate matches the independent recurrence oracle") {
  const EcmParams p{0.05, 0.02, 1000, 0.03, 20000};
  const CellSpec cell{2.0, 1.0};
  OcvCurve ocv;
  ocv.coefficients = {3.0, 1.8, -4.5, 9.0, -7.5, 2.4};
  std::vector<double> time, current;
  for (int k = 0; k < 600; ++k) {
    time.push_back(static_cast<double>(k));
    current.push_back(1.0);
  }
  const auto sim = simulate_terminal_voltage(p, ocv, cell, time, current);
  const auto expected = oracle_simulate(p, ocv, cell, time, current);
  REQUIRE(sim.voltage.size() == expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k)
    CHECK(std::fabs(sim.voltage[k] - expected[k]) < 1e-12);
}

TEST_CASE("simulate: branch swap is bit-identical") {
  const EcmParams a{0.05, 0.02, 1000, 0.03, 20000};
  const EcmParams b{0.05, 0.03, 20000, 0.02, 1000};
  const CellSpec cell{2.0, 1.0};
  const OcvCurve ocv = constant_ocv(3.7);
  StreamRng rng(3, 0);
  std::vector<double> time, current;
  for (int k = 0; k < 128; ++k) {
    time.push_back(k * 1.5);
    current.push_back(rng.uniform(0.0, 2.0));
  }
  const auto va = simulate_terminal_voltage(a, ocv, cell, time, current).voltage;
  const auto vb = simulate_terminal_voltage(b, ocv, cell, time, current).voltage;
  for (std::size_t k = 0; k < va.size(); ++k) CHECK(va[k] == vb[k]);
}

TEST_CASE("simulate: charge conservation without clamping") {
  const EcmParams p{0.05, 0.02, 1000, 0.03, 20000};
  const CellSpec cell{5.0, 0.9};
  const OcvCurve ocv = constant_ocv(3.7);
  StreamRng rng(5, 0);
  std::vector<double> time, current;
  double t = 0.0;
  for (int k = 0; k < 200; ++k) {
    time.push_back(t);
    current.push_back(rng.uniform(0.0, 1.0));
    t += rng.uniform(0.1, 3.0);
  }
  const auto sim = simulate_terminal_voltage(p, ocv, cell, time, current);
  double removed = 0.0;
  double t_prev = 0.0;
  for (std::size_t k = 0; k < time.size(); ++k) {
    removed += current[k] * (time[k] - t_prev);
    t_prev = time[k];
  }
  const double expected = 0.9 - removed / (3600.0 * 5.0);
  CHECK(std::fabs(sim.states.back().soc - expected) < 1e-12);
}

TEST_CASE("simulate input validation") {
  const EcmParams p{0.05, 0.02, 1000, 0.03, 20000};
  const CellSpec cell{2.0, 1.0};
  const OcvCurve ocv = constant_ocv(3.7);
  std::vector<double> t2 = {0.0, 1.0}, t_bad = {0.0, 0.0};
  std::vector<double> i2 = {1.0, 1.0}, i1 = {1.0};
  CHECK_THROWS_AS(simulate_terminal_voltage(p, ocv, cell, t_bad, i2), std::invalid_argument);
  CHECK_THROWS_AS(simulate_terminal_voltage(p, ocv, cell, t2, i1), std::invalid_argument);
  std::vector<double> i_nan = {1.0, NAN};
  CHECK_THROWS_AS(simulate_terminal_voltage(p, ocv, cell, t2, i_nan), std::invalid_argument);
  std::vector<double> t1 = {0.0};
  CHECK_THROWS_AS(simulate_terminal_voltage(p, ocv, cell, t1, i1), std::invalid_argument);
}

TEST_CASE("simulate is deterministic") {
  const EcmParams p{0.05, 0.02, 1000, 0.03, 20000};
  const CellSpec cell{2.0, 1.0};
  const OcvCurve ocv = constant_ocv(3.7);
  std::vector<double> time, current;
  StreamRng rng(9, 0);
  for (int k = 0; k < 64; ++k) {
    time.push_back(static_cast<double>(k));
    current.push_back(rng.uniform(0.0, 2.0));
  }
  const auto a = simulate_terminal_voltage(p, ocv, cell, time, current).voltage;
  const auto b = simulate_terminal_voltage(p, ocv, cell, time, current).voltage;
  CHECK(a == b);
}

TEST_CASE("EcmParams validation") {
  CHECK_NOTHROW(EcmParams{0.05, 0.02, 1000, 0.03, 20000}.validate());
  CHECK_THROWS_AS((EcmParams{0.05, 0.02, -1000, 0.03, 20000}.validate()), std::domain_error);
  // non-canonical ordering: tau1 > tau2
  CHECK_THROWS_AS((EcmParams{0.05, 0.03, 20000, 0.02, 1000}.validate()), std::domain_error);
}

TEST_CASE("OCV file round-trip") {
  OcvCurve c;
  c.coefficients = {3.0, 1.8, -4.5, 9.0, -7.5, 2.4};
  const auto path = std::filesystem::temp_directory_path() / "batfit_ocv_rt.txt";
  save_ocv_file(c, path.string());
  const OcvCurve back = load_ocv_file(path.string());
  REQUIRE(back.coefficients.size() == c.coefficients.size());
  for (std::size_t i = 0; i < c.coefficients.size(); ++i)
    CHECK(back.coefficients[i] == doctest::Approx(c.coefficients[i]).epsilon(1e-15));
  std::filesystem::remove(path);
}
