// batfit: 2RC battery model identification and optimizer benchmarking CLI.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "batfit/bench.hpp"
#include "batfit/config.hpp"
#include "batfit/dataset.hpp"
#include "batfit/ecm.hpp"
#include "batfit/optimize.hpp"

#include <algorithm>
#include <limits>

namespace fs = std::filesystem;
using namespace batfit;

SearchSpace search_space_from_cfg_mode(const KeyValueConfig& cfg, bool fixed_ocv,
                                       int joint_degree);

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNonConverged = 3;

struct CommonOpts {
  std::string config_path;
  bool verbose = false;
  int workers = 1;
};

KeyValueConfig load_cfg(const CommonOpts& opts) {
  if (opts.config_path.empty()) return {};
  return load_config_file(opts.config_path);
}

void print_cfg(const KeyValueConfig& cfg, const CommonOpts& opts) {
  if (!opts.verbose) return;
  std::cerr << "config:\n";
  for (const auto& [k, v] : cfg) std::cerr << "  " << k << "=" << v << "\n";
}

ColumnMap column_map_from(const KeyValueConfig& cfg) {
  ColumnMap m;
  m.test_time = config_string(cfg, "col.test_time", m.test_time);
  m.cycle_index = config_string(cfg, "col.cycle_index", m.cycle_index);
  m.current = config_string(cfg, "col.current", m.current);
  m.voltage = config_string(cfg, "col.voltage", m.voltage);
  m.temperature = config_string(cfg, "col.temperature", m.temperature);
  return m;
}

std::vector<RawRecord> parse_file(const std::string& path,
                                  const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  return parse_timeseries(in, columns);
}

// First cycle with a usable discharge window, or the requested one.
DischargeSegment pick_segment(const std::vector<RawRecord>& records,
                              const WindowPolicy& policy, const CellSpec& cell,
                              const std::string& cell_id,
                              std::optional<long> wanted_cycle) {
  const auto runs = segment_cycles(records);
  std::string last_error = "no cycles in input";
  for (const auto& run : runs) {
    if (wanted_cycle && run.cycle_index != *wanted_cycle) continue;
    try {
      return extract_discharge_window(
          std::span<const RawRecord>(records.data() + run.begin,
                                     run.end - run.begin),
          policy, cell, cell_id, run.cycle_index);
    } catch (const DataError& e) {
      last_error = e.what();
    }
  }
  throw DataError(last_error);
}

nlohmann::json fit_report_json(const FitReport& report,
                               const FitProblem& problem) {
  nlohmann::json j;
  j["method"] = report.method;
  j["seed"] = report.seed;
  j["mse"] = report.mse;
  j["execution_time_s"] = report.execution_time;
  j["iterations"] = report.iterations;
  j["evaluations"] = report.evaluations;
  j["converged"] = report.converged;
  j["low_identifiability"] = report.low_identifiability;
  const EcmParams p = report.best_params();
  j["params"] = {{"r0", p.r0}, {"r1", p.r1}, {"c1", p.c1},
                 {"r2", p.r2}, {"c2", p.c2}};
  if (!problem.ocv) {
    j["ocv_coefficients"] = std::vector<double>(report.best_theta.begin() + 5,
                                                report.best_theta.end());
  }
  j["trace"] = report.trace;
  return j;
}

int cmd_fit(const CommonOpts& common, const std::string& input,
            std::string method, const std::string& ocv_path, double capacity,
            double soc_init, std::optional<long> cycle, std::uint64_t seed,
            const std::string& out_dir, double resample_dt,
            bool invert_current, int joint_degree) {
  if (std::find(known_methods().begin(), known_methods().end(), method) ==
      known_methods().end()) {
    std::cerr << "error: unknown method '" << method << "'; valid methods:";
    for (const auto& m : known_methods()) std::cerr << " " << m;
    std::cerr << "\n";
    return kExitUsage;
  }

  KeyValueConfig cfg;
  try {
    cfg = load_cfg(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  print_cfg(cfg, common);

  try {
    const auto records = parse_file(input, column_map_from(cfg));
    WindowPolicy policy;
    policy.onset_threshold_a = config_double(cfg, "window.onset_a", policy.onset_threshold_a);
    policy.window_s = config_double(cfg, "window.length_s", policy.window_s);
    policy.invert_current = invert_current;
    const CellSpec cell{capacity, soc_init};
    const std::string cell_id = fs::path(input).stem().string();

    DischargeSegment segment =
        pick_segment(records, policy, cell, cell_id, cycle);
    if (resample_dt > 0.0) segment = resample_uniform(segment, resample_dt);

    std::optional<OcvCurve> ocv;
    if (!ocv_path.empty()) ocv = load_ocv_file(ocv_path);
    FitProblem problem = FitProblem::from_segment(
        segment, ocv, search_space_from_cfg_mode(cfg, ocv.has_value(), joint_degree),
        joint_degree);

    const FitReport report =
        run_method(method, problem, cfg, seed, common.workers);

    fs::create_directories(out_dir);
    const std::string tag = segment.cell_id + "_" +
                            std::to_string(segment.cycle_index) + "_" + method;
    {
      std::ofstream out(fs::path(out_dir) / ("fit_" + tag + ".json"));
      out << fit_report_json(report, problem).dump(2) << "\n";
    }
    emit_overlay(problem, report, fs::path(out_dir) / ("overlay_" + tag + ".csv"));

    if (common.verbose)
      std::cerr << "mse=" << format_double(report.mse)
                << " et=" << format_double(report.execution_time) << "s\n";
    return report.converged ? kExitOk : kExitNonConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

EcmParams params_from_file(const std::string& path, CellSpec& cell) {
  const auto cfg = load_config_file(path);
  auto need = [&](const char* key) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double v = config_double(cfg, key, nan);
    if (std::isnan(v))
      throw std::runtime_error(std::string("params file missing key: ") + key);
    return v;
  };
  EcmParams p{need("r0"), need("r1"), need("c1"), need("r2"), need("c2")};
  cell.capacity_ah = config_double(cfg, "capacity_ah", cell.capacity_ah);
  cell.soc_init = config_double(cfg, "soc_init", cell.soc_init);
  return p;
}

int cmd_simulate(const CommonOpts& common, const std::string& params_path,
                 const std::string& ocv_path, const std::string& profile_path,
                 const std::string& out_path) {
  try {
    CellSpec cell;
    EcmParams params = params_from_file(params_path, cell);
    if (params.r1 * params.c1 > params.r2 * params.c2) {
      std::swap(params.r1, params.r2);
      std::swap(params.c1, params.c2);
    }
    params.validate();
    cell.validate();
    const OcvCurve ocv = load_ocv_file(ocv_path);
    ocv.validate();

    std::ifstream in(profile_path);
    if (!in) throw std::runtime_error("cannot open profile: " + profile_path);
    std::string header;
    if (!std::getline(in, header))
      throw std::runtime_error("empty profile file");
    std::vector<double> time, current;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      std::istringstream ss(line);
      std::string a, b;
      if (!std::getline(ss, a, ',') || !std::getline(ss, b))
        throw std::runtime_error("malformed profile line: " + line);
      time.push_back(std::stod(a));
      current.push_back(std::stod(b));
    }

    const auto sim = simulate_terminal_voltage(params, ocv, cell, time, current);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write: " + out_path);
    out << "time_s,voltage_v\n";
    for (std::size_t k = 0; k < sim.voltage.size(); ++k)
      out << format_double(time[k]) << ',' << format_double(sim.voltage[k]) << '\n';
    if (common.verbose)
      std::cerr << "wrote " << sim.voltage.size() << " samples\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

struct Manifest {
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  std::string config_path;
  std::string ocv_path;
  struct Entry {
    std::string path;
    std::string cell_id;
    double capacity = 2.0;
    double soc_init = 1.0;
  };
  std::vector<Entry> entries;
};

Manifest parse_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("methods=", 0) == 0) {
      std::istringstream ss(line.substr(8));
      std::string tok;
      while (std::getline(ss, tok, ',')) m.methods.push_back(tok);
    } else if (line.rfind("seeds=", 0) == 0) {
      std::istringstream ss(line.substr(6));
      std::string tok;
      while (std::getline(ss, tok, ',')) m.seeds.push_back(std::stoull(tok));
    } else if (line.rfind("config=", 0) == 0) {
      m.config_path = line.substr(7);
    } else if (line.rfind("ocv=", 0) == 0) {
      m.ocv_path = line.substr(4);
    } else {
      std::istringstream ss(line);
      std::string tok;
      std::vector<std::string> cells;
      while (std::getline(ss, tok, ',')) cells.push_back(tok);
      if (cells.size() < 3)
        throw std::runtime_error("manifest problem line needs path,cell_id,capacity_Ah: " + line);
      Manifest::Entry e;
      e.path = cells[0];
      e.cell_id = cells[1];
      e.capacity = std::stod(cells[2]);
      if (cells.size() > 3) e.soc_init = std::stod(cells[3]);
      m.entries.push_back(std::move(e));
    }
  }
  return m;
}

int cmd_benchmark(const CommonOpts& common, const std::string& manifest_path,
                  const std::string& out_dir) {
  Manifest manifest;
  try {
    manifest = parse_manifest(manifest_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (manifest.entries.empty() || manifest.methods.empty() ||
      manifest.seeds.empty()) {
    std::cerr << "error: manifest must list problems, methods=, and seeds=\n";
    return kExitUsage;
  }

  try {
    KeyValueConfig cfg;
    if (!manifest.config_path.empty())
      cfg = load_config_file(manifest.config_path);
    else if (!common.config_path.empty())
      cfg = load_config_file(common.config_path);
    print_cfg(cfg, common);

    std::optional<OcvCurve> ocv;
    if (!manifest.ocv_path.empty()) ocv = load_ocv_file(manifest.ocv_path);

    WindowPolicy policy;
    policy.onset_threshold_a = config_double(cfg, "window.onset_a", policy.onset_threshold_a);
    policy.window_s = config_double(cfg, "window.length_s", policy.window_s);

    BenchmarkSuite suite;
    suite.methods = manifest.methods;
    suite.seeds = manifest.seeds;
    suite.config = cfg;
    for (const auto& e : manifest.entries) {
      const auto records = parse_file(e.path, column_map_from(cfg));
      const CellSpec cell{e.capacity, e.soc_init};
      DischargeSegment segment =
          pick_segment(records, policy, cell, e.cell_id, std::nullopt);
      BenchProblem bp;
      bp.problem = FitProblem::from_segment(
          segment, ocv,
          search_space_from_cfg_mode(cfg, ocv.has_value(), 5), 5);
      bp.cell_id = e.cell_id;
      bp.cycle_index = segment.cycle_index;
      bp.source = e.path;
      suite.problems.push_back(std::move(bp));
    }

    const BenchmarkReport report = run_suite(suite, common.workers);
    emit_report(report, "csv", out_dir);
    emit_report(report, "markdown", out_dir);
    emit_report(report, "json", out_dir);
    if (common.verbose)
      std::cerr << "wrote " << report.rows.size() << " rows to " << out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

int cmd_ocv_fit(const CommonOpts&, const std::string& input, int degree,
                const std::string& out_path) {
  try {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot open input: " + input);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty input file");
    std::vector<std::pair<double, double>> points;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      std::istringstream ss(line);
      std::string a, b;
      if (!std::getline(ss, a, ',') || !std::getline(ss, b))
        throw std::runtime_error("malformed line: " + line);
      points.emplace_back(std::stod(a), std::stod(b));
    }
    const OcvCurve curve = fit_ocv(points, degree);
    save_ocv_file(curve, out_path);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace

// Bounds come from the config; the default box depends on the OCV mode.
SearchSpace search_space_from_cfg_mode(const KeyValueConfig& cfg, bool fixed_ocv,
                                       int joint_degree) {
  SearchSpace circuit = search_space_from(cfg);
  if (fixed_ocv) return circuit;
  SearchSpace joint = SearchSpace::default_joint(joint_degree);
  for (std::size_t i = 0; i < 5; ++i) {
    joint.lower[i] = circuit.lower[i];
    joint.upper[i] = circuit.upper[i];
  }
  return joint;
}

int main(int argc, char** argv) {
  CLI::App app{"2RC battery model identification and optimizer benchmarking"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_flag("--verbose", common.verbose, "print effective configuration");

  // fit
  auto* fit = app.add_subcommand("fit", "identify circuit parameters from a cycler CSV");
  std::string fit_input, fit_method = "pso", fit_ocv, fit_out = ".";
  double fit_capacity = 2.0, fit_soc_init = 1.0, fit_dt = 0.0;
  long fit_cycle = -1;
  std::uint64_t fit_seed = 42;
  bool fit_invert = false;
  int fit_degree = 5;
  fit->add_option("--input", fit_input, "cycler CSV (Battery Archive layout)")->required();
  fit->add_option("--method", fit_method, "ls|pso|sa|ga");
  fit->add_option("--config", common.config_path, "key=value config file");
  fit->add_option("--ocv", fit_ocv, "fixed OCV coefficient file (else joint identification)");
  fit->add_option("--capacity", fit_capacity, "nominal capacity, Ah");
  fit->add_option("--soc-init", fit_soc_init, "SOC at cycle start");
  fit->add_option("--cycle", fit_cycle, "cycle index (default: first with discharge)");
  fit->add_option("--seed", fit_seed, "RNG seed");
  fit->add_option("--out", fit_out, "output directory");
  fit->add_option("--dt", fit_dt, "resample step, s (0 = keep native sampling)");
  fit->add_option("--workers", common.workers, "parallel evaluation workers");
  fit->add_option("--joint-degree", fit_degree, "OCV polynomial degree in joint mode");
  fit->add_flag("--invert-current", fit_invert, "input uses charge-positive sign");

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate terminal voltage for a current profile");
  std::string sim_params, sim_ocv, sim_profile, sim_out = "simulated.csv";
  sim->add_option("--params", sim_params, "params file (r0=..., r1=..., ...)")->required();
  sim->add_option("--ocv", sim_ocv, "OCV coefficient file")->required();
  sim->add_option("--profile", sim_profile, "CSV with time_s,current_a")->required();
  sim->add_option("--out", sim_out, "output CSV");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "run the method x problem x seed comparison");
  std::string bench_manifest, bench_out = "bench_out";
  bench->add_option("--manifest", bench_manifest, "suite manifest")->required();
  bench->add_option("--out", bench_out, "output directory");
  bench->add_option("--workers", common.workers, "concurrent runs (default sequential)");
  bench->add_option("--config", common.config_path, "key=value config file");

  // ocv-fit
  auto* ocvfit = app.add_subcommand("ocv-fit", "fit an OCV polynomial to (soc,voltage) points");
  std::string ocv_input, ocv_out = "ocv.txt";
  int ocv_degree = 5;
  ocvfit->add_option("--input", ocv_input, "CSV with soc,voltage_v")->required();
  ocvfit->add_option("--degree", ocv_degree, "polynomial degree");
  ocvfit->add_option("--out", ocv_out, "output coefficient file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (fit->parsed())
    return cmd_fit(common, fit_input, fit_method, fit_ocv, fit_capacity,
                   fit_soc_init,
                   fit_cycle >= 0 ? std::optional<long>(fit_cycle) : std::nullopt,
                   fit_seed, fit_out, fit_dt, fit_invert, fit_degree);
  if (sim->parsed()) return cmd_simulate(common, sim_params, sim_ocv, sim_profile, sim_out);
  if (bench->parsed()) return cmd_benchmark(common, bench_manifest, bench_out);
  if (ocvfit->parsed()) return cmd_ocv_fit(common, ocv_input, ocv_degree, ocv_out);
  return kExitUsage;
}
