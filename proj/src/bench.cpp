#include "batfit/bench.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace batfit {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void BenchmarkSuite::validate() const {
  if (problems.empty() || methods.empty() || seeds.empty())
    throw std::invalid_argument("BenchmarkSuite: problems, methods, and seeds must be non-empty");
  for (const auto& p : problems) p.problem.validate();
}

BenchmarkReport run_suite(const BenchmarkSuite& suite, int workers) {
  suite.validate();

  struct Triple {
    std::size_t method, problem, seed;
  };
  std::vector<Triple> triples;
  for (std::size_t m = 0; m < suite.methods.size(); ++m)
    for (std::size_t p = 0; p < suite.problems.size(); ++p)
      for (std::size_t s = 0; s < suite.seeds.size(); ++s)
        triples.push_back({m, p, s});

  std::vector<BenchRow> rows(triples.size());
  auto run_one = [&](std::size_t i) {
    const auto& t = triples[i];
    const auto& bp = suite.problems[t.problem];
    BenchRow row;
    row.method = suite.methods[t.method];
    row.cell_id = bp.cell_id;
    row.cycle_index = bp.cycle_index;
    row.seed = suite.seeds[t.seed];
    try {
      const FitReport fit =
          run_method(row.method, bp.problem, suite.config, row.seed, 1);
      row.mse = fit.mse;
      row.et = fit.execution_time;
      row.converged = fit.converged;
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows[i] = std::move(row);
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < triples.size(); ++i) run_one(i);
  } else {
    const std::size_t nw =
        std::min<std::size_t>(static_cast<std::size_t>(workers), triples.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nw; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < triples.size(); i += nw) run_one(i);
      });
    for (auto& th : pool) th.join();
  }

  BenchmarkReport report;
  report.rows = std::move(rows);
  report.aggregates = aggregate_rows(report.rows);
  return report;
}

std::vector<MethodAggregate> aggregate_rows(const std::vector<BenchRow>& rows) {
  std::vector<std::string> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.method) == order.end())
      order.push_back(r.method);

  std::vector<MethodAggregate> out;
  for (const auto& m : order) {
    std::vector<double> mses, ets;
    for (const auto& r : rows) {
      if (r.method != m || r.failed) continue;
      mses.push_back(r.mse);
      ets.push_back(r.et);
    }
    MethodAggregate agg;
    agg.method = m;
    agg.median_mse = median(mses);
    agg.mean_mse = mean(mses);
    agg.median_et = median(ets);
    agg.mean_et = mean(ets);
    agg.runs = mses.size();
    out.push_back(agg);
  }
  return out;
}

const std::vector<ReferenceEntry>& reference_table() {
  static const std::vector<ReferenceEntry> table = {
      {"Least Squares", 1.698e-6, 0.15},
      {"Particle Swarm", 3.577e-7, 0.56},
      {"Simulated Annealing", 5.9719e-7, 0.61},
      {"Genetic Algorithm", 4.66e-6, 1.47},
      {"Golf Field", 7.074e-6, 1.25},
      {"Australian Dingo", 3.907e-7, 2.98},
      {"Mexican Axolotl", 1.23e-6, 2.91},
      {"Spider Jumping", 7.234e-5, 4.2},
  };
  return table;
}

namespace {

void write_rows_csv(const BenchmarkReport& report,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,cell_id,cycle_index,seed,mse,et_s,converged,failed,error\n";
  for (const auto& r : report.rows) {
    out << r.method << ',' << r.cell_id << ',' << r.cycle_index << ','
        << r.seed << ',' << format_double(r.mse) << ',' << format_double(r.et)
        << ',' << (r.converged ? 1 : 0) << ',' << (r.failed ? 1 : 0) << ','
        << r.error << '\n';
  }
}

void write_summary_csv(const BenchmarkReport& report,
                       const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "block,method,mse,et_s\n";
  for (const auto& a : report.aggregates)
    out << "measured," << a.method << ',' << format_double(a.median_mse) << ','
        << format_double(a.median_et) << '\n';
  for (const auto& e : reference_table())
    out << "reference," << e.method << ',' << format_double(e.mse) << ','
        << format_double(e.et) << '\n';
}

void write_summary_md(const BenchmarkReport& report,
                      const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "| Method | MSE | ET (s) |\n|---|---|---|\n";
  for (const auto& a : report.aggregates)
    out << "| " << a.method << " | " << format_double(a.median_mse) << " | "
        << format_double(a.median_et) << " |\n";
  out << "\nreference (published figures)\n\n";
  out << "| Method | MSE | ET (s) |\n|---|---|---|\n";
  for (const auto& e : reference_table())
    out << "| " << e.method << " | " << format_double(e.mse) << " | "
        << format_double(e.et) << " |\n";
}

}  // namespace

std::string report_to_json(const BenchmarkReport& report) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"method", r.method},
                         {"cell_id", r.cell_id},
                         {"cycle_index", r.cycle_index},
                         {"seed", r.seed},
                         {"mse", r.mse},
                         {"et_s", r.et},
                         {"converged", r.converged},
                         {"failed", r.failed},
                         {"error", r.error}});
  }
  j["aggregates"] = nlohmann::json::array();
  for (const auto& a : report.aggregates) {
    j["aggregates"].push_back({{"method", a.method},
                               {"median_mse", a.median_mse},
                               {"mean_mse", a.mean_mse},
                               {"median_et", a.median_et},
                               {"mean_et", a.mean_et},
                               {"runs", a.runs}});
  }
  j["reference"] = nlohmann::json::array();
  for (const auto& e : reference_table())
    j["reference"].push_back({{"method", e.method}, {"mse", e.mse}, {"et_s", e.et}});
  return j.dump(2);
}

BenchmarkReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  BenchmarkReport report;
  for (const auto& jr : j.at("rows")) {
    BenchRow r;
    r.method = jr.at("method").get<std::string>();
    r.cell_id = jr.at("cell_id").get<std::string>();
    r.cycle_index = jr.at("cycle_index").get<long>();
    r.seed = jr.at("seed").get<std::uint64_t>();
    r.mse = jr.at("mse").get<double>();
    r.et = jr.at("et_s").get<double>();
    r.converged = jr.at("converged").get<bool>();
    r.failed = jr.at("failed").get<bool>();
    r.error = jr.at("error").get<std::string>();
    report.rows.push_back(std::move(r));
  }
  for (const auto& ja : j.at("aggregates")) {
    MethodAggregate a;
    a.method = ja.at("method").get<std::string>();
    a.median_mse = ja.at("median_mse").get<double>();
    a.mean_mse = ja.at("mean_mse").get<double>();
    a.median_et = ja.at("median_et").get<double>();
    a.mean_et = ja.at("mean_et").get<double>();
    a.runs = ja.at("runs").get<std::size_t>();
    report.aggregates.push_back(std::move(a));
  }
  return report;
}

void emit_report(const BenchmarkReport& report, const std::string& format,
                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_rows_csv(report, out_dir / "report.csv");
  if (format == "csv") {
    write_summary_csv(report, out_dir / "summary.csv");
  } else if (format == "markdown") {
    write_summary_md(report, out_dir / "summary.md");
  } else if (format == "json") {
    auto out = open_out(out_dir / "summary.json");
    out << report_to_json(report) << '\n';
  } else {
    throw std::invalid_argument("emit_report: format must be csv, markdown, or json");
  }
}

void emit_overlay(const FitProblem& problem, const FitReport& fit,
                  const std::filesystem::path& path) {
  const EcmParams params = params_from_theta(fit.best_theta);
  const OcvCurve curve = curve_from_theta(fit.best_theta, problem);
  const auto sim = simulate_terminal_voltage(params, curve, problem.cell,
                                             problem.segment.time,
                                             problem.segment.current);
  auto out = open_out(path);
  out << "time_s,v_measured,v_predicted\n";
  for (std::size_t k = 0; k < sim.voltage.size(); ++k) {
    out << format_double(problem.segment.time[k]) << ','
        << format_double(problem.segment.voltage[k]) << ','
        << format_double(sim.voltage[k]) << '\n';
  }
}

}  // namespace batfit
