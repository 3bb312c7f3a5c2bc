#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "batfit/optimize.hpp"

namespace batfit {

// One identification problem plus where it came from.
struct BenchProblem {
  FitProblem problem;
  std::string cell_id;
  long cycle_index = 0;
  std::string source;
};

struct BenchmarkSuite {
  std::vector<BenchProblem> problems;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  KeyValueConfig config;  // optimizer budgets / hyperparameters

  void validate() const;
};

struct BenchRow {
  std::string method;
  std::string cell_id;
  long cycle_index = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  double et = 0.0;
  bool converged = false;
  bool failed = false;
  std::string error;

  bool operator==(const BenchRow&) const = default;
};

struct MethodAggregate {
  std::string method;
  double median_mse = 0.0;
  double mean_mse = 0.0;
  double median_et = 0.0;
  double mean_et = 0.0;
  std::size_t runs = 0;

  bool operator==(const MethodAggregate&) const = default;
};

struct BenchmarkReport {
  std::vector<BenchRow> rows;
  std::vector<MethodAggregate> aggregates;

  bool operator==(const BenchmarkReport&) const = default;
};

// Runs every (method, problem, seed) triple; failures become flagged rows.
BenchmarkReport run_suite(const BenchmarkSuite& suite, int workers = 1);

// Aggregates over non-failed rows, in method order of first appearance.
std::vector<MethodAggregate> aggregate_rows(const std::vector<BenchRow>& rows);

struct ReferenceEntry {
  std::string method;
  double mse;
  double et;
};

// Published comparison figures kept as labeled reference fixtures.
const std::vector<ReferenceEntry>& reference_table();

// Writes report.csv (per-row) and summary.<format>; format in {csv,markdown,json}.
void emit_report(const BenchmarkReport& report, const std::string& format,
                 const std::filesystem::path& out_dir);

// Three-column overlay (time_s, v_measured, v_predicted) for external plotting.
void emit_overlay(const FitProblem& problem, const FitReport& fit,
                  const std::filesystem::path& path);

std::string report_to_json(const BenchmarkReport& report);
BenchmarkReport report_from_json(const std::string& text);

// Shortest round-trip decimal rendering.
std::string format_double(double v);

}  // namespace batfit
