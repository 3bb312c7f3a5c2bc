#include "batfit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace batfit {

namespace {

constexpr std::size_t kMinSegmentSamples = 16;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

[[noreturn]] void row_error(std::size_t row, const std::string& what) {
  throw ParseError("row " + std::to_string(row) + ": " + what);
}

}  // namespace

std::vector<RawRecord> parse_timeseries(std::istream& in,
                                        const ColumnMap& columns) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("empty file");
  const auto names = split_csv_line(header);
  if (names.empty()) throw ParseError("malformed header");

  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return std::nullopt;
  };
  auto require_col = [&](const std::string& name) {
    auto idx = find_col(name);
    if (!idx) throw ParseError("missing required column: " + name);
    return *idx;
  };

  const std::size_t i_time = require_col(columns.test_time);
  const std::size_t i_cycle = require_col(columns.cycle_index);
  const std::size_t i_curr = require_col(columns.current);
  const std::size_t i_volt = require_col(columns.voltage);
  const auto i_temp = find_col(columns.temperature);

  std::vector<RawRecord> records;
  std::string line;
  std::size_t row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const std::size_t need =
        std::max({i_time, i_cycle, i_curr, i_volt}) + 1;
    if (cells.size() < need) row_error(row, "too few columns");

    RawRecord rec{};
    if (!parse_double(cells[i_time], rec.test_time) || rec.test_time < 0.0)
      row_error(row, "unparseable " + columns.test_time);
    double cyc;
    if (!parse_double(cells[i_cycle], cyc))
      row_error(row, "unparseable " + columns.cycle_index);
    rec.cycle_index = std::lround(cyc);
    if (!parse_double(cells[i_curr], rec.current))
      row_error(row, "unparseable " + columns.current);
    if (!parse_double(cells[i_volt], rec.voltage) || rec.voltage <= 0.0)
      row_error(row, "unparseable " + columns.voltage);
    if (i_temp && *i_temp < cells.size()) {
      double temp;
      if (parse_double(cells[*i_temp], temp)) rec.cell_temperature = temp;
    }
    records.push_back(rec);
  }
  return records;
}

std::vector<CycleRun> segment_cycles(std::span<const RawRecord> records) {
  std::vector<CycleRun> runs;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= records.size(); ++i) {
    if (i == records.size() ||
        records[i].cycle_index != records[start].cycle_index) {
      runs.push_back({records[start].cycle_index, start, i});
      start = i;
    }
  }
  return runs;
}

void DischargeSegment::validate() const {
  if (time.size() != current.size() || time.size() != voltage.size())
    throw DataError("segment: series length mismatch");
  if (time.size() < kMinSegmentSamples)
    throw DataError("segment: fewer than 16 samples");
  if (time.front() != 0.0) throw DataError("segment: time must start at 0");
  for (std::size_t k = 0; k < time.size(); ++k) {
    if (k > 0 && time[k] <= time[k - 1])
      throw DataError("segment: time not strictly increasing");
    if (!std::isfinite(current[k]) || current[k] < 0.0)
      throw DataError("segment: current must be >= 0 (discharge convention)");
    if (!std::isfinite(voltage[k]) || voltage[k] <= 0.0)
      throw DataError("segment: voltage must be positive");
  }
  if (!(soc_start >= 0.0 && soc_start <= 1.0))
    throw DataError("segment: soc_start outside [0, 1]");
  if (!(capacity_ah > 0.0)) throw DataError("segment: capacity must be positive");
}

DischargeSegment extract_discharge_window(std::span<const RawRecord> cycle,
                                          const WindowPolicy& policy,
                                          const CellSpec& cell,
                                          std::string cell_id,
                                          long cycle_index) {
  cell.validate();
  const double sign = policy.invert_current ? -1.0 : 1.0;

  std::size_t onset = cycle.size();
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    if (sign * cycle[i].current >= policy.onset_threshold_a) {
      onset = i;
      break;
    }
  }
  if (onset == cycle.size())
    throw DataError("no-discharge-found: no sample at or above the onset threshold");

  // coulomb-count from the cycle start up to the onset sample; each interval
  // carries the current that was flowing at its start, so the window's own
  // first interval is not double-counted
  double soc = cell.soc_init;
  for (std::size_t i = 1; i <= onset; ++i) {
    const double dt = cycle[i].test_time - cycle[i - 1].test_time;
    soc = coulomb_count(soc, sign * cycle[i - 1].current, std::max(dt, 0.0),
                        cell.capacity_ah);
  }

  const double t0 = cycle[onset].test_time;
  DischargeSegment seg;
  seg.cell_id = std::move(cell_id);
  seg.cycle_index = cycle_index;
  seg.soc_start = soc;
  seg.capacity_ah = cell.capacity_ah;
  for (std::size_t i = onset; i < cycle.size(); ++i) {
    const double t = cycle[i].test_time - t0;
    if (t > policy.window_s) break;
    seg.time.push_back(t);
    seg.current.push_back(std::max(sign * cycle[i].current, 0.0));
    seg.voltage.push_back(cycle[i].voltage);
  }
  if (seg.time.size() < kMinSegmentSamples)
    throw DataError("segment shorter than 16 samples");
  seg.validate();
  return seg;
}

DischargeSegment resample_uniform(const DischargeSegment& segment, double dt) {
  segment.validate();
  if (!(dt > 0.0)) throw DataError("resample: dt must be positive");
  const double span = segment.time.back();
  if (dt > span) throw DataError("resample: dt larger than segment span");

  std::vector<double> grid;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t > span * (1.0 + 1e-12)) break;
    grid.push_back(std::min(t, span));
  }
  if (grid.back() < span) grid.push_back(span);

  auto interp = [&](const std::vector<double>& y, double t) {
    const auto& x = segment.time;
    auto it = std::lower_bound(x.begin(), x.end(), t);
    if (it != x.end() && *it == t) return y[static_cast<std::size_t>(it - x.begin())];
    const std::size_t hi = static_cast<std::size_t>(it - x.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + w * (y[hi] - y[lo]);
  };

  DischargeSegment out;
  out.cell_id = segment.cell_id;
  out.cycle_index = segment.cycle_index;
  out.soc_start = segment.soc_start;
  out.capacity_ah = segment.capacity_ah;
  out.time = grid;
  out.current.reserve(grid.size());
  out.voltage.reserve(grid.size());
  for (double t : grid) {
    out.current.push_back(std::max(interp(segment.current, t), 0.0));
    out.voltage.push_back(interp(segment.voltage, t));
  }
  out.validate();
  return out;
}

}  // namespace batfit
