#pragma once

#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "batfit/ecm.hpp"

namespace batfit {

// One harmonized cycler log row (Battery Archive timeseries layout).
struct RawRecord {
  double test_time;  // seconds since test start
  long cycle_index;
  double current;  // ampere
  double voltage;  // volt
  std::optional<double> cell_temperature;  // celsius
};

// Binds the logical fields to CSV header names.
struct ColumnMap {
  std::string test_time = "Test_Time (s)";
  std::string cycle_index = "Cycle_Index";
  std::string current = "Current (A)";
  std::string voltage = "Voltage (V)";
  std::string temperature = "Cell_Temperature (C)";
};

class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<RawRecord> parse_timeseries(std::istream& in,
                                        const ColumnMap& columns = {});

// Contiguous maximal run of one cycle_index; [begin, end) into the records.
struct CycleRun {
  long cycle_index;
  std::size_t begin;
  std::size_t end;
};

std::vector<CycleRun> segment_cycles(std::span<const RawRecord> records);

// A limited discharge window ready for identification. Time is re-origined
// to 0 at the window start; current is positive during discharge.
struct DischargeSegment {
  std::string cell_id;
  long cycle_index = 0;
  std::vector<double> time;
  std::vector<double> current;
  std::vector<double> voltage;
  double soc_start = 1.0;
  double capacity_ah = 0.0;

  void validate() const;  // throws DataError
};

struct WindowPolicy {
  double onset_threshold_a = 0.05;
  double window_s = 300.0;
  bool invert_current = false;  // for archives with charge-positive sign
};

DischargeSegment extract_discharge_window(std::span<const RawRecord> cycle,
                                          const WindowPolicy& policy,
                                          const CellSpec& cell,
                                          std::string cell_id = "",
                                          long cycle_index = 0);

// Linear interpolation onto the grid 0, dt, 2dt, ...; endpoints preserved.
DischargeSegment resample_uniform(const DischargeSegment& segment, double dt);

}  // namespace batfit
