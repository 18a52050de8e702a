#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tcpnc/netsim.hpp"

namespace tcpnc {

enum class SweepAxis { none, loss, redundancy, window };

struct SweepSpec {
  SweepAxis axis = SweepAxis::none;
  std::vector<double> values;  // ignored when axis == none
  SimConfig base;              // base.seed is the base seed
  unsigned iterations = 4;
  bool compare = false;  // run tcp and tcpnc at every point
  unsigned jobs = 1;     // worker threads
};

struct RunRecord {
  std::string axis;   // "loss", "redundancy/tcpnc", "single", ...
  std::string value;  // formatted axis value, "-" for a single run
  unsigned iteration = 0;
  std::uint64_t seed = 0;
  SessionMetrics metrics;
};

struct PointSummary {
  std::string axis;
  std::string value;
  double mean_goodput_bps = 0.0;  // over completed iterations only
  unsigned completed = 0;
  unsigned iterations = 0;
};

struct SweepResult {
  std::vector<RunRecord> runs;         // sorted by (series, value index, iteration)
  std::vector<PointSummary> summaries;  // one per (series, value)
};

// Applies one axis value to a configuration.
SimConfig with_axis_value(SimConfig cfg, SweepAxis axis, double value);

// Executes every (series, value, iteration) session. Seeds are
// base.seed + iteration. Throws ConfigError before running anything if any
// resulting configuration is invalid.
SweepResult run_sweep(const SweepSpec& spec);

// Header plus per-iteration rows and, unless it is a single run, one
// aggregate row per point.
void write_csv(std::ostream& out, const SweepSpec& spec, const SweepResult& result);

// Command-line entry point. Returns 0 on success, 2 on usage errors and 1 on
// runtime errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tcpnc
