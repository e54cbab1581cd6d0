#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hiersim/engine.hpp"

namespace hiersim {

// Unit conventions used by every config surface and report:
// 1 MB = 2^20 bytes, 1 GB/s = 2^30 bytes/s, flops in TFLOPS = 1e12 flops/s.
long long bytes_from_mb(double mb);
long long bw_from_gbps(double gbps);

std::string us_string(TimeNs ns);             // microseconds, two decimals
std::string mb_string(const Rational& bytes);  // MB, two decimals

TopologySpec topology_from_json(const nlohmann::json& j);
MemoryPoolSpec pool_from_json(const nlohmann::json& j);
NpuSpec npu_from_json(const nlohmann::json& j);

// Builds the full scenario, materializing the trace (from file, relative to
// base_dir, or from an inline generator section).
ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::string& base_dir);
ScenarioConfig load_scenario_file(const std::string& path);

// Collects every validation problem instead of stopping at the first,
// prefixing each message with the offending field path.
std::vector<std::string> validate_scenario_json(const nlohmann::json& j,
                                                const std::string& base_dir);

std::string report_to_json(const RunReport& report, const std::string& name);
void write_report_json(const RunReport& report, const std::string& name,
                       const std::string& path);
std::string render_report(const RunReport& report);

struct SweepPoint {
  std::vector<double> axis_values;
  RunReport report;
};

struct SweepResult {
  std::vector<std::string> axis_paths;
  std::vector<SweepPoint> points;
};

// One deterministic run per cartesian point, rows ordered by the axes.
SweepResult run_sweep(const nlohmann::json& sweep, const std::string& base_dir, int jobs = 1);
std::string sweep_table(const SweepResult& result);

}  // namespace hiersim
