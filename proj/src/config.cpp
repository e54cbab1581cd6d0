#include "hiersim/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "hiersim/generators.hpp"

namespace hiersim {

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return j;
}

double require_number(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ValidationError("missing field " + path + "." + key);
  if (!j.at(key).is_number())
    throw ValidationError("field " + path + "." + key + " must be a number");
  return j.at(key).get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

std::vector<int> int_list(const json& j) {
  std::vector<int> out;
  for (const auto& v : j) out.push_back(v.get<int>());
  return out;
}

ModelShape model_from_json(const json& j, const std::string& path) {
  int layers = static_cast<int>(require_number(j, "layers", path));
  long long fwd = static_cast<long long>(require_number(j, "fwd_gflops", path) * 1e9);
  long long param = bytes_from_mb(require_number(j, "param_mb", path));
  long long act = bytes_from_mb(require_number(j, "act_mb", path));
  long long bwd = j.contains("bwd_gflops")
                      ? static_cast<long long>(j.at("bwd_gflops").get<double>() * 1e9)
                      : -1;
  ModelShape m = ModelShape::uniform(layers, fwd, param, act, bwd);
  m.minibatch = static_cast<int>(number_or(j, "minibatch", 1));
  m.validate();
  return m;
}

TraceFile trace_from_json(const json& j, const TopologySpec& topo, const std::string& base_dir) {
  if (j.contains("file")) {
    std::filesystem::path p = j.at("file").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    return read_trace_file(p.string());
  }
  if (j.contains("microbench")) {
    const json& g = j.at("microbench");
    CollectiveKind kind = collective_from_name(g.at("kind").get<std::string>());
    long long bytes = bytes_from_mb(require_number(g, "mb", "trace.microbench"));
    std::vector<int> scope = g.contains("scope") ? int_list(g.at("scope")) : std::vector<int>{};
    return gen_microbench(kind, bytes, topo, scope);
  }
  if (j.contains("dp")) {
    const json& g = j.at("dp");
    return gen_dp_trace(model_from_json(g, "trace.dp"), topo, int_list(g.at("scope")));
  }
  if (j.contains("mp")) {
    const json& g = j.at("mp");
    return gen_mp_trace(model_from_json(g, "trace.mp"), topo, int_list(g.at("scope")));
  }
  if (j.contains("hybrid")) {
    const json& g = j.at("hybrid");
    return gen_hybrid_trace(model_from_json(g, "trace.hybrid"), topo,
                            int_list(g.at("mp_scope")), int_list(g.at("dp_scope")));
  }
  if (j.contains("pipeline")) {
    const json& g = j.at("pipeline");
    return gen_pipeline_trace(model_from_json(g, "trace.pipeline"), topo,
                              static_cast<int>(require_number(g, "stages", "trace.pipeline")),
                              static_cast<int>(
                                  require_number(g, "microbatches", "trace.pipeline")));
  }
  if (j.contains("memloop")) {
    const json& g = j.at("memloop");
    return gen_memory_loop(bytes_from_mb(require_number(g, "mb", "trace.memloop")),
                           static_cast<int>(number_or(g, "iterations", 1)),
                           static_cast<long long>(number_or(g, "compute_gflops", 0) * 1e9),
                           g.contains("in_switch") && g.at("in_switch").get<bool>(), topo);
  }
  throw ValidationError("trace: expected one of file/microbench/dp/mp/hybrid/pipeline/memloop");
}

}  // namespace

long long bytes_from_mb(double mb) {
  return static_cast<long long>(std::llround(mb * (1 << 20)));
}

long long bw_from_gbps(double gbps) {
  return static_cast<long long>(std::llround(gbps * (1LL << 30)));
}

std::string us_string(TimeNs ns) {
  long long hundredths = (ns + 5) / 10;
  std::ostringstream os;
  os << hundredths / 100 << '.' << (hundredths % 100 < 10 ? "0" : "") << hundredths % 100;
  return os.str();
}

std::string mb_string(const Rational& bytes) {
  long long hundredths = (bytes * Rational(100, 1 << 20)).round();
  std::ostringstream os;
  os << hundredths / 100 << '.' << (hundredths % 100 < 10 ? "0" : "") << hundredths % 100;
  return os.str();
}

TopologySpec topology_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("topology must be an object");
  if (j.contains("dims")) {
    TopologySpec spec;
    spec.name = j.contains("name") ? j.at("name").get<std::string>() : "";
    int idx = 0;
    for (const auto& dj : j.at("dims")) {
      ++idx;
      const std::string path = "topology.dims[" + std::to_string(idx - 1) + "]";
      Dimension d;
      std::string kind = dj.contains("kind") ? dj.at("kind").get<std::string>() : "";
      if (kind == "Ring" || kind == "ring")
        d.kind = BlockKind::Ring;
      else if (kind == "FC" || kind == "FullyConnected" || kind == "fc")
        d.kind = BlockKind::FullyConnected;
      else if (kind == "Switch" || kind == "switch" || kind == "SW")
        d.kind = BlockKind::Switch;
      else
        throw ValidationError(path + ".kind: unknown block '" + kind + "'");
      d.size = static_cast<int>(require_number(dj, "size", path));
      d.bandwidth = bw_from_gbps(require_number(dj, "bandwidth_GBps", path));
      d.latency_ns = static_cast<long long>(number_or(dj, "latency_ns", 0));
      d.hops = dj.contains("hops") ? dj.at("hops").get<int>() : hop_count(d.kind);
      spec.dims.push_back(d);
    }
    if (spec.name.empty()) spec.name = format_topology(spec);
    spec.validate();
    return spec;
  }
  if (!j.contains("name")) throw ValidationError("missing field topology.dims");
  std::vector<long long> bw;
  for (const auto& v : j.at("bandwidth_GBps")) bw.push_back(bw_from_gbps(v.get<double>()));
  std::vector<long long> lat;
  if (j.contains("latency_ns"))
    for (const auto& v : j.at("latency_ns")) lat.push_back(v.get<long long>());
  return parse_topology(j.at("name").get<std::string>(), bw, lat);
}

MemoryPoolSpec pool_from_json(const nlohmann::json& j) {
  MemoryPoolSpec pool;
  std::string style = j.contains("style") ? j.at("style").get<std::string>() : "hierarchical";
  if (style == "hierarchical")
    pool.style = MemoryPoolSpec::Style::Hierarchical;
  else if (style == "per_gpu_channel" || style == "zero_infinity")
    pool.style = MemoryPoolSpec::Style::PerGpuChannel;
  else
    throw ValidationError("pool.style: unknown style '" + style + "'");
  pool.num_nodes = static_cast<int>(require_number(j, "num_nodes", "pool"));
  pool.gpus_per_node = static_cast<int>(require_number(j, "gpus_per_node", "pool"));
  pool.num_out_switches = static_cast<int>(number_or(j, "num_out_node_switches", 1));
  pool.num_remote_groups =
      static_cast<int>(require_number(j, "num_remote_memory_groups", "pool"));
  pool.chunk_size = bytes_from_mb(number_or(j, "chunk_size_MB", 1.0));
  pool.remote_group_bw = bw_from_gbps(require_number(j, "remote_mem_group_bw_GBps", "pool"));
  pool.in_node_fabric_bw = bw_from_gbps(number_or(j, "in_node_pooled_fabric_bw_GBps", 0));
  pool.gpu_side_out_fabric_bw = j.contains("gpu_side_out_fabric_bw_GBps")
                                    ? bw_from_gbps(j.at("gpu_side_out_fabric_bw_GBps").get<double>())
                                    : pool.in_node_fabric_bw;
  pool.mem_side_out_fabric_bw = j.contains("mem_side_out_fabric_bw_GBps")
                                    ? bw_from_gbps(j.at("mem_side_out_fabric_bw_GBps").get<double>())
                                    : pool.remote_group_bw;
  pool.access_latency_ns = static_cast<long long>(number_or(j, "access_latency_ns", 0));
  pool.validate();
  return pool;
}

NpuSpec npu_from_json(const nlohmann::json& j) {
  NpuSpec npu;
  npu.peak_flops = static_cast<long long>(require_number(j, "peak_tflops", "npu") * 1e12);
  if (j.contains("local_mem")) {
    const auto& m = j.at("local_mem");
    npu.local_mem.bandwidth = bw_from_gbps(require_number(m, "bandwidth_GBps", "npu.local_mem"));
    npu.local_mem.access_latency_ns =
        static_cast<long long>(number_or(m, "access_latency_ns", 0));
  } else {
    throw ValidationError("missing field npu.local_mem");
  }
  npu.validate();
  return npu;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::string& base_dir) {
  ScenarioConfig cfg;
  cfg.name = j.contains("name") ? j.at("name").get<std::string>() : "scenario";
  if (!j.contains("topology")) throw ValidationError("missing field topology.dims");
  cfg.topology = topology_from_json(j.at("topology"));
  if (j.contains("npu")) {
    cfg.npu = npu_from_json(j.at("npu"));
  } else {
    // Sane accelerator defaults for communication-only studies.
    cfg.npu.peak_flops = 234'000'000'000'000LL;
    cfg.npu.local_mem.bandwidth = bw_from_gbps(4096);
    cfg.npu.local_mem.access_latency_ns = 0;
  }
  if (j.contains("pool")) cfg.pool = pool_from_json(j.at("pool"));
  if (!j.contains("trace")) throw ValidationError("missing field trace");
  cfg.trace = trace_from_json(j.at("trace"), cfg.topology, base_dir);
  cfg.chunk_count = static_cast<int>(number_or(j, "chunks", 64));
  if (j.contains("scheduler")) cfg.scheduler = j.at("scheduler").get<std::string>();
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  json j = load_json_file(path);
  return scenario_from_json(j, std::filesystem::path(path).parent_path().string());
}

std::vector<std::string> validate_scenario_json(const nlohmann::json& j,
                                                const std::string& base_dir) {
  std::vector<std::string> errors;
  auto attempt = [&](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors.push_back(std::string(section) + ": " + e.what());
    }
  };
  attempt("topology", [&] {
    if (!j.contains("topology")) throw ValidationError("missing field topology.dims");
    topology_from_json(j.at("topology"));
  });
  attempt("npu", [&] {
    if (j.contains("npu")) npu_from_json(j.at("npu"));
  });
  attempt("pool", [&] {
    if (j.contains("pool")) pool_from_json(j.at("pool"));
  });
  attempt("scenario", [&] { scenario_from_json(j, base_dir); });
  // Deduplicate: the full-scenario pass repeats section errors.
  std::vector<std::string> out;
  for (const auto& e : errors) {
    bool dup = false;
    for (const auto& o : out) {
      auto tail = [](const std::string& s) { return s.substr(s.find(": ") + 2); };
      if (tail(o) == tail(e)) dup = true;
    }
    if (!dup) out.push_back(e);
  }
  return out;
}

std::string report_to_json(const RunReport& report, const std::string& name) {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["npus"] = report.npu_count;
  j["makespan_ns"] = report.makespan_ns;
  j["makespan_us"] = us_string(report.makespan_ns);
  j["breakdown_ns"] = {{"compute", report.aggregate.compute},
                       {"local_mem", report.aggregate.local_mem},
                       {"remote_mem", report.aggregate.remote_mem},
                       {"comm", report.aggregate.comm},
                       {"idle", report.aggregate.idle}};
  nlohmann::ordered_json per_npu = nlohmann::ordered_json::array();
  for (const auto& b : report.per_npu)
    per_npu.push_back({b.compute, b.local_mem, b.remote_mem, b.comm, b.idle});
  j["per_npu_breakdown_ns"] = std::move(per_npu);
  nlohmann::ordered_json traffic = nlohmann::ordered_json::array();
  for (std::size_t d = 0; d < report.dim_traffic_total.size(); ++d) {
    Rational mean = report.npu_count > 0
                        ? report.dim_traffic_total[d] / Rational(report.npu_count)
                        : Rational(0);
    traffic.push_back({{"dim", d + 1},
                       {"total_bytes", report.dim_traffic_total[d].to_string()},
                       {"per_npu_bytes", mean.to_string()},
                       {"per_npu_mb", mb_string(mean)}});
  }
  j["traffic"] = std::move(traffic);
  nlohmann::ordered_json colls = nlohmann::ordered_json::array();
  for (const auto& c : report.collectives)
    colls.push_back({{"kind", collective_name(c.kind)},
                     {"bytes", c.bytes},
                     {"tag", c.tag},
                     {"start_ns", c.start},
                     {"end_ns", c.end}});
  j["collectives"] = std::move(colls);
  return j.dump(2);
}

void write_report_json(const RunReport& report, const std::string& name,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << report_to_json(report, name) << '\n';
}

std::string render_report(const RunReport& report) {
  std::ostringstream os;
  os << "makespan: " << us_string(report.makespan_ns) << " us (" << report.makespan_ns
     << " ns)\n";
  os << "breakdown (mean per NPU, us):\n";
  auto mean = [&](TimeNs v) {
    return us_string(report.npu_count > 0 ? v / report.npu_count : 0);
  };
  os << "  compute           " << mean(report.aggregate.compute) << '\n';
  os << "  exposed local mem " << mean(report.aggregate.local_mem) << '\n';
  os << "  exposed remote mem" << ' ' << mean(report.aggregate.remote_mem) << '\n';
  os << "  exposed comm      " << mean(report.aggregate.comm) << '\n';
  os << "  exposed idle      " << mean(report.aggregate.idle) << '\n';
  if (!report.dim_traffic_total.empty()) {
    os << "traffic per NPU (MB):";
    for (std::size_t d = 0; d < report.dim_traffic_total.size(); ++d) {
      Rational m = report.npu_count > 0
                       ? report.dim_traffic_total[d] / Rational(report.npu_count)
                       : Rational(0);
      os << " dim" << d + 1 << "=" << mb_string(m);
    }
    os << '\n';
  }
  return os.str();
}

SweepResult run_sweep(const nlohmann::json& sweep, const std::string& base_dir, int jobs) {
  json base;
  if (sweep.contains("base"))
    base = sweep.at("base");
  else if (sweep.contains("base_file")) {
    std::filesystem::path p = sweep.at("base_file").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    base = load_json_file(p.string());
  } else {
    throw ValidationError("sweep: expected base or base_file");
  }
  if (!sweep.contains("axes") || sweep.at("axes").empty())
    throw ValidationError("sweep: axes must be non-empty");

  SweepResult result;
  std::vector<std::vector<double>> axis_values;
  for (const auto& axis : sweep.at("axes")) {
    result.axis_paths.push_back(axis.at("path").get<std::string>());
    axis_values.push_back(axis.at("values").get<std::vector<double>>());
    if (axis_values.back().empty()) throw ValidationError("sweep: empty axis value list");
  }

  std::size_t total = 1;
  for (const auto& vs : axis_values) total *= vs.size();

  std::vector<json::json_pointer> pointers;
  for (const auto& path : result.axis_paths) {
    std::string ptr = "/" + path;
    for (auto& c : ptr)
      if (c == '.') c = '/';
    pointers.emplace_back(ptr);
    if (!base.contains(pointers.back()))
      throw ValidationError("sweep: parameter path '" + path + "' not found in the base config");
  }

  std::vector<json> points(total);
  std::vector<std::vector<double>> coords(total);
  for (std::size_t p = 0; p < total; ++p) {
    json patched = base;
    std::size_t rem = p;
    // Row-major: the last axis varies fastest.
    for (std::size_t a = axis_values.size(); a-- > 0;) {
      double v = axis_values[a][rem % axis_values[a].size()];
      rem /= axis_values[a].size();
      patched[pointers[a]] = v;
      coords[p].insert(coords[p].begin(), v);
    }
    points[p] = std::move(patched);
  }

  result.points.resize(total);
  auto run_point = [&](std::size_t p) {
    ScenarioConfig cfg = scenario_from_json(points[p], base_dir);
    result.points[p] = SweepPoint{coords[p], run_simulation(cfg)};
  };
  if (jobs <= 1) {
    for (std::size_t p = 0; p < total; ++p) run_point(p);
  } else {
    std::vector<std::future<void>> futures;
    std::size_t next = 0;
    while (next < total) {
      futures.clear();
      for (int k = 0; k < jobs && next < total; ++k, ++next)
        futures.push_back(std::async(std::launch::async, run_point, next));
      for (auto& f : futures) f.get();
    }
  }
  return result;
}

std::string sweep_table(const SweepResult& result) {
  std::ostringstream os;
  for (const auto& p : result.axis_paths) os << p << '\t';
  os << "makespan_us\tcompute_us\tlocal_mem_us\tremote_mem_us\tcomm_us\tidle_us\n";
  for (const auto& point : result.points) {
    for (double v : point.axis_values) os << v << '\t';
    const RunReport& r = point.report;
    auto mean = [&](TimeNs v) { return us_string(r.npu_count > 0 ? v / r.npu_count : 0); };
    os << us_string(r.makespan_ns) << '\t' << mean(r.aggregate.compute) << '\t'
       << mean(r.aggregate.local_mem) << '\t' << mean(r.aggregate.remote_mem) << '\t'
       << mean(r.aggregate.comm) << '\t' << mean(r.aggregate.idle) << '\n';
  }
  return os.str();
}

}  // namespace hiersim
