#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hiersim/config.hpp"
#include "hiersim/generators.hpp"

namespace {

using namespace hiersim;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDeadlock = 3;
constexpr int kExitInternal = 4;

std::vector<double> parse_csv_doubles(const std::string& s) {
  std::vector<double> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

std::vector<long long> parse_csv_ll(const std::string& s) {
  std::vector<long long> out;
  for (double v : parse_csv_doubles(s)) out.push_back(static_cast<long long>(v));
  return out;
}

std::vector<int> parse_csv_int(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_csv_doubles(s)) out.push_back(static_cast<int>(v));
  return out;
}

TopologySpec topology_from_flags(const std::string& topo, const std::string& bw,
                                 const std::string& latency) {
  std::vector<long long> bws;
  if (bw.empty()) {
    // Placeholder bandwidth for trace generation, where only the shape matters.
    TopologySpec probe = parse_topology(topo, std::vector<long long>(
                                                  std::count(topo.begin(), topo.end(), '_') + 1,
                                                  1LL << 30));
    return probe;
  }
  for (double v : parse_csv_doubles(bw)) bws.push_back(bw_from_gbps(v));
  std::vector<long long> lat;
  if (!latency.empty()) lat = parse_csv_ll(latency);
  return parse_topology(topo, bws, lat);
}

struct RunFlags {
  std::string config_path;
  std::string topology;
  std::string bw;
  std::string latency;
  std::string trace_path;
  std::string pool_path;
  std::string report_path;
  std::string event_log_path;
  int chunks = -1;
};

ScenarioConfig build_run_config(const RunFlags& flags) {
  nlohmann::json j;
  std::string base_dir;
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw ValidationError("cannot open '" + flags.config_path + "'");
    in >> j;
    base_dir = std::filesystem::path(flags.config_path).parent_path().string();
  }
  if (!flags.topology.empty()) {
    if (flags.bw.empty()) throw ValidationError("--topology requires --bw");
    nlohmann::json t;
    t["name"] = flags.topology;
    t["bandwidth_GBps"] = parse_csv_doubles(flags.bw);
    if (!flags.latency.empty()) t["latency_ns"] = parse_csv_ll(flags.latency);
    j["topology"] = t;
  }
  if (!flags.trace_path.empty())
    j["trace"] = {{"file", std::filesystem::absolute(flags.trace_path).string()}};
  if (!flags.pool_path.empty()) {
    std::ifstream in(flags.pool_path);
    if (!in) throw ValidationError("cannot open '" + flags.pool_path + "'");
    nlohmann::json p;
    in >> p;
    // Accept either a bare pool section or a document with a "pool" field.
    j["pool"] = p.contains("pool") ? p.at("pool") : p;
  }
  if (flags.chunks > 0) j["chunks"] = flags.chunks;
  return scenario_from_json(j, base_dir);
}

int cmd_run(const RunFlags& flags) {
  ScenarioConfig cfg = build_run_config(flags);

  std::ofstream event_log;
  SendLogSink sink;
  if (!flags.event_log_path.empty()) {
    event_log.open(flags.event_log_path);
    if (!event_log)
      throw ValidationError("cannot open '" + flags.event_log_path + "' for writing");
    sink = [&event_log](const SendLogEntry& e) {
      event_log << "t=" << e.time << " src=" << e.src << " dst=" << e.dst << " dim=" << e.dim
                << " bytes=" << e.bytes.to_string() << '\n';
    };
  }

  RunReport report = run_simulation(cfg, sink);
  std::cout << "scenario: " << cfg.name << '\n' << render_report(report);
  if (!flags.report_path.empty()) {
    write_report_json(report, cfg.name, flags.report_path);
    std::cout << "report written to " << flags.report_path << '\n';
  }
  return kExitOk;
}

int cmd_sweep(const std::string& spec_path, const std::string& output, int jobs) {
  std::ifstream in(spec_path);
  if (!in) throw ValidationError("cannot open '" + spec_path + "'");
  nlohmann::json spec;
  in >> spec;
  std::string base_dir = std::filesystem::path(spec_path).parent_path().string();

  // Report the grid size up front.
  std::size_t total = 1;
  for (const auto& axis : spec.at("axes")) total *= axis.at("values").size();
  std::cout << "sweep: " << total << " points\n";

  SweepResult result = run_sweep(spec, base_dir, jobs);
  std::string table = sweep_table(result);
  std::cout << table;
  std::string out_path = output;
  if (out_path.empty() && spec.contains("output")) out_path = spec.at("output");
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot open '" + out_path + "' for writing");
    out << table;
    std::cout << "table written to " << out_path << '\n';
  }
  return kExitOk;
}

void print_trace_summary(const TraceFile& trace) {
  std::vector<long long> per_npu(trace.npu_count, 0);
  for (const auto& n : trace.nodes) ++per_npu[n.npu];
  long long mn = trace.nodes.empty() ? 0 : per_npu[0], mx = 0;
  for (long long c : per_npu) {
    mn = std::min(mn, c);
    mx = std::max(mx, c);
  }
  std::cout << "nodes: " << trace.nodes.size() << " total across " << trace.npu_count
            << " NPUs (" << mn << ".." << mx << " per NPU)\n";
}

int cmd_validate(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ValidationError("cannot open '" + config_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("json parse error: ") + e.what());
  }
  auto errors =
      validate_scenario_json(j, std::filesystem::path(config_path).parent_path().string());
  if (errors.empty()) {
    std::cout << "PASS " << config_path << '\n';
    return kExitOk;
  }
  for (const auto& e : errors) std::cout << "FAIL " << e << '\n';
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator for distributed training over hierarchical networks "
               "and disaggregated memory"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Simulate a scenario and report the time breakdown");
  run->add_option("--config", run_flags.config_path, "Scenario config (json)");
  run->add_option("--topology", run_flags.topology, "Compact topology, e.g. Ring(4)_Switch(2)");
  run->add_option("--bw", run_flags.bw, "Per-dimension bandwidth (GB/s, comma separated)");
  run->add_option("--latency", run_flags.latency, "Per-dimension latency (ns, comma separated)");
  run->add_option("--chunks", run_flags.chunks, "Pipelining chunk count");
  run->add_option("--trace", run_flags.trace_path, "Trace file to replay");
  run->add_option("--pool", run_flags.pool_path, "Memory pool config (json)");
  run->add_option("--report", run_flags.report_path, "Write a json report here");
  run->add_option("--event-log", run_flags.event_log_path, "Write per-send records here");

  std::string sweep_spec, sweep_output;
  int sweep_jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("spec", sweep_spec, "Sweep spec (json)")->required();
  sweep->add_option("--output", sweep_output, "Write the result table here");
  sweep->add_option("--jobs", sweep_jobs, "Concurrent simulations");

  std::string gen_topology, gen_bw, gen_out = "trace.et";
  auto* gen = app.add_subcommand("gen-trace", "Generate an execution trace");
  gen->require_subcommand(1);
  gen->add_option("--topology", gen_topology, "Compact topology string")->required();
  gen->add_option("--bw", gen_bw, "Per-dimension bandwidth (GB/s); optional for generation");
  gen->add_option("-o,--out", gen_out, "Output trace path");

  struct ModelFlags {
    int layers = 1;
    double fwd_gflops = 0, bwd_gflops = -1, param_mb = 0, act_mb = 0;
    int minibatch = 1;
  };
  auto add_model_flags = [](CLI::App* cmd, ModelFlags& m) {
    cmd->add_option("--layers", m.layers, "Layer count");
    cmd->add_option("--fwd-gflops", m.fwd_gflops, "Forward gflops per layer");
    cmd->add_option("--bwd-gflops", m.bwd_gflops, "Backward gflops per layer (default 2x fwd)");
    cmd->add_option("--param-mb", m.param_mb, "Parameter MB per layer");
    cmd->add_option("--act-mb", m.act_mb, "Activation MB per layer");
    cmd->add_option("--minibatch", m.minibatch, "Minibatch descriptor");
  };
  auto model_of = [](const ModelFlags& m) {
    ModelShape shape = ModelShape::uniform(
        m.layers, static_cast<long long>(m.fwd_gflops * 1e9), bytes_from_mb(m.param_mb),
        bytes_from_mb(m.act_mb),
        m.bwd_gflops < 0 ? -1 : static_cast<long long>(m.bwd_gflops * 1e9));
    shape.minibatch = m.minibatch;
    return shape;
  };

  ModelFlags dp_model, mp_model, hy_model, pp_model;
  std::string dp_scope = "", mp_scope = "", hy_mp_scope = "", hy_dp_scope = "";
  auto* gen_dp = gen->add_subcommand("dp", "Data-parallel trace");
  add_model_flags(gen_dp, dp_model);
  gen_dp->add_option("--scope", dp_scope, "Gradient sync dimensions, e.g. 1,2");
  auto* gen_mp = gen->add_subcommand("mp", "Model-parallel trace");
  add_model_flags(gen_mp, mp_model);
  gen_mp->add_option("--scope", mp_scope, "Model-parallel dimensions");
  auto* gen_hy = gen->add_subcommand("hybrid", "Hybrid-parallel trace");
  add_model_flags(gen_hy, hy_model);
  gen_hy->add_option("--mp-scope", hy_mp_scope, "Model-parallel dimensions")->required();
  gen_hy->add_option("--dp-scope", hy_dp_scope, "Data-parallel dimensions")->required();
  int pp_stages = 1, pp_microbatches = 1;
  auto* gen_pp = gen->add_subcommand("pipeline", "Pipeline-parallel trace");
  add_model_flags(gen_pp, pp_model);
  gen_pp->add_option("--stages", pp_stages, "Pipeline stages")->required();
  gen_pp->add_option("--microbatches", pp_microbatches, "Microbatches per minibatch")
      ->required();
  std::string mb_kind = "allreduce", mb_scope = "";
  double mb_size = 0;
  auto* gen_mb = gen->add_subcommand("microbench", "Single-collective trace");
  gen_mb->add_option("--kind", mb_kind, "Collective kind");
  gen_mb->add_option("--mb", mb_size, "Payload per NPU (MB)")->required();
  gen_mb->add_option("--scope", mb_scope, "Scope dimensions (default: all)");

  std::string val_config;
  auto* validate = app.add_subcommand("validate", "Static checks without simulating");
  validate->add_option("config", val_config, "Scenario config (json)")->required();

  std::string plan_topology, plan_bw, plan_kind = "allreduce", plan_scope, plan_out;
  double plan_mb = 0;
  int plan_chunks = 1;
  auto* plan = app.add_subcommand("plan", "Export a collective phase schedule (debug)");
  plan->add_option("--topology", plan_topology)->required();
  plan->add_option("--bw", plan_bw)->required();
  plan->add_option("--kind", plan_kind);
  plan->add_option("--mb", plan_mb)->required();
  plan->add_option("--scope", plan_scope, "Scope dimensions (default: all)");
  plan->add_option("--chunks", plan_chunks);
  plan->add_option("-o,--out", plan_out, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);

    if (run->parsed()) return cmd_run(run_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_spec, sweep_output, sweep_jobs);
    if (gen->parsed()) {
      TopologySpec topo = topology_from_flags(gen_topology, gen_bw, "");
      TraceFile trace;
      if (gen_dp->parsed())
        trace = gen_dp_trace(model_of(dp_model), topo,
                             dp_scope.empty() ? std::vector<int>{} : parse_csv_int(dp_scope));
      else if (gen_mp->parsed())
        trace = gen_mp_trace(model_of(mp_model), topo,
                             mp_scope.empty() ? std::vector<int>{} : parse_csv_int(mp_scope));
      else if (gen_hy->parsed())
        trace = gen_hybrid_trace(model_of(hy_model), topo, parse_csv_int(hy_mp_scope),
                                 parse_csv_int(hy_dp_scope));
      else if (gen_pp->parsed())
        trace = gen_pipeline_trace(model_of(pp_model), topo, pp_stages, pp_microbatches);
      else
        trace = gen_microbench(collective_from_name(mb_kind), bytes_from_mb(mb_size), topo,
                               mb_scope.empty() ? std::vector<int>{} : parse_csv_int(mb_scope));
      write_trace(trace, gen_out);
      print_trace_summary(trace);
      std::cout << "trace written to " << gen_out << '\n';
      return kExitOk;
    }
    if (validate->parsed()) return cmd_validate(val_config);
    if (plan->parsed()) {
      TopologySpec topo = topology_from_flags(plan_topology, plan_bw, "");
      std::vector<int> scope;
      if (plan_scope.empty())
        for (int d = 1; d <= topo.dim_count(); ++d) scope.push_back(d);
      else
        scope = parse_csv_int(plan_scope);
      auto p = plan_collective(collective_from_name(plan_kind), Rational(bytes_from_mb(plan_mb)),
                               topo, scope, plan_chunks);
      if (plan_out.empty())
        std::cout << plan_to_json(p) << '\n';
      else {
        write_plan_json(p, plan_out);
        std::cout << "plan written to " << plan_out << '\n';
      }
      return kExitOk;
    }
    return kExitInternal;
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  } catch (const DeadlockError& e) {
    std::cerr << "deadlock: " << e.what() << '\n';
    for (const auto& p : e.parked()) std::cerr << "  " << p << '\n';
    return kExitDeadlock;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
