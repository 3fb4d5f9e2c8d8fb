// Command-line front end: generate | run | compare | audit.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
// 3 audit failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcd/errors.hpp"
#include "pcd/harness.hpp"
#include "pcd/instance_io.hpp"

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNumericalFailure = 2;
constexpr int kAuditFailure = 3;

// Flags that mirror RunConfig fields. Set flags are merged over the config
// file / preset.
struct Overrides {
  std::string config_path;
  std::string preset;
  std::optional<std::string> mode, topology, edge_list, instance_file, strategy, x0, replay,
      out_dir, event_log;
  std::optional<std::size_t> nodes, max_iters;
  std::optional<double> p, lower, upper, shift, step_tol, rate;
  std::optional<std::uint64_t> graph_seed, data_seed, x0_seed, seed;
  std::vector<std::size_t> track_blocks;
  bool audit_every_awake = false;

  void attach(CLI::App& app) {
    app.add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--preset", preset, "Built-in settings (paper)")
        ->check(CLI::IsMember({"paper"}));
    app.add_option("--mode", mode, "async | centralized");
    app.add_option("--topology", topology, "erdos_renyi | path | complete");
    app.add_option("--nodes", nodes, "Number of nodes N");
    app.add_option("--p", p, "Erdos-Renyi edge probability");
    app.add_option("--graph-seed", graph_seed, "Graph generation seed");
    app.add_option("--edge-list", edge_list, "Edge-list file (overrides topology)");
    app.add_option("--instance", instance_file, "Instance JSON (overrides generation)");
    app.add_option("--lower", lower, "Box lower bound");
    app.add_option("--upper", upper, "Box upper bound");
    app.add_option("--shift", shift, "Identity shift making H_i indefinite");
    app.add_option("--data-seed", data_seed, "Instance data seed");
    app.add_option("--strategy", strategy,
                   "lipschitz | scaled_identity:alpha=A | second_order[:eps=E]");
    app.add_option("--x0", x0, "default | zeros | uniform");
    app.add_option("--x0-seed", x0_seed, "Seed for uniform x0");
    app.add_option("--max-iters", max_iters, "Iteration cap (default 1000 N)");
    app.add_option("--step-tol", step_tol, "Stop after N consecutive steps below this");
    app.add_option("--seed", seed, "Block schedule / simulator master seed");
    app.add_option("--rate", rate, "Common timer rate");
    app.add_option("--track-blocks", track_blocks, "Blocks written to components.csv");
    app.add_option("--replay", replay, "Centralized mode: trace.csv whose blocks are replayed");
    app.add_flag("--audit-every-awake", audit_every_awake, "Consistency audit after each awake");
    app.add_option("-o,--out-dir", out_dir, "Output directory");
    app.add_option("--event-log", event_log, "Async mode: write one line per event");
  }

  json document(bool need_mode) const {
    json doc = preset == "paper" ? pcd::benchmark_preset_json() : json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      json file;
      try {
        in >> file;
      } catch (const json::exception& e) {
        throw pcd::ConfigError("config '" + config_path + "' is not valid JSON: " + e.what());
      }
      doc.merge_patch(file);
    }
    json patch = json::object();
    auto set = [&](const char* section, const char* key, const auto& value) {
      if (!value) return;
      if (section) {
        patch[section][key] = *value;
      } else {
        patch[key] = *value;
      }
    };
    set(nullptr, "mode", mode);
    set("graph", "topology", topology);
    set("graph", "nodes", nodes);
    set("graph", "p", p);
    set("graph", "seed", graph_seed);
    set("graph", "edge_list", edge_list);
    set("instance", "file", instance_file);
    set("instance", "lower", lower);
    set("instance", "upper", upper);
    set("instance", "shift", shift);
    set("instance", "seed", data_seed);
    set(nullptr, "strategy", strategy);
    set("x0", "kind", x0);
    set("x0", "seed", x0_seed);
    set("stop", "max_iters", max_iters);
    set("stop", "step_tol", step_tol);
    set(nullptr, "seed", seed);
    set(nullptr, "rate", rate);
    set(nullptr, "replay", replay);
    set(nullptr, "output_dir", out_dir);
    set(nullptr, "event_log", event_log);
    if (!track_blocks.empty()) patch["track_blocks"] = track_blocks;
    if (audit_every_awake) patch["audit_every_awake"] = true;
    doc.merge_patch(patch);
    if (!need_mode && !doc.contains("mode")) doc["mode"] = "async";
    return doc;
  }

  pcd::RunConfig config(bool need_mode = true) const { return pcd::parse_config(document(need_mode)); }
};

void warn_dominance(const pcd::MetricsReport& report) {
  if (report.dominance_failures.empty()) return;
  std::cerr << "warning: Q_i is not >= L_i I on " << report.dominance_failures.size()
            << " block(s); the descent guarantee does not apply there\n";
}

void print_report(const pcd::MetricsReport& report) {
  std::printf("iterations:            %zu\n", report.trace.iterations());
  std::printf("initial value:         %.17g\n", report.trace.initial_value);
  std::printf("final value:           %.17g\n", report.final_value);
  std::printf("stationarity residual: %.6e\n", report.stationarity);
  std::printf("descent violations:    %zu\n", report.descent_violations.size());
}

int cmd_generate(const Overrides& o, const std::string& out_path, const std::string& edges_out) {
  const pcd::Experiment exp = pcd::build_experiment(o.config(false));
  pcd::save_instance(out_path, exp.problem);
  if (!edges_out.empty()) {
    std::ofstream edges(edges_out);
    if (!edges) throw pcd::ConfigError("cannot write '" + edges_out + "'");
    pcd::write_edge_list(edges, exp.problem.graph());
  }
  std::printf("wrote %s (%zu nodes, %zu edges)\n", out_path.c_str(), exp.problem.num_blocks(),
              exp.problem.graph().edges().size());
  return kOk;
}

int cmd_run(const Overrides& o, std::size_t replicates) {
  const pcd::RunConfig cfg = o.config();
  if (replicates > 1) {
    const auto reports = pcd::run_replicates(cfg, replicates);
    for (std::size_t k = 0; k < reports.size(); ++k) {
      std::printf("replicate %zu: final value %.17g, stationarity %.3e, violations %zu\n", k,
                  reports[k].final_value, reports[k].stationarity,
                  reports[k].descent_violations.size());
    }
    return kOk;
  }
  const auto report = pcd::run_experiment(cfg);
  warn_dominance(report);
  print_report(report);
  return kOk;
}

int cmd_compare(const Overrides& o, std::optional<double> tolerance) {
  const auto cmp = pcd::compare_modes(o.config(false));
  warn_dominance(cmp.async);
  std::printf("iterations:              %zu\n", cmp.async.trace.iterations());
  std::printf("max state deviation:     %.6e\n", cmp.equivalence.max_state_deviation);
  std::printf("max value deviation:     %.6e\n", cmp.equivalence.max_value_deviation);
  if (tolerance && cmp.equivalence.max_state_deviation > *tolerance) {
    std::fprintf(stderr, "state deviation exceeds tolerance %.3e\n", *tolerance);
    return kAuditFailure;
  }
  return kOk;
}

int cmd_audit(const Overrides& o, const std::string& trace_path, bool skip_consistency) {
  pcd::RunConfig cfg = o.config(false);
  const pcd::Experiment exp = pcd::build_experiment(cfg);
  int status = kOk;

  if (!skip_consistency) {
    pcd::Experiment audited = exp;
    audited.config.mode = pcd::RunMode::Async;
    audited.config.audit_every_awake = true;
    audited.config.output_dir.clear();
    audited.config.replay.clear();
    try {
      const auto report = pcd::run_experiment(audited);
      std::printf("consistency audit: passed after %zu awakes\n", report.trace.iterations());
    } catch (const pcd::AuditFailure& e) {
      std::fprintf(stderr, "consistency audit failed %s\n", e.what());
      status = kAuditFailure;
    }
  }

  if (!trace_path.empty()) {
    std::ifstream in(trace_path);
    if (!in) throw pcd::ConfigError("cannot open trace '" + trace_path + "'");
    const auto rows = pcd::read_trace_csv(in);
    const pcd::RunTrace trace = pcd::trace_from_rows(rows);
    for (const auto& rec : trace.records) {
      if (rec.block >= exp.problem.num_blocks()) {
        throw pcd::ConfigError("trace references block " + std::to_string(rec.block) +
                               " outside the configured problem");
      }
    }
    const auto violations = pcd::descent_monitor(trace, exp.problem);
    std::printf("descent monitor: %zu violation(s) over %zu iterations\n", violations.size(),
                trace.iterations());
    for (std::size_t k = 0; k < violations.size() && k < 10; ++k) {
      const auto& v = violations[k];
      std::fprintf(stderr, "  t=%zu block=%zu V %.17g -> %.17g, required decrease %.6e\n", v.t,
                   v.block, v.value_before, v.value_after, v.required_decrease);
    }
    if (!violations.empty()) status = kAuditFailure;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized partitioned coordinate descent: experiments and simulator"};
  app.require_subcommand(1);

  Overrides gen_o, run_o, cmp_o, audit_o;
  std::string instance_out, edges_out, trace_path;
  std::size_t replicates = 1;
  std::optional<double> tolerance;
  bool skip_consistency = false;

  auto* gen = app.add_subcommand("generate", "Write a problem instance file");
  gen_o.attach(*gen);
  gen->add_option("instance_out", instance_out, "Instance JSON to write")->required();
  gen->add_option("--edges-out", edges_out, "Also write the graph as an edge list");

  auto* run = app.add_subcommand("run", "Run an experiment and write trace outputs");
  run_o.attach(*run);
  run->add_option("--replicates", replicates, "Independent seeds run concurrently")
      ->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "Replay an async run centrally and compare states");
  cmp_o.attach(*cmp);
  cmp->add_option("--tolerance", tolerance, "Exit 3 when the state deviation exceeds this");

  auto* audit = app.add_subcommand("audit", "Consistency audit and descent checks");
  audit_o.attach(*audit);
  audit->add_option("--trace", trace_path, "Saved trace.csv to check against the descent lemma");
  audit->add_flag("--skip-consistency", skip_consistency, "Only check the saved trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_generate(gen_o, instance_out, edges_out);
    if (*run) return cmd_run(run_o, replicates);
    if (*cmp) return cmd_compare(cmp_o, tolerance);
    if (*audit) return cmd_audit(audit_o, trace_path, skip_consistency);
  } catch (const pcd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const pcd::AuditFailure& e) {
    std::cerr << "audit failure: " << e.what() << '\n';
    return kAuditFailure;
  } catch (const pcd::InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kOk;
}
