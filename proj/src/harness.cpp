#include "pcd/harness.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <istream>
#include <ostream>
#include <sstream>

#include "pcd/errors.hpp"
#include "pcd/instance_io.hpp"

namespace pcd {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw InvalidArgument("bad number '" + s + "' on trace line " + std::to_string(line));
  }
  return v;
}

std::size_t parse_index(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw InvalidArgument("bad index '" + s + "' on trace line " + std::to_string(line));
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> replay_blocks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open replay trace '" + path + "'");
  return trace_from_rows(read_trace_csv(in)).block_sequence();
}

}  // namespace

CommGraph build_graph(const GraphSpec& spec) {
  if (!spec.edge_list.empty()) {
    std::ifstream in(spec.edge_list);
    if (!in) throw ConfigError("cannot open edge list '" + spec.edge_list + "'");
    return read_edge_list(in);
  }
  if (spec.topology == "path") return path_graph(spec.nodes);
  if (spec.topology == "complete") return complete_graph(spec.nodes);
  return erdos_renyi_connected(spec.nodes, spec.p, spec.seed);
}

Vector initial_point(const PartitionedProblem& problem, const InitialPointSpec& spec) {
  const auto& layout = problem.layout();
  Vector x = Vector::Zero(static_cast<Eigen::Index>(layout.total_dim()));
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
    const auto off = static_cast<Eigen::Index>(layout.offset(i));
    const auto dim = static_cast<Eigen::Index>(layout.dim(i));
    const auto* box = dynamic_cast<const BoxIndicator*>(&problem.regularizer(i));
    if (spec.kind == "uniform") {
      if (!box) throw ConfigError("x0.kind = uniform needs box constraints on every block");
      for (Eigen::Index k = 0; k < dim; ++k) {
        x[off + k] = uniform_in(rng, box->lower()[k], box->upper()[k]);
      }
    } else if (spec.kind == "default" && box && !box->contains(Vector::Zero(dim))) {
      x.segment(off, dim) = 0.5 * (box->lower() + box->upper());
    }
  }
  if (!std::isfinite(aggregate_value(problem, x))) {
    throw ConfigError("initial point lies outside the feasible boxes");
  }
  return x;
}

Experiment build_experiment(const RunConfig& config) {
  try {
    std::optional<PartitionedProblem> problem;
    if (!config.instance.file.empty()) {
      problem.emplace(load_instance(config.instance.file));
    } else {
      QpInstanceOptions options;
      options.shift = config.instance.shift;
      problem.emplace(generate_indefinite_qp(build_graph(config.graph), config.instance.seed,
                                              Interval{config.instance.lower, config.instance.upper},
                                              options));
    }
    Experiment exp{config, std::move(*problem), Vector()};
    const std::size_t n = exp.problem.num_blocks();
    if (!exp.config.max_iterations) exp.config.max_iterations = 1000 * n;
    exp.config.graph.nodes = n;
    for (std::size_t b : exp.config.track_blocks) {
      if (b >= n) {
        throw ConfigError("tracked block " + std::to_string(b) + " does not exist (N = " +
                          std::to_string(n) + ")");
      }
    }
    exp.x0 = initial_point(exp.problem, exp.config.x0);
    return exp;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot build experiment: ") + e.what());
  }
}

MetricsReport run_experiment(const RunConfig& config) {
  return run_experiment(build_experiment(config));
}

MetricsReport run_experiment(const Experiment& exp) {
  const auto& cfg = exp.config;
  const auto& problem = exp.problem;
  const std::size_t n = problem.num_blocks();

  MetricsReport report;
  report.mode = cfg.mode;
  report.tracked_blocks = cfg.track_blocks;
  for (std::size_t i = 0; i < n; ++i) {
    if (!verify_weight_dominance(cfg.strategy.weight(problem, i), problem.block_lipschitz(i))) {
      report.dominance_failures.push_back(i);
    }
  }

  StopCriteria stop{*cfg.max_iterations, cfg.step_tolerance};
  if (cfg.mode == RunMode::Async) {
    SimOptions options;
    options.seed = cfg.seed;
    options.rate = cfg.rate;
    options.audit_every_awake = cfg.audit_every_awake;
    std::ofstream log;
    if (!cfg.event_log.empty()) {
      if (fs::path(cfg.event_log).has_parent_path()) {
        fs::create_directories(fs::path(cfg.event_log).parent_path());
      }
      log = open_output(cfg.event_log);
      options.event_log = &log;
    }
    report.trace = run_simulation(problem, exp.x0, cfg.strategy, options, stop);
  } else if (!cfg.replay.empty()) {
    auto blocks = replay_blocks(cfg.replay);
    stop.max_iterations = blocks.size();
    report.trace = run_cd(problem, exp.x0, BlockSchedule::replay(std::move(blocks)), cfg.strategy,
                          stop);
  } else {
    report.trace = run_cd(problem, exp.x0, BlockSchedule::uniform(n, cfg.seed), cfg.strategy, stop);
  }

  const auto& trace = report.trace;
  const std::size_t steps = trace.iterations();
  report.final_value = trace.value_at(steps);
  report.value_gap.reserve(steps + 1);
  report.normalized_iterations.reserve(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t) {
    report.value_gap.push_back(trace.value_at(t) - report.final_value);
    report.normalized_iterations.push_back(static_cast<double>(t) / static_cast<double>(n));
  }
  report.stationarity = stationarity_residual(problem, trace.final_state, cfg.strategy);
  report.descent_violations = descent_monitor(trace, problem);

  if (!cfg.output_dir.empty()) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    auto trace_out = open_output(dir / "trace.csv");
    write_trace_csv(trace_out, trace, report.value_gap);
    auto comp_out = open_output(dir / "components.csv");
    write_components_csv(comp_out, trace, problem.layout(), report.tracked_blocks);
    auto summary_out = open_output(dir / "summary.txt");
    write_summary(summary_out, exp, report);
  }
  return report;
}

std::vector<MetricsReport> run_replicates(const RunConfig& config, std::size_t count) {
  std::vector<std::future<MetricsReport>> jobs;
  jobs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    RunConfig rep = config;
    rep.instance.seed += k;
    rep.seed += k;
    if (!config.output_dir.empty()) {
      rep.output_dir = (fs::path(config.output_dir) / ("rep_" + std::to_string(k))).string();
    }
    jobs.push_back(std::async(std::launch::async, [rep] { return run_experiment(rep); }));
  }
  std::vector<MetricsReport> out;
  out.reserve(count);
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

ModeComparison compare_modes(const RunConfig& config) {
  RunConfig async_cfg = config;
  async_cfg.mode = RunMode::Async;
  async_cfg.replay.clear();
  const Experiment exp = build_experiment(async_cfg);
  ModeComparison out;
  out.async = run_experiment(exp);
  out.equivalence = trace_equivalence(exp.problem, exp.x0, out.async.trace, exp.config.strategy);
  if (!exp.config.output_dir.empty()) {
    auto csv = open_output(fs::path(exp.config.output_dir) / "compare.csv");
    write_comparison_csv(csv, out.equivalence);
  }
  return out;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace, std::span<const double> value_gap) {
  if (value_gap.size() != trace.iterations() + 1) {
    throw DimensionMismatch("value gap series does not match the trace length");
  }
  const bool timed = !trace.records.empty() && trace.records.front().sim_time.has_value();
  out << "t,block,step_norm,V,V_gap,sim_time\n";
  out << "0,,," << fmt(trace.initial_value) << ',' << fmt(value_gap[0]) << ','
      << (timed ? "0" : "") << '\n';
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& r = trace.records[k];
    out << r.t << ',' << r.block << ',' << fmt(r.step_norm) << ',' << fmt(r.value) << ','
        << fmt(value_gap[k + 1]) << ',';
    if (r.sim_time) out << fmt(*r.sim_time);
    out << '\n';
  }
}

void write_components_csv(std::ostream& out, const RunTrace& trace, const PartitionLayout& layout,
                          std::span<const std::size_t> blocks) {
  out << 't';
  for (std::size_t b : blocks) {
    const std::size_t dim = layout.dim(b);
    for (std::size_t k = 0; k < dim; ++k) {
      out << ",x" << b;
      if (dim > 1) out << '_' << k;
    }
  }
  out << '\n';
  Vector x = trace.initial_state;
  auto emit = [&](std::size_t t) {
    out << t;
    for (std::size_t b : blocks) {
      const auto off = static_cast<Eigen::Index>(layout.offset(b));
      for (std::size_t k = 0; k < layout.dim(b); ++k) {
        out << ',' << fmt(x[off + static_cast<Eigen::Index>(k)]);
      }
    }
    out << '\n';
  };
  emit(0);
  for (const auto& r : trace.records) {
    x.segment(static_cast<Eigen::Index>(layout.offset(r.block)), r.block_value.size()) =
        r.block_value;
    emit(r.t);
  }
}

void write_summary(std::ostream& out, const Experiment& exp, const MetricsReport& report) {
  const auto& cfg = exp.config;
  const auto& trace = report.trace;
  out << "mode: " << to_string(cfg.mode) << '\n';
  out << "nodes: " << exp.problem.num_blocks() << '\n';
  out << "dimension: " << exp.problem.layout().total_dim() << '\n';
  out << "edges: " << exp.problem.graph().edges().size() << '\n';
  out << "strategy: " << cfg.strategy.to_string() << '\n';
  out << "graph_seed: " << cfg.graph.seed << '\n';
  if (const auto& prov = exp.problem.provenance()) {
    out << "instance_generator: " << prov->generator << '\n';
    out << "instance_seed: " << prov->seed << '\n';
    out << "instance_shift: " << fmt(prov->shift) << '\n';
  }
  out << "schedule_seed: " << cfg.seed << '\n';
  out << "x0_kind: " << cfg.x0.kind << '\n';
  out << "x0_seed: " << cfg.x0.seed << '\n';
  out << "iterations: " << trace.iterations() << '\n';
  out << "normalized_iterations: "
      << fmt(report.normalized_iterations.empty() ? 0.0 : report.normalized_iterations.back())
      << '\n';
  if (!trace.records.empty() && trace.records.back().sim_time) {
    out << "final_sim_time: " << fmt(*trace.records.back().sim_time) << '\n';
  }
  out << "initial_value: " << fmt(trace.initial_value) << '\n';
  out << "final_value: " << fmt(report.final_value) << '\n';
  out << "value_gap_reference: final iterate (t = " << trace.iterations() << ")\n";
  out << "stationarity_residual: " << fmt(report.stationarity) << '\n';
  out << "descent_violations: " << report.descent_violations.size() << '\n';
  out << "dominance_warnings: " << report.dominance_failures.size();
  if (!report.dominance_failures.empty()) {
    out << " (blocks";
    for (std::size_t b : report.dominance_failures) out << ' ' << b;
    out << ')';
  }
  out << '\n';
  for (std::size_t b : report.tracked_blocks) {
    const Vector xb = extract_block(exp.problem.layout(), trace.final_state, b);
    out << "final_x" << b << ':';
    for (Eigen::Index k = 0; k < xb.size(); ++k) out << ' ' << fmt(xb[k]);
    out << '\n';
  }
  out << "config: " << config_to_json(cfg).dump() << '\n';
}

void write_comparison_csv(std::ostream& out, const EquivalenceReport& report) {
  out << "t,state_deviation,value_deviation\n";
  for (std::size_t t = 0; t < report.state_deviation.size(); ++t) {
    out << t << ',' << fmt(report.state_deviation[t]) << ',' << fmt(report.value_deviation[t])
        << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "t,block,step_norm,V,V_gap,sim_time") {
    throw InvalidArgument("trace file does not start with the expected header");
  }
  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6) {
      throw InvalidArgument("trace line " + std::to_string(line_no) + " needs 6 fields");
    }
    TraceRow row;
    row.t = parse_index(f[0], line_no);
    if (!f[1].empty()) row.block = parse_index(f[1], line_no);
    if (!f[2].empty()) row.step_norm = parse_double(f[2], line_no);
    row.value = parse_double(f[3], line_no);
    row.value_gap = parse_double(f[4], line_no);
    if (!f[5].empty()) row.sim_time = parse_double(f[5], line_no);
    rows.push_back(row);
  }
  return rows;
}

RunTrace trace_from_rows(std::span<const TraceRow> rows) {
  if (rows.empty() || rows.front().t != 0) {
    throw InvalidArgument("trace must start with the t = 0 row");
  }
  RunTrace trace;
  trace.initial_value = rows.front().value;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& row = rows[k];
    if (row.t != k || !row.block || !row.step_norm) {
      throw InvalidArgument("trace row " + std::to_string(k) + " is incomplete or out of order");
    }
    IterationRecord rec;
    rec.t = row.t;
    rec.block = *row.block;
    rec.step_norm = *row.step_norm;
    rec.value = row.value;
    rec.sim_time = row.sim_time;
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace pcd
