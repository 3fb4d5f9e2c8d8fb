#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "pcd/async_sim.hpp"
#include "pcd/config.hpp"

namespace pcd {

struct Experiment {
  RunConfig config;  // max_iterations resolved
  PartitionedProblem problem;
  Vector x0;
};

CommGraph build_graph(const GraphSpec& spec);
Vector initial_point(const PartitionedProblem& problem, const InitialPointSpec& spec);
// Graph + instance + x0. Throws ConfigError for unusable settings.
Experiment build_experiment(const RunConfig& config);

struct MetricsReport {
  RunMode mode = RunMode::Async;
  RunTrace trace;
  std::vector<double> value_gap;              // V(x(t)) - V(x_final), t = 0..T
  std::vector<double> normalized_iterations;  // t / N, t = 0..T
  std::vector<std::size_t> tracked_blocks;
  double final_value = 0.0;
  double stationarity = 0.0;
  std::vector<DescentViolation> descent_violations;
  std::vector<std::size_t> dominance_failures;  // blocks where Q_i is not >= L_i I
};

// Runs the configured mode and computes metrics. Writes trace.csv,
// components.csv and summary.txt when config.output_dir is set.
MetricsReport run_experiment(const RunConfig& config);
MetricsReport run_experiment(const Experiment& experiment);

// Independent replicates (instance and schedule seeds offset by k) run
// concurrently; replicate k writes into <output_dir>/rep_<k>.
std::vector<MetricsReport> run_replicates(const RunConfig& config, std::size_t count);

struct ModeComparison {
  MetricsReport async;
  EquivalenceReport equivalence;
};

// Asynchronous run, then a centralized replay of its awake sequence.
ModeComparison compare_modes(const RunConfig& config);

// trace.csv: t,block,step_norm,V,V_gap,sim_time with 17 significant digits.
// Row t = 0 is the initial point and leaves block and step_norm empty.
void write_trace_csv(std::ostream& out, const RunTrace& trace, std::span<const double> value_gap);
void write_components_csv(std::ostream& out, const RunTrace& trace, const PartitionLayout& layout,
                          std::span<const std::size_t> blocks);
void write_summary(std::ostream& out, const Experiment& experiment, const MetricsReport& report);
void write_comparison_csv(std::ostream& out, const EquivalenceReport& report);

struct TraceRow {
  std::size_t t = 0;
  std::optional<std::size_t> block;
  std::optional<double> step_norm;
  double value = 0.0;
  double value_gap = 0.0;
  std::optional<double> sim_time;
};

std::vector<TraceRow> read_trace_csv(std::istream& in);
// RunTrace view of parsed rows (no per-block state), enough for
// descent_monitor and for replaying the block sequence.
RunTrace trace_from_rows(std::span<const TraceRow> rows);

}  // namespace pcd
