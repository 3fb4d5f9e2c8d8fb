#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcd/coordinate_descent.hpp"

namespace pcd {

enum class RunMode { Centralized, Async };

struct GraphSpec {
  std::string topology = "erdos_renyi";  // erdos_renyi | path | complete
  std::size_t nodes = 50;
  double p = 0.2;
  std::uint64_t seed = 1;
  std::string edge_list;  // overrides topology when set
};

struct InstanceSpec {
  std::string file;  // overrides generation when set
  double lower = -30.0;
  double upper = 20.0;
  double shift = 2.0;
  std::uint64_t seed = 1;
};

struct InitialPointSpec {
  // "default": zeros if 0 lies in every box, else box midpoints.
  std::string kind = "default";  // default | zeros | uniform
  std::uint64_t seed = 1;
};

struct RunConfig {
  RunMode mode = RunMode::Async;
  GraphSpec graph;
  InstanceSpec instance;
  WeightStrategy strategy{ScaledIdentity{0.01}};
  InitialPointSpec x0;
  // Unset max_iters resolves to 1000 * N once the node count is known.
  std::optional<std::size_t> max_iterations;
  double step_tolerance = 0.0;
  std::uint64_t seed = 1;  // block schedule / simulator master seed
  double rate = 1.0;
  std::vector<std::size_t> track_blocks;
  std::string replay;  // centralized mode: trace.csv whose block column is replayed
  bool audit_every_awake = false;
  std::string output_dir;
  std::string event_log;  // async mode: per-event protocol log
};

// Settings of the non-convex QP experiment: N = 50 Erdos-Renyi(0.2) graph,
// boxes [-30, 20], alpha = 0.01 scaled-identity weights, asynchronous mode.
nlohmann::json benchmark_preset_json();

// Validates and materializes defaults. Throws ConfigError; "mode" is the
// only required key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& config);

std::string to_string(RunMode mode);

}  // namespace pcd
