#include "pcd/config.hpp"

#include <fstream>
#include <set>

#include "pcd/errors.hpp"

namespace pcd {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& into, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

}  // namespace

std::string to_string(RunMode mode) {
  return mode == RunMode::Async ? "async" : "centralized";
}

json benchmark_preset_json() {
  return {
      {"mode", "async"},
      {"graph", {{"topology", "erdos_renyi"}, {"nodes", 50}, {"p", 0.2}, {"seed", 1}}},
      {"instance", {{"lower", -30.0}, {"upper", 20.0}, {"shift", 2.0}, {"seed", 1}}},
      {"strategy", "scaled_identity:alpha=0.01"},
      {"x0", {{"kind", "default"}}},
      {"stop", {{"max_iters", 50000}, {"step_tol", 0.0}}},
      {"seed", 1},
      {"rate", 1.0},
      {"track_blocks", {13, 47}},
  };
}

RunConfig parse_config(const json& doc) {
  reject_unknown_keys(doc,
                      {"mode", "graph", "instance", "strategy", "x0", "stop", "seed", "rate",
                       "track_blocks", "replay", "audit_every_awake", "output_dir", "event_log"},
                      "config");
  RunConfig cfg;
  if (!doc.contains("mode")) throw ConfigError("config must set 'mode' (async | centralized)");
  std::string mode;
  read(doc, "mode", mode, "config");
  if (mode == "async") {
    cfg.mode = RunMode::Async;
  } else if (mode == "centralized") {
    cfg.mode = RunMode::Centralized;
  } else {
    throw ConfigError("mode must be 'async' or 'centralized', got '" + mode + "'");
  }

  if (doc.contains("graph")) {
    const auto& g = doc["graph"];
    reject_unknown_keys(g, {"topology", "nodes", "p", "seed", "edge_list"}, "graph");
    read(g, "topology", cfg.graph.topology, "graph");
    read(g, "nodes", cfg.graph.nodes, "graph");
    read(g, "p", cfg.graph.p, "graph");
    read(g, "seed", cfg.graph.seed, "graph");
    read(g, "edge_list", cfg.graph.edge_list, "graph");
  }
  if (cfg.graph.topology != "erdos_renyi" && cfg.graph.topology != "path" &&
      cfg.graph.topology != "complete") {
    throw ConfigError("graph.topology must be erdos_renyi, path or complete");
  }
  if (cfg.graph.edge_list.empty() && cfg.graph.nodes < 1) {
    throw ConfigError("graph.nodes must be at least 1");
  }
  if (cfg.graph.topology == "erdos_renyi" && !(cfg.graph.p > 0.0 && cfg.graph.p <= 1.0)) {
    throw ConfigError("graph.p must lie in (0, 1]");
  }

  if (doc.contains("instance")) {
    const auto& in = doc["instance"];
    reject_unknown_keys(in, {"file", "lower", "upper", "shift", "seed"}, "instance");
    read(in, "file", cfg.instance.file, "instance");
    read(in, "lower", cfg.instance.lower, "instance");
    read(in, "upper", cfg.instance.upper, "instance");
    read(in, "shift", cfg.instance.shift, "instance");
    read(in, "seed", cfg.instance.seed, "instance");
  }
  if (!(cfg.instance.lower < cfg.instance.upper)) {
    throw ConfigError("instance bounds need lower < upper");
  }
  if (!(cfg.instance.shift > 0.0)) throw ConfigError("instance.shift must be positive");

  if (doc.contains("strategy")) {
    std::string text;
    read(doc, "strategy", text, "config");
    cfg.strategy = WeightStrategy::parse(text);
  }

  if (doc.contains("x0")) {
    const auto& x0 = doc["x0"];
    reject_unknown_keys(x0, {"kind", "seed"}, "x0");
    read(x0, "kind", cfg.x0.kind, "x0");
    read(x0, "seed", cfg.x0.seed, "x0");
  }
  if (cfg.x0.kind != "default" && cfg.x0.kind != "zeros" && cfg.x0.kind != "uniform") {
    throw ConfigError("x0.kind must be default, zeros or uniform");
  }

  if (doc.contains("stop")) {
    const auto& stop = doc["stop"];
    reject_unknown_keys(stop, {"max_iters", "step_tol"}, "stop");
    if (stop.contains("max_iters")) {
      std::size_t iters = 0;
      read(stop, "max_iters", iters, "stop");
      cfg.max_iterations = iters;
    }
    read(stop, "step_tol", cfg.step_tolerance, "stop");
  }
  if (!(cfg.step_tolerance >= 0.0)) throw ConfigError("stop.step_tol must be non-negative");

  read(doc, "seed", cfg.seed, "config");
  read(doc, "rate", cfg.rate, "config");
  if (!(cfg.rate > 0.0)) throw ConfigError("rate must be positive");
  read(doc, "track_blocks", cfg.track_blocks, "config");
  read(doc, "replay", cfg.replay, "config");
  read(doc, "audit_every_awake", cfg.audit_every_awake, "config");
  read(doc, "output_dir", cfg.output_dir, "config");
  read(doc, "event_log", cfg.event_log, "config");
  if (!cfg.replay.empty() && cfg.mode != RunMode::Centralized) {
    throw ConfigError("replay is only meaningful in centralized mode");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json config_to_json(const RunConfig& cfg) {
  json doc = {
      {"mode", to_string(cfg.mode)},
      {"graph",
       {{"topology", cfg.graph.topology},
        {"nodes", cfg.graph.nodes},
        {"p", cfg.graph.p},
        {"seed", cfg.graph.seed},
        {"edge_list", cfg.graph.edge_list}}},
      {"instance",
       {{"file", cfg.instance.file},
        {"lower", cfg.instance.lower},
        {"upper", cfg.instance.upper},
        {"shift", cfg.instance.shift},
        {"seed", cfg.instance.seed}}},
      {"strategy", cfg.strategy.to_string()},
      {"x0", {{"kind", cfg.x0.kind}, {"seed", cfg.x0.seed}}},
      {"stop", {{"step_tol", cfg.step_tolerance}}},
      {"seed", cfg.seed},
      {"rate", cfg.rate},
      {"track_blocks", cfg.track_blocks},
      {"replay", cfg.replay},
      {"audit_every_awake", cfg.audit_every_awake},
      {"output_dir", cfg.output_dir},
      {"event_log", cfg.event_log},
  };
  if (cfg.max_iterations) doc["stop"]["max_iters"] = *cfg.max_iterations;
  return doc;
}

}  // namespace pcd
