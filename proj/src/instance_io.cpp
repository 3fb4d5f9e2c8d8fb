#include "pcd/instance_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "pcd/errors.hpp"

namespace pcd {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "pcd-instance";
constexpr int kVersion = 1;

std::vector<double> to_list(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json regularizer_to_json(const ConvexRegularizer& reg) {
  if (const auto* box = dynamic_cast<const BoxIndicator*>(&reg)) {
    return {{"kind", "box"}, {"lower", to_list(box->lower())}, {"upper", to_list(box->upper())}};
  }
  if (dynamic_cast<const ZeroRegularizer*>(&reg)) return {{"kind", "zero"}};
  throw InvalidArgument("regularizer type is not serializable");
}

std::shared_ptr<const ConvexRegularizer> regularizer_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "box") {
    return std::make_shared<BoxIndicator>(to_vector(j.at("lower")), to_vector(j.at("upper")));
  }
  if (kind == "zero") return std::make_shared<ZeroRegularizer>();
  throw InvalidArgument("unknown regularizer kind '" + kind + "'");
}

}  // namespace

void write_instance(std::ostream& out, const PartitionedProblem& problem) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["block_dims"] = problem.layout().block_dims();
  json edges = json::array();
  for (const auto& [a, b] : problem.graph().edges()) edges.push_back({a, b});
  doc["edges"] = std::move(edges);
  if (const auto& prov = problem.provenance()) {
    doc["provenance"] = {{"generator", prov->generator}, {"seed", prov->seed}, {"shift", prov->shift}};
  }
  json nodes = json::array();
  for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
    const auto* qp = dynamic_cast<const IndefiniteQpTerm*>(&problem.term(i));
    if (!qp) throw InvalidArgument("only QP terms are serializable");
    const auto m = qp->H().rows();
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(m * m));
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) row_major.push_back(qp->H()(r, c));
    }
    nodes.push_back({{"dim", m},
                     {"H", std::move(row_major)},
                     {"r", to_list(qp->r())},
                     {"regularizer", regularizer_to_json(problem.regularizer(i))}});
  }
  doc["nodes"] = std::move(nodes);
  out << doc.dump(1) << '\n';
}

PartitionedProblem read_instance(std::istream& in) {
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("instance is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat || doc.at("version").get<int>() != kVersion) {
      throw InvalidArgument("unsupported instance format or version");
    }
    const auto dims = doc.at("block_dims").get<std::vector<std::size_t>>();
    PartitionLayout layout = build_layout(dims);
    const auto edges = doc.at("edges").get<std::vector<std::pair<std::size_t, std::size_t>>>();
    CommGraph graph(dims.size(), edges);

    const auto& nodes = doc.at("nodes");
    if (nodes.size() != dims.size()) throw DimensionMismatch("instance node count mismatch");
    std::vector<std::shared_ptr<const SmoothLocalTerm>> terms;
    std::vector<std::shared_ptr<const ConvexRegularizer>> regs;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& node = nodes[i];
      const auto m = node.at("dim").get<Eigen::Index>();
      const auto values = node.at("H").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(values.size()) != m * m) {
        throw DimensionMismatch("node " + std::to_string(i) + " H has the wrong size");
      }
      Matrix h(m, m);
      for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) h(r, c) = values[static_cast<std::size_t>(r * m + c)];
      }
      std::vector<std::size_t> local_dims;
      for (std::size_t j : graph.neighbors(i)) local_dims.push_back(dims[j]);
      terms.push_back(std::make_shared<IndefiniteQpTerm>(build_layout(local_dims), std::move(h),
                                                         to_vector(node.at("r"))));
      regs.push_back(regularizer_from_json(node.at("regularizer")));
    }
    std::optional<InstanceProvenance> provenance;
    if (doc.contains("provenance")) {
      const auto& p = doc["provenance"];
      provenance = InstanceProvenance{p.at("generator").get<std::string>(),
                                      p.at("seed").get<std::uint64_t>(), p.at("shift").get<double>()};
    }
    return PartitionedProblem(std::move(layout), std::move(graph), std::move(terms),
                              std::move(regs), std::move(provenance));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed instance document: ") + e.what());
  }
}

void save_instance(const std::filesystem::path& path, const PartitionedProblem& problem) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  write_instance(out, problem);
}

PartitionedProblem load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open instance file '" + path.string() + "'");
  return read_instance(in);
}

}  // namespace pcd
