#include "pcd/partition.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

#include "pcd/errors.hpp"
#include "pcd/random.hpp"

namespace pcd {

PartitionLayout build_layout(std::span<const std::size_t> block_dims) {
  if (block_dims.empty()) throw InvalidLayout("layout needs at least one block");
  PartitionLayout layout;
  layout.dims_.assign(block_dims.begin(), block_dims.end());
  layout.offsets_.reserve(block_dims.size());
  std::size_t running = 0;
  for (std::size_t i = 0; i < block_dims.size(); ++i) {
    if (block_dims[i] == 0) {
      throw InvalidLayout("block " + std::to_string(i) + " has dimension 0");
    }
    layout.offsets_.push_back(running);
    running += block_dims[i];
  }
  layout.total_ = running;
  return layout;
}

PartitionLayout build_layout(std::initializer_list<std::size_t> block_dims) {
  return build_layout(std::span<const std::size_t>(block_dims.begin(), block_dims.size()));
}

PartitionLayout uniform_layout(std::size_t num_blocks, std::size_t block_dim) {
  std::vector<std::size_t> dims(num_blocks, block_dim);
  return build_layout(dims);
}

namespace {

void check_block(const PartitionLayout& layout, std::size_t block) {
  if (block >= layout.num_blocks()) {
    throw InvalidArgument("block index " + std::to_string(block) + " out of range [0, " +
                          std::to_string(layout.num_blocks()) + ")");
  }
}

}  // namespace

Vector extract_block(const PartitionLayout& layout, const Eigen::Ref<const Vector>& x,
                     std::size_t block) {
  check_block(layout, block);
  if (static_cast<std::size_t>(x.size()) != layout.total_dim()) {
    throw DimensionMismatch("vector length " + std::to_string(x.size()) +
                            " does not match layout dimension " +
                            std::to_string(layout.total_dim()));
  }
  return x.segment(static_cast<Eigen::Index>(layout.offset(block)),
                   static_cast<Eigen::Index>(layout.dim(block)));
}

Vector lift_block(const PartitionLayout& layout, const Eigen::Ref<const Vector>& v,
                  std::size_t block) {
  check_block(layout, block);
  if (static_cast<std::size_t>(v.size()) != layout.dim(block)) {
    throw DimensionMismatch("block " + std::to_string(block) + " expects length " +
                            std::to_string(layout.dim(block)));
  }
  Vector out = Vector::Zero(static_cast<Eigen::Index>(layout.total_dim()));
  out.segment(static_cast<Eigen::Index>(layout.offset(block)), v.size()) = v;
  return out;
}

CommGraph::CommGraph(std::size_t num_nodes,
                     std::span<const std::pair<std::size_t, std::size_t>> edges)
    : adjacency_(num_nodes) {
  for (std::size_t i = 0; i < num_nodes; ++i) adjacency_[i].push_back(i);
  for (const auto& [a, b] : edges) {
    if (a >= num_nodes || b >= num_nodes) {
      throw InvalidArgument("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                            ") references a node outside [0, " +
                            std::to_string(num_nodes) + ")");
    }
    if (a == b) continue;
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& list : adjacency_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

bool CommGraph::adjacent(std::size_t a, std::size_t b) const {
  const auto& list = neighbors(a);
  return std::binary_search(list.begin(), list.end(), b);
}

std::size_t CommGraph::position(std::size_t node, std::size_t member) const {
  const auto& list = neighbors(node);
  auto it = std::lower_bound(list.begin(), list.end(), member);
  if (it == list.end() || *it != member) return npos;
  return static_cast<std::size_t>(it - list.begin());
}

std::vector<std::pair<std::size_t, std::size_t>> CommGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    for (std::size_t j : adjacency_[i]) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

bool CommGraph::is_connected() const {
  if (adjacency_.empty()) return true;
  std::vector<char> seen(adjacency_.size(), 0);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v : adjacency_[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == adjacency_.size();
}

bool CommGraph::is_symmetric() const {
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    for (std::size_t j : adjacency_[i]) {
      if (!adjacent(j, i)) return false;
    }
  }
  return true;
}

bool CommGraph::is_reflexive() const {
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    if (!adjacent(i, i)) return false;
  }
  return true;
}

CommGraph complete_graph(std::size_t num_nodes) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    for (std::size_t j = i + 1; j < num_nodes; ++j) edges.emplace_back(i, j);
  }
  return CommGraph(num_nodes, edges);
}

CommGraph path_graph(std::size_t num_nodes) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i + 1 < num_nodes; ++i) edges.emplace_back(i, i + 1);
  return CommGraph(num_nodes, edges);
}

CommGraph erdos_renyi_connected(std::size_t num_nodes, double p, std::uint64_t seed,
                                std::size_t max_attempts) {
  if (num_nodes < 2) throw InvalidArgument("Erdos-Renyi generation needs at least 2 nodes");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("edge probability must lie in [0, 1]");

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    edges.clear();
    for (std::size_t i = 0; i < num_nodes; ++i) {
      for (std::size_t j = i + 1; j < num_nodes; ++j) {
        if (uniform_open01(rng) < p) edges.emplace_back(i, j);
      }
    }
    CommGraph graph(num_nodes, edges);
    if (graph.is_connected()) return graph;
  }
  throw GraphGenerationError("no connected G(" + std::to_string(num_nodes) + ", " +
                             std::to_string(p) + ") graph after " +
                             std::to_string(max_attempts) + " attempts");
}

void write_edge_list(std::ostream& out, const CommGraph& graph) {
  for (const auto& [a, b] : graph.edges()) out << a << ' ' << b << '\n';
}

CommGraph read_edge_list(std::istream& in, std::size_t num_nodes) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long a = -1;
    long long b = -1;
    std::string extra;
    if (!(fields >> a >> b) || (fields >> extra) || a < 0 || b < 0) {
      throw InvalidArgument("malformed edge on line " + std::to_string(line_no) + ": '" +
                            line + "'");
    }
    edges.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    max_index = std::max({max_index, static_cast<std::size_t>(a), static_cast<std::size_t>(b)});
  }
  if (num_nodes == 0) num_nodes = edges.empty() ? 1 : max_index + 1;
  return CommGraph(num_nodes, edges);
}

}  // namespace pcd
