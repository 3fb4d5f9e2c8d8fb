#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pcd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Block decomposition x = [x_0; x_1; ...; x_{N-1}] of the stacked decision
// vector. Blocks are indexed from 0.
class PartitionLayout {
 public:
  PartitionLayout() = default;

  std::size_t num_blocks() const noexcept { return dims_.size(); }
  std::size_t total_dim() const noexcept { return total_; }
  std::size_t dim(std::size_t block) const { return dims_.at(block); }
  std::size_t offset(std::size_t block) const { return offsets_.at(block); }
  const std::vector<std::size_t>& block_dims() const noexcept { return dims_; }
  const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }

  bool operator==(const PartitionLayout&) const = default;

 private:
  friend PartitionLayout build_layout(std::span<const std::size_t> block_dims);
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

// Throws InvalidLayout on an empty list or a zero dimension.
PartitionLayout build_layout(std::span<const std::size_t> block_dims);
PartitionLayout build_layout(std::initializer_list<std::size_t> block_dims);
PartitionLayout uniform_layout(std::size_t num_blocks, std::size_t block_dim = 1);

// x_i = U_i^T x.
Vector extract_block(const PartitionLayout& layout, const Eigen::Ref<const Vector>& x,
                     std::size_t block);
// U_i v: a full-length vector that is zero outside block i.
Vector lift_block(const PartitionLayout& layout, const Eigen::Ref<const Vector>& v,
                  std::size_t block);

// Fixed undirected communication graph. Every node is its own neighbor and
// neighbor lists are sorted ascending.
class CommGraph {
 public:
  CommGraph() = default;

  // Builds from an undirected edge list; self-edges are added for every node
  // and duplicates are merged. Throws InvalidArgument on out-of-range ends.
  CommGraph(std::size_t num_nodes,
            std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t num_nodes() const noexcept { return adjacency_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t node) const {
    return adjacency_.at(node);
  }
  bool adjacent(std::size_t a, std::size_t b) const;
  // Position of `member` within neighbors(node), or npos.
  std::size_t position(std::size_t node, std::size_t member) const;

  // Edges (i, j) with i < j.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  bool is_connected() const;
  bool is_symmetric() const;
  bool is_reflexive() const;

  bool operator==(const CommGraph&) const = default;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
};

CommGraph complete_graph(std::size_t num_nodes);
CommGraph path_graph(std::size_t num_nodes);

// G(n, p) conditioned on connectivity: redraws with derived sub-seeds until
// the graph is connected, at most `max_attempts` times.
CommGraph erdos_renyi_connected(std::size_t num_nodes, double p, std::uint64_t seed,
                                std::size_t max_attempts = 1000);

// Edge-list text format: one "i j" line per undirected edge, 0-based, self
// edges omitted. Blank lines and lines starting with '#' are ignored on read.
void write_edge_list(std::ostream& out, const CommGraph& graph);
// When num_nodes is 0 the node count is inferred as max index + 1.
CommGraph read_edge_list(std::istream& in, std::size_t num_nodes = 0);

}  // namespace pcd
