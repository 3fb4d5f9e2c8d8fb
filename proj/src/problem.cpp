#include "pcd/problem.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "pcd/errors.hpp"
#include "pcd/random.hpp"

namespace pcd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

double spectral_norm_symmetric(const Matrix& m) {
  if (m.size() == 1) return std::abs(m(0, 0));
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void check_full_length(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x) {
  if (static_cast<std::size_t>(x.size()) != problem.layout().total_dim()) {
    throw DimensionMismatch("vector length " + std::to_string(x.size()) +
                            " does not match problem dimension " +
                            std::to_string(problem.layout().total_dim()));
  }
}

}  // namespace

IndefiniteQpTerm::IndefiniteQpTerm(PartitionLayout local_layout, Matrix hessian_half,
                                   Vector linear)
    : layout_(std::move(local_layout)), H_(std::move(hessian_half)), r_(std::move(linear)) {
  const auto n = idx(layout_.total_dim());
  if (H_.rows() != n || H_.cols() != n || r_.size() != n) {
    throw DimensionMismatch("QP term data does not match its neighborhood dimension " +
                            std::to_string(n));
  }
  const double scale = std::max(1.0, H_.cwiseAbs().maxCoeff());
  if ((H_ - H_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("QP term matrix must be symmetric");
  }
  lipschitz_.reserve(layout_.num_blocks());
  for (std::size_t k = 0; k < layout_.num_blocks(); ++k) {
    const auto off = idx(layout_.offset(k));
    const auto dim = idx(layout_.dim(k));
    lipschitz_.push_back(2.0 * spectral_norm_symmetric(H_.block(off, off, dim, dim)));
  }
}

double IndefiniteQpTerm::value(const Eigen::Ref<const Vector>& local) const {
  return local.dot(H_ * local) + r_.dot(local);
}

Vector IndefiniteQpTerm::partial_gradient(const Eigen::Ref<const Vector>& local,
                                          std::size_t position) const {
  const auto off = idx(layout_.offset(position));
  const auto dim = idx(layout_.dim(position));
  return 2.0 * (H_.middleRows(off, dim) * local) + r_.segment(off, dim);
}

std::optional<Matrix> IndefiniteQpTerm::constant_hessian_block(std::size_t position) const {
  const auto off = idx(layout_.offset(position));
  const auto dim = idx(layout_.dim(position));
  return Matrix(2.0 * H_.block(off, off, dim, dim));
}

BoxIndicator::BoxIndicator(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw DimensionMismatch("box bounds must be non-empty and of equal length");
  }
  for (Eigen::Index k = 0; k < lower_.size(); ++k) {
    if (!(lower_[k] <= upper_[k])) {
      throw InvalidArgument("box lower bound exceeds upper bound at component " +
                            std::to_string(k));
    }
  }
}

BoxIndicator::BoxIndicator(double lower, double upper, std::size_t dim)
    : BoxIndicator(Vector::Constant(idx(dim), lower), Vector::Constant(idx(dim), upper)) {}

bool BoxIndicator::contains(const Eigen::Ref<const Vector>& xi) const {
  if (xi.size() != lower_.size()) throw DimensionMismatch("box dimension mismatch");
  for (Eigen::Index k = 0; k < xi.size(); ++k) {
    if (!(xi[k] >= lower_[k] && xi[k] <= upper_[k])) return false;
  }
  return true;
}

double BoxIndicator::value(const Eigen::Ref<const Vector>& xi) const {
  return contains(xi) ? 0.0 : kInf;
}

Vector BoxIndicator::prox(const Eigen::Ref<const Vector>& v, double) const {
  if (v.size() != lower_.size()) throw DimensionMismatch("box dimension mismatch");
  return v.cwiseMax(lower_).cwiseMin(upper_);
}

PartitionedProblem::PartitionedProblem(
    PartitionLayout layout, CommGraph graph,
    std::vector<std::shared_ptr<const SmoothLocalTerm>> terms,
    std::vector<std::shared_ptr<const ConvexRegularizer>> regularizers,
    std::optional<InstanceProvenance> provenance)
    : layout_(std::move(layout)),
      graph_(std::move(graph)),
      terms_(std::move(terms)),
      regularizers_(std::move(regularizers)),
      provenance_(std::move(provenance)) {
  const std::size_t n = layout_.num_blocks();
  if (graph_.num_nodes() != n || terms_.size() != n || regularizers_.size() != n) {
    throw DimensionMismatch("layout, graph, terms and regularizers disagree on node count");
  }
  if (!graph_.is_reflexive() || !graph_.is_symmetric()) {
    throw InvalidArgument("communication graph must be symmetric with self-edges");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!terms_[i] || !regularizers_[i]) {
      throw InvalidArgument("node " + std::to_string(i) + " is missing a term or regularizer");
    }
    const auto& support = graph_.neighbors(i);
    const auto& local = terms_[i]->local_layout();
    if (local.num_blocks() != support.size()) {
      throw DimensionMismatch("term " + std::to_string(i) + " support size " +
                              std::to_string(local.num_blocks()) + " != |N_i| = " +
                              std::to_string(support.size()));
    }
    for (std::size_t k = 0; k < support.size(); ++k) {
      if (local.dim(k) != layout_.dim(support[k])) {
        throw DimensionMismatch("term " + std::to_string(i) + " block " +
                                std::to_string(support[k]) + " has the wrong dimension");
      }
    }
  }
  block_lipschitz_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : graph_.neighbors(i)) {
      block_lipschitz_[i] += terms_[j]->lipschitz(graph_.position(j, i));
    }
  }
}

Vector PartitionedProblem::gather(const Eigen::Ref<const Vector>& x, std::size_t node) const {
  const auto& support = graph_.neighbors(node);
  Vector local(idx(terms_.at(node)->local_layout().total_dim()));
  Eigen::Index cursor = 0;
  for (std::size_t j : support) {
    const auto dim = idx(layout_.dim(j));
    local.segment(cursor, dim) = x.segment(idx(layout_.offset(j)), dim);
    cursor += dim;
  }
  return local;
}

Vector accumulate_gradient(std::span<const Vector> contributions, std::size_t dim) {
  Vector sum = Vector::Zero(idx(dim));
  for (const auto& c : contributions) sum += c;
  return sum;
}

double smooth_value(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x) {
  check_full_length(problem, x);
  double total = 0.0;
  for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
    total += problem.term(i).value(problem.gather(x, i));
  }
  return total;
}

double aggregate_value(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x) {
  check_full_length(problem, x);
  const auto& layout = problem.layout();
  double reg = 0.0;
  for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
    const double gi = problem.regularizer(i).value(
        x.segment(idx(layout.offset(i)), idx(layout.dim(i))));
    if (gi == kInf) return kInf;
    reg += gi;
  }
  return smooth_value(problem, x) + reg;
}

Vector partial_grad_f(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x,
                      std::size_t block) {
  check_full_length(problem, x);
  const auto& graph = problem.graph();
  const auto& contributors = graph.neighbors(block);
  std::vector<Vector> parts;
  parts.reserve(contributors.size());
  for (std::size_t j : contributors) {
    parts.push_back(problem.term(j).partial_gradient(problem.gather(x, j),
                                                     graph.position(j, block)));
  }
  return accumulate_gradient(parts, problem.layout().dim(block));
}

double block_lipschitz(const PartitionedProblem& problem, std::size_t block) {
  return problem.block_lipschitz(block);
}

std::optional<Matrix> constant_block_hessian(const PartitionedProblem& problem,
                                             std::size_t block) {
  const auto& graph = problem.graph();
  const auto dim = idx(problem.layout().dim(block));
  Matrix sum = Matrix::Zero(dim, dim);
  for (std::size_t j : graph.neighbors(block)) {
    auto h = problem.term(j).constant_hessian_block(graph.position(j, block));
    if (!h) return std::nullopt;
    sum += *h;
  }
  return sum;
}

PartitionedProblem generate_indefinite_qp(const CommGraph& graph, std::uint64_t seed,
                                           std::span<const Interval> bounds,
                                           const QpInstanceOptions& options) {
  const std::size_t n = graph.num_nodes();
  if (n == 0) throw InvalidArgument("instance needs at least one node");
  if (!(options.shift > 0.0)) {
    throw InvalidArgument("identity shift must be positive to make the instance non-convex");
  }
  if (bounds.size() != n && bounds.size() != 1) {
    throw DimensionMismatch("expected one bound per node or a single shared bound");
  }
  if (!graph.is_reflexive() || !graph.is_symmetric()) {
    throw InvalidArgument("communication graph must be symmetric with self-edges");
  }

  Rng rng(seed);
  const double a_bound = options.matrix_entry_bound;
  const double r_bound = options.linear_entry_bound;
  std::vector<std::shared_ptr<const SmoothLocalTerm>> terms;
  std::vector<std::shared_ptr<const ConvexRegularizer>> regs;
  terms.reserve(n);
  regs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto m = idx(graph.neighbors(i).size());
    Matrix a(m, m);
    for (Eigen::Index row = 0; row < m; ++row) {
      for (Eigen::Index col = 0; col < m; ++col) a(row, col) = uniform_in(rng, -a_bound, a_bound);
    }
    Vector r(m);
    for (Eigen::Index k = 0; k < m; ++k) r[k] = uniform_in(rng, -r_bound, r_bound);

    Matrix h = a.transpose() * a;
    h.diagonal().array() += 1.0 - options.shift;
    h = 0.5 * (h + h.transpose()).eval();
    terms.push_back(std::make_shared<IndefiniteQpTerm>(
        uniform_layout(static_cast<std::size_t>(m)), std::move(h), std::move(r)));

    const Interval& box = bounds.size() == 1 ? bounds[0] : bounds[i];
    if (!(box.lower < box.upper)) {
      throw InvalidArgument("bounds for node " + std::to_string(i) + " need lower < upper");
    }
    regs.push_back(std::make_shared<BoxIndicator>(box.lower, box.upper));
  }
  return PartitionedProblem(uniform_layout(n), graph, std::move(terms), std::move(regs),
                            InstanceProvenance{"indefinite-qp", seed, options.shift});
}

PartitionedProblem generate_indefinite_qp(const CommGraph& graph, std::uint64_t seed,
                                           Interval bounds, const QpInstanceOptions& options) {
  return generate_indefinite_qp(graph, seed, std::span<const Interval>(&bounds, 1), options);
}

}  // namespace pcd
