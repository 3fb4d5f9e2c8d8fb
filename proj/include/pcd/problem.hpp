#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcd/partition.hpp"

namespace pcd {

// Smooth part f_i(x_{N_i}) owned by node i. The argument `local` is the
// neighborhood vector x_{N_i}: the blocks of N_i stacked in ascending node
// order, so "position" k addresses the k-th neighbor in that order.
class SmoothLocalTerm {
 public:
  virtual ~SmoothLocalTerm() = default;

  virtual const PartitionLayout& local_layout() const noexcept = 0;
  virtual double value(const Eigen::Ref<const Vector>& local) const = 0;
  virtual Vector partial_gradient(const Eigen::Ref<const Vector>& local,
                                  std::size_t position) const = 0;
  // Block-coordinate Lipschitz constant of the partial gradient at `position`
  // under perturbations of that same block.
  virtual double lipschitz(std::size_t position) const = 0;
  // Hessian block d^2 f / dx_k dx_k when it does not depend on x.
  virtual std::optional<Matrix> constant_hessian_block(std::size_t /*position*/) const {
    return std::nullopt;
  }
};

// f(x) = x^T H x + r^T x with H symmetric, possibly indefinite.
class IndefiniteQpTerm final : public SmoothLocalTerm {
 public:
  IndefiniteQpTerm(PartitionLayout local_layout, Matrix hessian_half, Vector linear);

  const PartitionLayout& local_layout() const noexcept override { return layout_; }
  double value(const Eigen::Ref<const Vector>& local) const override;
  Vector partial_gradient(const Eigen::Ref<const Vector>& local,
                          std::size_t position) const override;
  double lipschitz(std::size_t position) const override { return lipschitz_.at(position); }
  std::optional<Matrix> constant_hessian_block(std::size_t position) const override;

  const Matrix& H() const noexcept { return H_; }
  const Vector& r() const noexcept { return r_; }

 private:
  PartitionLayout layout_;
  Matrix H_;
  Vector r_;
  std::vector<double> lipschitz_;
};

// g_i: proper, closed, convex, possibly extended-valued.
class ConvexRegularizer {
 public:
  virtual ~ConvexRegularizer() = default;

  // +infinity outside the domain.
  virtual double value(const Eigen::Ref<const Vector>& xi) const = 0;
  // argmin_z g(z) + 1/(2 step) ||z - v||^2.
  virtual Vector prox(const Eigen::Ref<const Vector>& v, double step) const = 0;
  // True when the prox acts coordinatewise and does not depend on the step,
  // so the weighted prox with any diagonal metric equals prox(v, 1).
  virtual bool step_invariant_separable() const noexcept { return false; }
};

class ZeroRegularizer final : public ConvexRegularizer {
 public:
  double value(const Eigen::Ref<const Vector>&) const override { return 0.0; }
  Vector prox(const Eigen::Ref<const Vector>& v, double) const override { return v; }
  bool step_invariant_separable() const noexcept override { return true; }
};

// Indicator of the box [lower, upper] (componentwise).
class BoxIndicator final : public ConvexRegularizer {
 public:
  BoxIndicator(Vector lower, Vector upper);
  BoxIndicator(double lower, double upper, std::size_t dim = 1);

  double value(const Eigen::Ref<const Vector>& xi) const override;
  Vector prox(const Eigen::Ref<const Vector>& v, double) const override;
  bool step_invariant_separable() const noexcept override { return true; }

  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  bool contains(const Eigen::Ref<const Vector>& xi) const;

 private:
  Vector lower_;
  Vector upper_;
};

struct InstanceProvenance {
  std::string generator;
  std::uint64_t seed = 0;
  double shift = 0.0;
};

// V(x) = sum_i f_i(x_{N_i}) + g_i(x_i). Immutable after construction.
class PartitionedProblem {
 public:
  PartitionedProblem(PartitionLayout layout, CommGraph graph,
                     std::vector<std::shared_ptr<const SmoothLocalTerm>> terms,
                     std::vector<std::shared_ptr<const ConvexRegularizer>> regularizers,
                     std::optional<InstanceProvenance> provenance = std::nullopt);

  const PartitionLayout& layout() const noexcept { return layout_; }
  const CommGraph& graph() const noexcept { return graph_; }
  std::size_t num_blocks() const noexcept { return layout_.num_blocks(); }
  const SmoothLocalTerm& term(std::size_t node) const { return *terms_.at(node); }
  const ConvexRegularizer& regularizer(std::size_t node) const { return *regularizers_.at(node); }
  const std::optional<InstanceProvenance>& provenance() const noexcept { return provenance_; }

  // x_{N_i} gathered from a full vector.
  Vector gather(const Eigen::Ref<const Vector>& x, std::size_t node) const;
  // L_i = sum over terms f_j with i in N_j of their constant w.r.t. block i.
  double block_lipschitz(std::size_t block) const { return block_lipschitz_.at(block); }

 private:
  PartitionLayout layout_;
  CommGraph graph_;
  std::vector<std::shared_ptr<const SmoothLocalTerm>> terms_;
  std::vector<std::shared_ptr<const ConvexRegularizer>> regularizers_;
  std::optional<InstanceProvenance> provenance_;
  std::vector<double> block_lipschitz_;
};

// Sums partial-gradient contributions in the given order. Every path that
// assembles grad_{x_i} f must use this so results agree bit for bit.
Vector accumulate_gradient(std::span<const Vector> contributions, std::size_t dim);

// Smooth part f(x) only.
double smooth_value(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x);
// Extended-real V(x); +infinity iff some g_i(x_i) is +infinity.
double aggregate_value(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x);
// i-th block of grad f(x) = sum_{j in N_i} grad_{x_i} f_j(x_{N_j}).
Vector partial_grad_f(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x,
                      std::size_t block);
double block_lipschitz(const PartitionedProblem& problem, std::size_t block);
// sum_{j in N_i} d^2 f_j / dx_i^2 when every contributing term has a constant
// Hessian; nullopt otherwise.
std::optional<Matrix> constant_block_hessian(const PartitionedProblem& problem,
                                             std::size_t block);

struct Interval {
  double lower;
  double upper;
};

struct QpInstanceOptions {
  double shift = 2.0;          // H_i = (A^T A + I) - shift * I
  double matrix_entry_bound = 1.0;  // A entries uniform in [-b, b]
  double linear_entry_bound = 10.0; // r entries uniform in [-b, b]
};

// Non-convex box-constrained QP over scalar blocks. One bound per node, or a
// single bound shared by all nodes. Deterministic in `seed`.
PartitionedProblem generate_indefinite_qp(const CommGraph& graph, std::uint64_t seed,
                                           std::span<const Interval> bounds,
                                           const QpInstanceOptions& options = {});
PartitionedProblem generate_indefinite_qp(const CommGraph& graph, std::uint64_t seed,
                                           Interval bounds,
                                           const QpInstanceOptions& options = {});

}  // namespace pcd
