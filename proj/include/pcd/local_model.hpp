#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "pcd/problem.hpp"

namespace pcd {

// Q_i = L_i I (falls back to I when L_i is zero).
struct LipschitzIdentity {};
// Q_i = (1 / alpha) I.
struct ScaledIdentity {
  double alpha = 0.01;
};
// Q_i = grad^2_{x_i x_i} f + eps I. Without an explicit eps the shift is
// max(0, L_i - lambda_min(Hessian block)) + 1e-6, which forces Q_i >= L_i I.
struct SecondOrder {
  std::optional<double> epsilon;
};

// Choice of the weight matrix Q_i of the local model. All shipped variants
// produce state-independent weights (second-order weights require terms with
// constant Hessian blocks).
class WeightStrategy {
 public:
  using Variant = std::variant<LipschitzIdentity, ScaledIdentity, SecondOrder>;

  WeightStrategy() = default;
  WeightStrategy(Variant v) : variant_(v) {}  // NOLINT(google-explicit-constructor)
  template <class T>
    requires std::is_constructible_v<Variant, T> && (!std::is_same_v<std::decay_t<T>, Variant>)
  WeightStrategy(T v) : variant_(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  // "lipschitz", "scaled_identity:alpha=0.01", "second_order", "second_order:eps=0.5".
  static WeightStrategy parse(std::string_view text);
  std::string to_string() const;

  const Variant& variant() const noexcept { return variant_; }

  Matrix weight(const PartitionedProblem& problem, std::size_t block) const;

 private:
  Variant variant_{LipschitzIdentity{}};
};

struct ProxOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
};

// argmin_z g(z) + 1/2 ||z - v||^2_{W^{-1}}. Closed form for diagonal W with a
// step-invariant separable g (box, zero); otherwise a proximal-gradient loop.
// Throws NotPositiveDefinite when W is not SPD and ToleranceNotMet when the
// loop does not converge.
Vector weighted_prox(const Eigen::Ref<const Matrix>& W, const ConvexRegularizer& g,
                     const Eigen::Ref<const Vector>& v, const ProxOptions& options = {});

// true iff lambda_min(Q) >= L (relative tolerance 1e-12).
bool verify_weight_dominance(const Eigen::Ref<const Matrix>& Q, double lipschitz);

struct LocalSolution {
  Vector direction;
  // xbar + d exactly as the prox returned it. Updates assign this rather than
  // adding d, which could round a point on a bound to just outside it.
  Vector point;
  double model_decrease = 0.0;  // q_i(0) - q_i(d_i) >= 0
};

// q_i(s; xbar) = grad^T s + 1/2 ||s||_Q^2 + g_i(xbar_i + s).
class LocalModel {
 public:
  LocalModel(std::size_t block, Vector gradient, Matrix weight,
             const ConvexRegularizer& regularizer, Vector anchor);

  std::size_t block() const noexcept { return block_; }
  const Vector& gradient() const noexcept { return gradient_; }
  const Matrix& weight() const noexcept { return weight_; }
  const Vector& anchor() const noexcept { return anchor_; }

  double value(const Eigen::Ref<const Vector>& step) const;
  // d = prox_{Q^{-1}, g}(xbar - Q^{-1} grad) - xbar.
  LocalSolution solve(const ProxOptions& options = {}) const;

 private:
  std::size_t block_;
  Vector gradient_;
  Matrix weight_;
  const ConvexRegularizer* regularizer_;
  Vector anchor_;
};

LocalModel build_local_model(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x,
                             std::size_t block, const WeightStrategy& strategy);

LocalSolution descent_direction(const PartitionedProblem& problem,
                                const Eigen::Ref<const Vector>& x, std::size_t block,
                                const WeightStrategy& strategy, const ProxOptions& options = {});

// max_i ||d_i(x)||; zero exactly at points satisfying the first-order
// condition. Requires V(x) finite.
double stationarity_residual(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x,
                             const WeightStrategy& strategy, const ProxOptions& options = {});

}  // namespace pcd
