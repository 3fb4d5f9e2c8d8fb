#include "pcd/local_model.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pcd/errors.hpp"

namespace pcd {

namespace {

bool is_diagonal(const Eigen::Ref<const Matrix>& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r != c && m(r, c) != 0.0) return false;
    }
  }
  return true;
}

double min_eigenvalue(const Eigen::Ref<const Matrix>& m) {
  if (m.size() == 1) return m(0, 0);
  if (is_diagonal(m)) return m.diagonal().minCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double max_eigenvalue(const Eigen::Ref<const Matrix>& m) {
  if (is_diagonal(m)) return m.diagonal().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

void require_square(const Eigen::Ref<const Matrix>& m, Eigen::Index dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim) {
    throw DimensionMismatch(std::string(what) + " must be " + std::to_string(dim) + "x" +
                            std::to_string(dim));
  }
}

double parse_number(std::string_view text, std::string_view context) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError("bad number '" + std::string(text) + "' in weight strategy '" +
                      std::string(context) + "'");
  }
  return value;
}

}  // namespace

WeightStrategy WeightStrategy::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  std::string_view key;
  std::string_view number;
  if (colon != std::string_view::npos) {
    const std::string_view param = text.substr(colon + 1);
    const auto eq = param.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("weight strategy parameter must look like key=value: '" +
                        std::string(text) + "'");
    }
    key = param.substr(0, eq);
    number = param.substr(eq + 1);
  }

  if (name == "lipschitz") {
    if (!key.empty()) throw ConfigError("'lipschitz' takes no parameters");
    return WeightStrategy(LipschitzIdentity{});
  }
  if (name == "scaled_identity") {
    if (key.empty()) return WeightStrategy(ScaledIdentity{});
    if (key != "alpha") throw ConfigError("scaled_identity expects alpha=<value>");
    const double alpha = parse_number(number, text);
    if (!(alpha > 0.0)) throw ConfigError("scaled_identity alpha must be positive");
    return WeightStrategy(ScaledIdentity{alpha});
  }
  if (name == "second_order") {
    if (key.empty()) return WeightStrategy(SecondOrder{});
    if (key != "eps") throw ConfigError("second_order expects eps=<value>");
    return WeightStrategy(SecondOrder{parse_number(number, text)});
  }
  throw ConfigError("unknown weight strategy '" + std::string(text) + "'");
}

std::string WeightStrategy::to_string() const {
  std::ostringstream out;
  out.precision(17);
  std::visit(
      [&out](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LipschitzIdentity>) {
          out << "lipschitz";
        } else if constexpr (std::is_same_v<T, ScaledIdentity>) {
          out << "scaled_identity:alpha=" << s.alpha;
        } else {
          out << "second_order";
          if (s.epsilon) out << ":eps=" << *s.epsilon;
        }
      },
      variant_);
  return out.str();
}

Matrix WeightStrategy::weight(const PartitionedProblem& problem, std::size_t block) const {
  const auto dim = static_cast<Eigen::Index>(problem.layout().dim(block));
  const double lip = problem.block_lipschitz(block);
  return std::visit(
      [&](const auto& s) -> Matrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LipschitzIdentity>) {
          return (lip > 0.0 ? lip : 1.0) * Matrix::Identity(dim, dim);
        } else if constexpr (std::is_same_v<T, ScaledIdentity>) {
          return (1.0 / s.alpha) * Matrix::Identity(dim, dim);
        } else {
          auto hessian = constant_block_hessian(problem, block);
          if (!hessian) {
            throw InvalidArgument("second-order weights need terms with constant Hessian blocks");
          }
          const double eps =
              s.epsilon ? *s.epsilon : std::max(0.0, lip - min_eigenvalue(*hessian)) + 1e-6;
          Matrix q = *hessian;
          q.diagonal().array() += eps;
          return q;
        }
      },
      variant_);
}

Vector weighted_prox(const Eigen::Ref<const Matrix>& W, const ConvexRegularizer& g,
                     const Eigen::Ref<const Vector>& v, const ProxOptions& options) {
  require_square(W, v.size(), "prox weight");
  if (!W.allFinite()) throw NotPositiveDefinite("prox weight has non-finite entries");

  if (is_diagonal(W)) {
    if ((W.diagonal().array() <= 0.0).any()) {
      throw NotPositiveDefinite("diagonal prox weight has a non-positive entry");
    }
    if (g.step_invariant_separable()) return g.prox(v, 1.0);
  } else if ((W - W.transpose()).cwiseAbs().maxCoeff() >
             1e-12 * std::max(1.0, W.cwiseAbs().maxCoeff())) {
    throw NotPositiveDefinite("prox weight is not symmetric");
  }

  Eigen::LLT<Matrix> chol(W);
  if (chol.info() != Eigen::Success) {
    throw NotPositiveDefinite("prox weight is not positive definite");
  }
  // Minimize g(z) + 1/2 (z - v)^T M (z - v), M = W^{-1}, by proximal gradient
  // with step 1 / lambda_max(M).
  const Matrix metric = chol.solve(Matrix::Identity(W.rows(), W.cols()));
  const double step = 1.0 / max_eigenvalue(metric);
  Vector z = g.prox(v, step);
  double moved = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    Vector next = g.prox(z - step * (metric * (z - v)), step);
    moved = (next - z).norm();
    z = std::move(next);
    if (moved <= options.tolerance) return z;
  }
  throw ToleranceNotMet("weighted prox did not converge in " +
                            std::to_string(options.max_iterations) +
                            " iterations (last step " + std::to_string(moved) + ")",
                        moved);
}

bool verify_weight_dominance(const Eigen::Ref<const Matrix>& Q, double lipschitz) {
  return min_eigenvalue(Q) >= lipschitz - 1e-12 * std::abs(lipschitz);
}

LocalModel::LocalModel(std::size_t block, Vector gradient, Matrix weight,
                       const ConvexRegularizer& regularizer, Vector anchor)
    : block_(block),
      gradient_(std::move(gradient)),
      weight_(std::move(weight)),
      regularizer_(&regularizer),
      anchor_(std::move(anchor)) {
  if (gradient_.size() != anchor_.size()) {
    throw DimensionMismatch("local model gradient and anchor differ in length");
  }
  require_square(weight_, anchor_.size(), "local model weight");
}

double LocalModel::value(const Eigen::Ref<const Vector>& step) const {
  const double g = regularizer_->value(anchor_ + step);
  if (std::isinf(g)) return g;
  return gradient_.dot(step) + 0.5 * step.dot(weight_ * step) + g;
}

LocalSolution LocalModel::solve(const ProxOptions& options) const {
  Vector v;
  Matrix inverse;
  if (is_diagonal(weight_)) {
    if ((weight_.diagonal().array() <= 0.0).any()) {
      throw NotPositiveDefinite("local model weight has a non-positive diagonal entry");
    }
    v = anchor_ - gradient_.cwiseQuotient(weight_.diagonal());
    inverse = weight_.diagonal().cwiseInverse().asDiagonal();
  } else {
    Eigen::LLT<Matrix> chol(weight_);
    if (chol.info() != Eigen::Success) {
      throw NotPositiveDefinite("local model weight is not positive definite");
    }
    v = anchor_ - chol.solve(gradient_);
    inverse = chol.solve(Matrix::Identity(weight_.rows(), weight_.cols()));
    inverse = 0.5 * (inverse + inverse.transpose()).eval();
  }
  const Vector next = weighted_prox(inverse, *regularizer_, v, options);
  LocalSolution out;
  out.direction = next - anchor_;
  const double g_next = regularizer_->value(next);
  const double q_next = std::isinf(g_next) ? g_next
                                           : gradient_.dot(out.direction) +
                                                 0.5 * out.direction.dot(weight_ * out.direction) +
                                                 g_next;
  out.model_decrease = value(Vector::Zero(anchor_.size())) - q_next;
  out.point = next;
  return out;
}

LocalModel build_local_model(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x,
                             std::size_t block, const WeightStrategy& strategy) {
  return LocalModel(block, partial_grad_f(problem, x, block), strategy.weight(problem, block),
                    problem.regularizer(block), extract_block(problem.layout(), x, block));
}

LocalSolution descent_direction(const PartitionedProblem& problem,
                                const Eigen::Ref<const Vector>& x, std::size_t block,
                                const WeightStrategy& strategy, const ProxOptions& options) {
  return build_local_model(problem, x, block, strategy).solve(options);
}

double stationarity_residual(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x,
                             const WeightStrategy& strategy, const ProxOptions& options) {
  if (!std::isfinite(aggregate_value(problem, x))) {
    throw InvalidArgument("stationarity residual needs a point with finite cost");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
    worst = std::max(worst, descent_direction(problem, x, i, strategy, options).direction.norm());
  }
  return worst;
}

}  // namespace pcd
