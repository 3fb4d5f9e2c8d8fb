#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "pcd/errors.hpp"
#include "pcd/instance_io.hpp"
#include "pcd/problem.hpp"

using namespace pcd;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

PartitionedProblem benchmark_instance(std::size_t n, double p, std::uint64_t seed) {
  return generate_indefinite_qp(erdos_renyi_connected(n, p, seed), seed, Interval{-30, 20});
}

}  // namespace

TEST(Value, ZeroQpIsZero) {
  const auto g = complete_graph(3);
  const auto prob = oracle::scalar_qp(g, std::vector<Matrix>(3, Matrix::Zero(3, 3)),
                                      std::vector<Vector>(3, Vector::Zero(3)),
                                      oracle::box_regs(3, -1, 1));
  EXPECT_EQ(aggregate_value(prob, Vector::Constant(3, 0.5)), 0.0);
}

TEST(Value, OutsideBoxIsInfinite) {
  const auto prob = benchmark_instance(5, 0.5, 2);
  Vector x = Vector::Zero(5);
  x(3) = 25.0;
  EXPECT_EQ(aggregate_value(prob, x), kInf);
  x(3) = -30.0;
  EXPECT_TRUE(std::isfinite(aggregate_value(prob, x)));
}

TEST(Value, BenchmarkInstanceAtOrigin) {
  const auto prob = benchmark_instance(50, 0.2, 1);
  EXPECT_EQ(aggregate_value(prob, Vector::Zero(50)), 0.0);
}

TEST(Value, MatchesIndexLoopOracle) {
  const auto prob = benchmark_instance(10, 0.4, 5);
  Rng rng(9);
  for (int k = 0; k < 20; ++k) {
    const Vector x = oracle::random_box_point(rng, 10, -30, 20);
    const double expect = oracle::qp_smooth_value(prob, x);
    EXPECT_NEAR(aggregate_value(prob, x), expect, 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST(Gradient, TwoNodeExample) {
  // f_0(x_0, x_1) = x_0^2 + x_1^2, f_1 = 0.
  const auto g = path_graph(2);
  const auto prob = oracle::scalar_qp(g, {Matrix::Identity(2, 2), Matrix::Zero(2, 2)},
                                      {Vector::Zero(2), Vector::Zero(2)}, oracle::zero_regs(2));
  const Vector x = Vector::Ones(2);
  EXPECT_DOUBLE_EQ(partial_grad_f(prob, x, 0)(0), 2.0);
  EXPECT_DOUBLE_EQ(partial_grad_f(prob, x, 1)(0), 2.0);
}

TEST(Gradient, FiniteDifferenceAgreement) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto prob = benchmark_instance(10, 0.3, seed);
    Rng rng(derive_seed(seed, 77));
    for (int k = 0; k < 100; ++k) {
      const Vector x = oracle::random_box_point(rng, 10, -30, 20);
      const std::size_t i = rng() % 10;
      auto f = [&](const Vector& y) { return oracle::qp_block_value(prob, y, i); };
      const Vector fd = oracle::central_difference(f, x, i, 1, 1e-6);
      const Vector g = partial_grad_f(prob, x, i);
      EXPECT_LE(std::abs(g(0) - fd(0)), 1e-6 * std::max(1.0, std::abs(fd(0))))
          << "seed " << seed << " block " << i;
    }
  }
}

TEST(Gradient, MultiDimensionalBlocks) {
  // Three nodes on a path with block sizes 2, 1, 3 and random symmetric data.
  const auto g = path_graph(3);
  const auto layout = build_layout({2, 1, 3});
  Rng rng(4);
  std::vector<std::shared_ptr<const SmoothLocalTerm>> terms;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<std::size_t> dims;
    for (std::size_t j : g.neighbors(i)) dims.push_back(layout.dim(j));
    const auto local = build_layout(dims);
    const auto m = static_cast<Eigen::Index>(local.total_dim());
    Matrix A(m, m);
    for (auto& v : A.reshaped()) v = uniform_in(rng, -1, 1);
    Vector r(m);
    for (auto& v : r) v = uniform_in(rng, -1, 1);
    terms.push_back(std::make_shared<IndefiniteQpTerm>(local, Matrix(A + A.transpose()), r));
  }
  const PartitionedProblem prob(layout, g, terms, oracle::zero_regs(3));
  auto f = [&](const Vector& x) { return oracle::qp_smooth_value(prob, x); };
  for (int k = 0; k < 20; ++k) {
    const Vector x = oracle::random_box_point(rng, 6, -3, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      const Vector fd = oracle::central_difference(f, x, layout.offset(i), layout.dim(i), 1e-6);
      EXPECT_LE((partial_grad_f(prob, x, i) - fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST(Lipschitz, SumsOverNeighborTerms) {
  // L_{00} = 2 * 0.5 = 1 from f_0, L_{10} = 2 * 1 = 2 from f_1.
  const auto g = complete_graph(2);
  Matrix H0 = Matrix::Zero(2, 2), H1 = Matrix::Zero(2, 2);
  H0(0, 0) = 0.5;
  H1(0, 0) = 1.0;
  const auto prob = oracle::scalar_qp(g, {H0, H1}, {Vector::Zero(2), Vector::Zero(2)},
                                      oracle::zero_regs(2));
  EXPECT_DOUBLE_EQ(block_lipschitz(prob, 0), 3.0);
  EXPECT_DOUBLE_EQ(block_lipschitz(prob, 1), 0.0);
}

TEST(Lipschitz, IsolatedNodeOwnTermOnly) {
  const CommGraph g(1, std::span<const std::pair<std::size_t, std::size_t>>{});
  const auto prob = oracle::scalar_qp(g, {Matrix::Constant(1, 1, -1.5)}, {Vector::Zero(1)},
                                      oracle::zero_regs(1));
  EXPECT_DOUBLE_EQ(block_lipschitz(prob, 0), 3.0);
}

TEST(Lipschitz, BoundsSampledRatios) {
  const auto prob = benchmark_instance(10, 0.3, 8);
  Rng rng(12);
  for (std::size_t i = 0; i < 10; ++i) {
    const double sampled = oracle::sampled_block_lipschitz(prob, i, rng, 50);
    EXPECT_LE(sampled, block_lipschitz(prob, i) * (1 + 1e-12));
  }
}

TEST(Lipschitz, DescentLemmaUpperBound) {
  // f(x + U_i d) <= f(x) + grad_i^T d + L_i/2 ||d||^2.
  const auto prob = benchmark_instance(10, 0.3, 21);
  Rng rng(22);
  for (int k = 0; k < 200; ++k) {
    const Vector x = oracle::random_box_point(rng, 10, -30, 20);
    const std::size_t i = rng() % 10;
    const double d = uniform_in(rng, -5, 5);
    Vector y = x;
    y(i) += d;
    const double bound = oracle::qp_smooth_value(prob, x) + partial_grad_f(prob, x, i)(0) * d +
                         0.5 * block_lipschitz(prob, i) * d * d;
    EXPECT_LE(oracle::qp_smooth_value(prob, y), bound + 1e-9 * std::max(1.0, std::abs(bound)));
  }
}

TEST(Generator, ShiftMustBePositive) {
  QpInstanceOptions opts;
  opts.shift = 0.0;
  EXPECT_THROW(generate_indefinite_qp(path_graph(3), 1, Interval{-1, 1}, opts), InvalidArgument);
}

TEST(Generator, BoxesAndIndefiniteness) {
  const auto prob = benchmark_instance(50, 0.2, 1);
  std::size_t indefinite = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto* box = dynamic_cast<const BoxIndicator*>(&prob.regularizer(i));
    ASSERT_NE(box, nullptr);
    EXPECT_EQ(box->lower()(0), -30.0);
    EXPECT_EQ(box->upper()(0), 20.0);
    const auto& H = oracle::qp_term(prob, i).H();
    EXPECT_TRUE(H.isApprox(H.transpose(), 0.0));
    const Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    // A^T A is PSD, so the smallest eigenvalue of H is at least 1 - shift.
    EXPECT_GE(es.eigenvalues().minCoeff(), -1.0 - 1e-12);
    if (es.eigenvalues().minCoeff() < 0) ++indefinite;
  }
  EXPECT_GT(indefinite, 0u);
}

TEST(Generator, SeedDeterminism) {
  const auto g = erdos_renyi_connected(20, 0.3, 4);
  const auto a = generate_indefinite_qp(g, 9, Interval{-30, 20});
  const auto b = generate_indefinite_qp(g, 9, Interval{-30, 20});
  const auto c = generate_indefinite_qp(g, 10, Interval{-30, 20});
  bool differs = false;
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(oracle::qp_term(a, i).H(), oracle::qp_term(b, i).H());
    EXPECT_EQ(oracle::qp_term(a, i).r(), oracle::qp_term(b, i).r());
    differs |= oracle::qp_term(a, i).r() != oracle::qp_term(c, i).r();
  }
  EXPECT_TRUE(differs);
  ASSERT_TRUE(a.provenance());
  EXPECT_EQ(a.provenance()->seed, 9u);
}

TEST(Generator, LinearTermsInRange) {
  const auto prob = benchmark_instance(30, 0.2, 6);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_LE(oracle::qp_term(prob, i).r().cwiseAbs().maxCoeff(), 10.0);
  }
}

TEST(Problem, RejectsBadConstruction) {
  const std::vector<std::pair<std::size_t, std::size_t>> none;
  const CommGraph g(2, none);
  // A term whose support is wider than N_i.
  std::vector<std::shared_ptr<const SmoothLocalTerm>> terms{
      std::make_shared<IndefiniteQpTerm>(uniform_layout(2), Matrix::Zero(2, 2), Vector::Zero(2)),
      std::make_shared<IndefiniteQpTerm>(uniform_layout(1), Matrix::Zero(1, 1), Vector::Zero(1))};
  EXPECT_THROW(PartitionedProblem(uniform_layout(2), g, terms, oracle::zero_regs(2)),
               DimensionMismatch);
  EXPECT_THROW(IndefiniteQpTerm(uniform_layout(2), (Matrix(2, 2) << 1, 2, 3, 4).finished(),
                                Vector::Zero(2)),
               InvalidArgument);
}

TEST(InstanceIo, RoundTrip) {
  const auto prob = benchmark_instance(12, 0.3, 3);
  std::stringstream buf;
  write_instance(buf, prob);
  const auto back = read_instance(buf);
  EXPECT_EQ(back.layout(), prob.layout());
  EXPECT_EQ(back.graph(), prob.graph());
  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    const Vector x = oracle::random_box_point(rng, 12, -30, 20);
    EXPECT_EQ(aggregate_value(back, x), aggregate_value(prob, x));
  }
  ASSERT_TRUE(back.provenance());
  EXPECT_EQ(back.provenance()->seed, 3u);
}

TEST(InstanceIo, Malformed) {
  std::istringstream in(R"({"format": "pcd-instance", "version": 1, "block_dims": [1]})");
  EXPECT_THROW(read_instance(in), InvalidArgument);
}
