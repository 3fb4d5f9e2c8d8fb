#include "pcd/coordinate_descent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcd/errors.hpp"

namespace pcd {

BlockSchedule BlockSchedule::uniform(std::size_t num_blocks, std::uint64_t seed) {
  if (num_blocks == 0) throw InvalidArgument("schedule needs at least one block");
  return weighted(std::vector<double>(num_blocks, 1.0 / static_cast<double>(num_blocks)), seed);
}

BlockSchedule BlockSchedule::weighted(std::vector<double> probabilities, std::uint64_t seed) {
  if (probabilities.empty()) throw InvalidArgument("schedule needs at least one block");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p > 0.0)) throw InvalidArgument("block probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("block probabilities must sum to 1");
  BlockSchedule schedule;
  schedule.cumulative_.resize(probabilities.size());
  std::partial_sum(probabilities.begin(), probabilities.end(), schedule.cumulative_.begin());
  schedule.cumulative_.back() = 1.0;
  schedule.rng_.seed(seed);
  return schedule;
}

BlockSchedule BlockSchedule::replay(std::vector<std::size_t> blocks) {
  BlockSchedule schedule;
  schedule.replay_ = std::move(blocks);
  return schedule;
}

std::optional<std::size_t> BlockSchedule::remaining() const {
  if (!replay_) return std::nullopt;
  return replay_->size() - cursor_;
}

std::optional<std::size_t> BlockSchedule::next() {
  if (replay_) {
    if (cursor_ >= replay_->size()) return std::nullopt;
    return (*replay_)[cursor_++];
  }
  const double u = uniform_open01(rng_);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

void BlockSchedule::validate(std::size_t num_blocks) const {
  if (replay_) {
    for (std::size_t b : *replay_) {
      if (b >= num_blocks) {
        throw InvalidArgument("replay schedule references block " + std::to_string(b) +
                              " outside [0, " + std::to_string(num_blocks) + ")");
      }
    }
  } else if (cumulative_.size() != num_blocks) {
    throw DimensionMismatch("schedule has " + std::to_string(cumulative_.size()) +
                            " probabilities for " + std::to_string(num_blocks) + " blocks");
  }
}

std::vector<std::size_t> RunTrace::block_sequence() const {
  std::vector<std::size_t> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.block);
  return out;
}

Vector RunTrace::state_at(const PartitionLayout& layout, std::size_t t) const {
  if (t > records.size()) throw InvalidArgument("trace has no iteration " + std::to_string(t));
  Vector x = initial_state;
  for (std::size_t k = 0; k < t; ++k) {
    const auto& r = records[k];
    x.segment(static_cast<Eigen::Index>(layout.offset(r.block)), r.block_value.size()) =
        r.block_value;
  }
  return x;
}

StepResult cd_step(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x,
                   std::size_t block, const WeightStrategy& strategy,
                   const ProxOptions& options) {
  StepResult out{Vector(x), descent_direction(problem, x, block, strategy, options)};
  const auto& layout = problem.layout();
  out.state.segment(static_cast<Eigen::Index>(layout.offset(block)),
                    static_cast<Eigen::Index>(layout.dim(block))) = out.solution.point;
  return out;
}

RunTrace run_cd(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x0,
                BlockSchedule schedule, const WeightStrategy& strategy,
                const StopCriteria& stop, const ProxOptions& options) {
  const auto& layout = problem.layout();
  schedule.validate(problem.num_blocks());

  RunTrace trace;
  trace.initial_state = x0;
  trace.initial_value = aggregate_value(problem, x0);
  if (!std::isfinite(trace.initial_value)) {
    throw NumericalFailure("initial point has non-finite cost", 0);
  }

  Vector x = x0;
  const std::size_t window = problem.num_blocks();
  std::size_t quiet_run = 0;
  trace.records.reserve(std::min<std::size_t>(stop.max_iterations, 1u << 20));
  for (std::size_t t = 1; t <= stop.max_iterations; ++t) {
    const auto block = schedule.next();
    if (!block) break;

    const auto off = static_cast<Eigen::Index>(layout.offset(*block));
    const auto dim = static_cast<Eigen::Index>(layout.dim(*block));
    const LocalSolution sol = descent_direction(problem, x, *block, strategy, options);
    x.segment(off, dim) = sol.point;

    IterationRecord rec;
    rec.t = t;
    rec.block = *block;
    rec.step_norm = sol.direction.norm();
    rec.value = aggregate_value(problem, x);
    rec.block_value = x.segment(off, dim);
    if (!std::isfinite(rec.value)) {
      throw NumericalFailure("non-finite cost at iteration " + std::to_string(t), t);
    }
    trace.records.push_back(std::move(rec));

    quiet_run = trace.records.back().step_norm < stop.step_tolerance ? quiet_run + 1 : 0;
    if (quiet_run >= window) break;
  }
  trace.final_state = std::move(x);
  return trace;
}

std::vector<DescentViolation> descent_monitor(const RunTrace& trace,
                                              const PartitionedProblem& problem, double slack) {
  std::vector<DescentViolation> out;
  double before = trace.initial_value;
  for (const auto& rec : trace.records) {
    const double required =
        0.5 * problem.block_lipschitz(rec.block) * rec.step_norm * rec.step_norm;
    if (!(rec.value <= before - required + slack)) {
      out.push_back({rec.t, rec.block, before, rec.value, required});
    }
    before = rec.value;
  }
  return out;
}

}  // namespace pcd
