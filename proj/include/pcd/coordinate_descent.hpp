#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pcd/local_model.hpp"
#include "pcd/random.hpp"

namespace pcd {

// Block selection rule for the centralized method: i.i.d. draws with
// probabilities p_i, or a fixed replay list.
class BlockSchedule {
 public:
  static BlockSchedule uniform(std::size_t num_blocks, std::uint64_t seed);
  // Probabilities must be positive and sum to one (within 1e-12).
  static BlockSchedule weighted(std::vector<double> probabilities, std::uint64_t seed);
  static BlockSchedule replay(std::vector<std::size_t> blocks);

  bool is_replay() const noexcept { return replay_.has_value(); }
  // Number of blocks left for replay schedules.
  std::optional<std::size_t> remaining() const;
  // Next block, or nullopt when a replay list is exhausted.
  std::optional<std::size_t> next();
  void validate(std::size_t num_blocks) const;

 private:
  BlockSchedule() = default;
  std::vector<double> cumulative_;
  Rng rng_;
  std::optional<std::vector<std::size_t>> replay_;
  std::size_t cursor_ = 0;
};

struct StopCriteria {
  std::size_t max_iterations = 0;
  // Stop once N consecutive step norms fall below this; 0 disables the rule.
  double step_tolerance = 0.0;
};

struct IterationRecord {
  std::size_t t = 0;          // 1-based iteration index: x(t) is the state after it
  std::size_t block = 0;
  double step_norm = 0.0;
  double value = 0.0;         // V(x(t))
  std::optional<double> sim_time;
  Vector block_value;         // x_block(t)
};

struct RunTrace {
  Vector initial_state;
  double initial_value = 0.0;
  std::vector<IterationRecord> records;
  Vector final_state;

  std::size_t iterations() const noexcept { return records.size(); }
  std::vector<std::size_t> block_sequence() const;
  // x(t) rebuilt from the initial state and per-iteration block values.
  Vector state_at(const PartitionLayout& layout, std::size_t t) const;
  double value_at(std::size_t t) const { return t == 0 ? initial_value : records.at(t - 1).value; }
};

struct StepResult {
  Vector state;
  LocalSolution solution;
};

// One iteration: only block i moves, by d_i from descent_direction.
StepResult cd_step(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x,
                   std::size_t block, const WeightStrategy& strategy,
                   const ProxOptions& options = {});

// Generalized coordinate descent. Throws NumericalFailure when V becomes
// non-finite (iteration 0 means the initial point).
RunTrace run_cd(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x0,
                BlockSchedule schedule, const WeightStrategy& strategy,
                const StopCriteria& stop, const ProxOptions& options = {});

struct DescentViolation {
  std::size_t t = 0;
  std::size_t block = 0;
  double value_before = 0.0;
  double value_after = 0.0;
  double required_decrease = 0.0;  // (L_i / 2) ||d_i||^2
};

// Checks V(x(t)) <= V(x(t-1)) - (L_i / 2) ||d_i||^2 + slack at every iteration.
std::vector<DescentViolation> descent_monitor(const RunTrace& trace,
                                              const PartitionedProblem& problem,
                                              double slack = 1e-9);

}  // namespace pcd
