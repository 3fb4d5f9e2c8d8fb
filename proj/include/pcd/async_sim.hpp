#pragma once

#include <cstdint>
#include <iosfwd>
#include <queue>
#include <string>
#include <vector>

#include "pcd/coordinate_descent.hpp"

namespace pcd {

enum class MessageKind {
  // Sender's new block plus grad_{x_receiver} f_sender at the new state.
  StateBroadcast,
  // grad_{x_receiver} f_sender only.
  GradientOnly,
};

struct Message {
  MessageKind kind = MessageKind::GradientOnly;
  std::size_t sender = 0;
  std::size_t receiver = 0;
  Vector state;     // empty for GradientOnly
  Vector gradient;
};

enum class EventKind { Deliver, TimerFire };

// Queue order is (time, kind, sequence) with deliveries ahead of timer fires
// at equal time, so every message caused by an awake phase is handled before
// the next node wakes up.
struct SimEvent {
  EventKind kind = EventKind::TimerFire;
  double time = 0.0;
  std::uint64_t sequence = 0;
  std::size_t node = 0;  // timer owner, or message receiver
  Message message;       // Deliver only

  bool operator>(const SimEvent& other) const;
};

// Next awake time of `node`: now + Exp(rate), drawn from the node's own
// stream. Always strictly later than `now`.
SimEvent schedule_next_fire(Rng& rng, std::size_t node, double rate, double now,
                            std::uint64_t sequence);

struct NodeState {
  Vector x;
  // Indexed by position in N_i (ascending node order).
  std::vector<Vector> neighbor_states;   // cached x_j
  std::vector<Vector> gradient_cache;    // cached grad_{x_i} f_j
  double next_fire = 0.0;
  Rng rng;
};

struct AuditIssue {
  enum class Kind { StaleState, StaleGradient };
  Kind kind;
  std::size_t node;      // holder of the bad cache entry
  std::size_t neighbor;  // entry it refers to
  std::string detail;
};

struct AuditReport {
  std::vector<AuditIssue> issues;
  bool passed() const noexcept { return issues.empty(); }
  std::string describe() const;
};

struct SimOptions {
  std::uint64_t seed = 0;      // master seed; node streams are derived from it
  double rate = 1.0;           // common timer rate
  bool audit_every_awake = false;
  ProxOptions prox;
  std::ostream* event_log = nullptr;
};

struct MessageCounts {
  std::uint64_t state_broadcasts = 0;
  std::uint64_t gradient_only = 0;
  std::uint64_t total() const noexcept { return state_broadcasts + gradient_only; }
};

// Event-driven simulation of the idle/awake protocol with zero-delay,
// reliable delivery. Caches start consistent through a warm-up exchange.
class Simulator {
 public:
  Simulator(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x0,
            WeightStrategy strategy, SimOptions options);

  // Pops the next timer fire, runs the awake phase and drains the resulting
  // message cascade. Returns the iteration record (V evaluated on the
  // global state).
  IterationRecord advance();

  // Awake phase of node i at the current time; queues its broadcasts but
  // does not deliver them.
  IterationRecord awake_step(std::size_t node);
  // Idle handling of one delivered message; queues any replies.
  void idle_handle(const Message& msg);
  // Delivers queued messages until none remain.
  void drain();
  bool quiescent() const noexcept { return pending_deliveries_ == 0; }

  AuditReport consistency_audit() const;

  const Vector& global_state() const noexcept { return global_; }
  double now() const noexcept { return now_; }
  std::size_t awake_count() const noexcept { return awakes_; }
  const MessageCounts& message_counts() const noexcept { return counts_; }
  const NodeState& node(std::size_t i) const { return nodes_.at(i); }
  // Direct cache access, for fault-injection tests.
  NodeState& mutable_node(std::size_t i) { return nodes_.at(i); }
  const PartitionedProblem& problem() const noexcept { return *problem_; }

 private:
  void warm_up();
  void push(SimEvent event);
  void send(Message msg);
  Vector local_state(std::size_t node) const;
  void log_event(const SimEvent& event) const;

  const PartitionedProblem* problem_;
  WeightStrategy strategy_;
  SimOptions options_;
  std::vector<Matrix> weights_;
  std::vector<NodeState> nodes_;
  Vector global_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> queue_;
  std::uint64_t sequence_ = 0;
  std::size_t pending_deliveries_ = 0;
  std::size_t awakes_ = 0;
  double now_ = 0.0;
  MessageCounts counts_;
};

// Runs the simulator until the stop criteria are met. Throws AuditFailure
// when per-awake auditing is on and a check fails.
RunTrace run_simulation(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x0,
                        const WeightStrategy& strategy, const SimOptions& options,
                        const StopCriteria& stop);

struct EquivalenceReport {
  double max_state_deviation = 0.0;  // max_t ||x_sim(t) - x_cd(t)||_inf
  double max_value_deviation = 0.0;  // max_t |V_sim(t) - V_cd(t)|
  std::vector<double> state_deviation;  // per t = 0..T
  std::vector<double> value_deviation;
  RunTrace replay;
};

// Replays the awake-block sequence of `sim_trace` through run_cd and
// compares the two state trajectories.
EquivalenceReport trace_equivalence(const PartitionedProblem& problem,
                                    const Eigen::Ref<const Vector>& x0, const RunTrace& sim_trace,
                                    const WeightStrategy& strategy,
                                    const ProxOptions& options = {});

}  // namespace pcd
