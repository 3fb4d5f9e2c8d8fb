#include "pcd/async_sim.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <tuple>

#include "pcd/errors.hpp"

namespace pcd {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

bool SimEvent::operator>(const SimEvent& other) const {
  return std::tie(time, kind, sequence) > std::tie(other.time, other.kind, other.sequence);
}

SimEvent schedule_next_fire(Rng& rng, std::size_t node, double rate, double now,
                            std::uint64_t sequence) {
  if (!(rate > 0.0)) throw InvalidArgument("timer rate must be positive");
  double fire = now + exponential_sample(rng, rate);
  if (!(fire > now)) fire = std::nextafter(now, std::numeric_limits<double>::infinity());
  SimEvent ev;
  ev.kind = EventKind::TimerFire;
  ev.time = fire;
  ev.sequence = sequence;
  ev.node = node;
  return ev;
}

std::string AuditReport::describe() const {
  if (issues.empty()) return "consistency audit passed";
  std::ostringstream out;
  out << issues.size() << " consistency issue(s):";
  for (const auto& issue : issues) {
    out << "\n  node " << issue.node << " entry for " << issue.neighbor << ": "
        << (issue.kind == AuditIssue::Kind::StaleState ? "stale state" : "stale gradient");
    if (!issue.detail.empty()) out << " (" << issue.detail << ")";
  }
  return out.str();
}

Simulator::Simulator(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x0,
                     WeightStrategy strategy, SimOptions options)
    : problem_(&problem), strategy_(std::move(strategy)), options_(options), global_(x0) {
  const auto& layout = problem.layout();
  const auto& graph = problem.graph();
  if (static_cast<std::size_t>(x0.size()) != layout.total_dim()) {
    throw DimensionMismatch("initial state length does not match the problem");
  }
  if (!std::isfinite(aggregate_value(problem, x0))) {
    throw InvalidArgument("initial state has non-finite cost");
  }
  if (!(options_.rate > 0.0)) throw InvalidArgument("timer rate must be positive");

  const std::size_t n = problem.num_blocks();
  weights_.reserve(n);
  nodes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    weights_.push_back(strategy_.weight(problem, i));
    auto& node = nodes_[i];
    node.x = extract_block(layout, x0, i);
    node.neighbor_states.resize(graph.neighbors(i).size());
    node.gradient_cache.resize(graph.neighbors(i).size());
    node.rng.seed(derive_seed(options_.seed, i));
  }
  warm_up();
  for (std::size_t i = 0; i < n; ++i) {
    SimEvent ev = schedule_next_fire(nodes_[i].rng, i, options_.rate, now_, sequence_++);
    nodes_[i].next_fire = ev.time;
    push(std::move(ev));
  }
}

void Simulator::warm_up() {
  const auto& graph = problem_->graph();
  // Every node shares its initial block with its neighbors...
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (std::size_t j : graph.neighbors(i)) {
      nodes_[j].neighbor_states[graph.position(j, i)] = nodes_[i].x;
    }
  }
  // ...then sends each neighbor the partial gradient of its own term.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Vector local = local_state(i);
    const auto& support = graph.neighbors(i);
    for (std::size_t k = 0; k < support.size(); ++k) {
      send({MessageKind::GradientOnly, i, support[k], Vector(),
            problem_->term(i).partial_gradient(local, k)});
    }
  }
  drain();
  counts_ = {};
}

void Simulator::push(SimEvent event) { queue_.push(std::move(event)); }

void Simulator::send(Message msg) {
  if (msg.kind == MessageKind::StateBroadcast) {
    ++counts_.state_broadcasts;
  } else {
    ++counts_.gradient_only;
  }
  SimEvent ev;
  ev.kind = EventKind::Deliver;
  ev.time = now_;
  ev.sequence = sequence_++;
  ev.node = msg.receiver;
  ev.message = std::move(msg);
  ++pending_deliveries_;
  push(std::move(ev));
}

Vector Simulator::local_state(std::size_t node) const {
  const auto& cache = nodes_[node].neighbor_states;
  Vector local(idx(problem_->term(node).local_layout().total_dim()));
  Eigen::Index cursor = 0;
  for (const auto& block : cache) {
    local.segment(cursor, block.size()) = block;
    cursor += block.size();
  }
  return local;
}

void Simulator::log_event(const SimEvent& ev) const {
  if (!options_.event_log) return;
  auto& out = *options_.event_log;
  out.precision(17);
  out << "t=" << ev.time << ' ';
  if (ev.kind == EventKind::TimerFire) {
    out << "timer node=" << ev.node << '\n';
    return;
  }
  const auto& m = ev.message;
  out << (m.kind == MessageKind::StateBroadcast ? "state" : "gradient") << " from=" << m.sender
      << " to=" << m.receiver;
  if (m.kind == MessageKind::StateBroadcast) out << " |x|=" << m.state.norm();
  out << " |g|=" << m.gradient.norm() << '\n';
}

IterationRecord Simulator::awake_step(std::size_t i) {
  const auto& graph = problem_->graph();
  const auto& layout = problem_->layout();
  auto& node = nodes_.at(i);

  const LocalModel model(i, accumulate_gradient(node.gradient_cache, layout.dim(i)),
                         weights_[i], problem_->regularizer(i), node.x);
  const LocalSolution sol = model.solve(options_.prox);
  node.x = sol.point;
  node.neighbor_states[graph.position(i, i)] = node.x;
  global_.segment(idx(layout.offset(i)), node.x.size()) = node.x;

  const Vector local = local_state(i);
  const auto& support = graph.neighbors(i);
  for (std::size_t k = 0; k < support.size(); ++k) {
    send({MessageKind::StateBroadcast, i, support[k], node.x,
          problem_->term(i).partial_gradient(local, k)});
  }

  SimEvent timer = schedule_next_fire(node.rng, i, options_.rate, now_, sequence_++);
  node.next_fire = timer.time;
  push(std::move(timer));

  IterationRecord rec;
  rec.t = ++awakes_;
  rec.block = i;
  rec.step_norm = sol.direction.norm();
  rec.value = aggregate_value(*problem_, global_);
  rec.sim_time = now_;
  rec.block_value = node.x;
  return rec;
}

void Simulator::idle_handle(const Message& msg) {
  const auto& graph = problem_->graph();
  const auto& layout = problem_->layout();
  if (msg.receiver >= nodes_.size() || msg.sender >= nodes_.size()) {
    throw ProtocolViolation("message endpoint out of range");
  }
  const std::size_t pos = graph.position(msg.receiver, msg.sender);
  if (pos == CommGraph::npos) {
    throw ProtocolViolation("node " + std::to_string(msg.receiver) +
                            " received a message from non-neighbor " +
                            std::to_string(msg.sender));
  }
  if (static_cast<std::size_t>(msg.gradient.size()) != layout.dim(msg.receiver)) {
    throw ProtocolViolation("gradient payload has the wrong dimension");
  }
  auto& node = nodes_[msg.receiver];
  node.gradient_cache[pos] = msg.gradient;
  if (msg.kind == MessageKind::GradientOnly) return;

  if (static_cast<std::size_t>(msg.state.size()) != layout.dim(msg.sender)) {
    throw ProtocolViolation("state payload has the wrong dimension");
  }
  node.neighbor_states[pos] = msg.state;
  // The sender already shipped its own term's gradients with the broadcast.
  if (msg.sender == msg.receiver) return;

  const Vector local = local_state(msg.receiver);
  const auto& support = graph.neighbors(msg.receiver);
  for (std::size_t k = 0; k < support.size(); ++k) {
    send({MessageKind::GradientOnly, msg.receiver, support[k], Vector(),
          problem_->term(msg.receiver).partial_gradient(local, k)});
  }
}

void Simulator::drain() {
  while (pending_deliveries_ > 0) {
    SimEvent ev = queue_.top();
    queue_.pop();
    if (ev.kind == EventKind::TimerFire) {
      if (ev.time == nodes_[ev.node].next_fire) {
        throw std::logic_error("timer fired while messages were still in flight");
      }
      continue;  // superseded timer
    }
    now_ = ev.time;
    --pending_deliveries_;
    log_event(ev);
    idle_handle(ev.message);
  }
}

IterationRecord Simulator::advance() {
  drain();
  while (true) {
    if (queue_.empty()) throw std::logic_error("simulator event queue is empty");
    SimEvent ev = queue_.top();
    queue_.pop();
    if (ev.kind != EventKind::TimerFire || ev.time != nodes_[ev.node].next_fire) continue;
    now_ = ev.time;
    log_event(ev);
    IterationRecord rec = awake_step(ev.node);
    drain();
    if (options_.audit_every_awake) {
      AuditReport report = consistency_audit();
      if (!report.passed()) {
        throw AuditFailure("after awake " + std::to_string(rec.t) + " of node " +
                           std::to_string(rec.block) + ": " + report.describe());
      }
    }
    return rec;
  }
}

AuditReport Simulator::consistency_audit() const {
  const auto& graph = problem_->graph();
  const auto& layout = problem_->layout();
  AuditReport report;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!bitwise_equal(nodes_[i].x, global_.segment(idx(layout.offset(i)), nodes_[i].x.size()))) {
      report.issues.push_back({AuditIssue::Kind::StaleState, i, i, "own block differs from global state"});
    }
    const auto& support = graph.neighbors(i);
    for (std::size_t k = 0; k < support.size(); ++k) {
      const std::size_t j = support[k];
      if (!bitwise_equal(nodes_[i].neighbor_states[k], nodes_[j].x)) {
        report.issues.push_back({AuditIssue::Kind::StaleState, i, j, "cached x differs"});
      }
      const Vector truth =
          problem_->term(j).partial_gradient(problem_->gather(global_, j), graph.position(j, i));
      const Vector& cached = nodes_[i].gradient_cache[k];
      if (!bitwise_equal(cached, truth)) {
        std::ostringstream detail;
        detail.precision(17);
        if (cached.size() == truth.size()) {
          detail << "max deviation " << (cached - truth).cwiseAbs().maxCoeff();
        } else {
          detail << "cached length " << cached.size();
        }
        report.issues.push_back({AuditIssue::Kind::StaleGradient, i, j, detail.str()});
      }
    }
  }
  return report;
}

RunTrace run_simulation(const PartitionedProblem& problem, const Eigen::Ref<const Vector>& x0,
                        const WeightStrategy& strategy, const SimOptions& options,
                        const StopCriteria& stop) {
  Simulator sim(problem, x0, strategy, options);
  if (options.audit_every_awake) {
    AuditReport report = sim.consistency_audit();
    if (!report.passed()) throw AuditFailure("after warm-up: " + report.describe());
  }
  RunTrace trace;
  trace.initial_state = x0;
  trace.initial_value = aggregate_value(problem, x0);
  trace.records.reserve(std::min<std::size_t>(stop.max_iterations, 1u << 20));
  const std::size_t window = problem.num_blocks();
  std::size_t quiet_run = 0;
  while (trace.records.size() < stop.max_iterations) {
    IterationRecord rec = sim.advance();
    if (!std::isfinite(rec.value)) {
      throw NumericalFailure("non-finite cost at awake " + std::to_string(rec.t), rec.t);
    }
    quiet_run = rec.step_norm < stop.step_tolerance ? quiet_run + 1 : 0;
    trace.records.push_back(std::move(rec));
    if (quiet_run >= window) break;
  }
  trace.final_state = sim.global_state();
  return trace;
}

EquivalenceReport trace_equivalence(const PartitionedProblem& problem,
                                    const Eigen::Ref<const Vector>& x0, const RunTrace& sim_trace,
                                    const WeightStrategy& strategy, const ProxOptions& options) {
  EquivalenceReport report;
  const std::size_t steps = sim_trace.iterations();
  report.replay = run_cd(problem, x0, BlockSchedule::replay(sim_trace.block_sequence()),
                         strategy, StopCriteria{steps, 0.0}, options);
  if (report.replay.iterations() != steps) {
    throw DimensionMismatch("replay produced " + std::to_string(report.replay.iterations()) +
                            " iterations, expected " + std::to_string(steps));
  }
  const auto& layout = problem.layout();
  Vector xs = sim_trace.initial_state;
  Vector xc = report.replay.initial_state;
  if (xs.size() != xc.size()) throw DimensionMismatch("trace initial states differ in length");

  report.state_deviation.reserve(steps + 1);
  report.value_deviation.reserve(steps + 1);
  auto record = [&](double state_dev, double value_dev) {
    report.state_deviation.push_back(state_dev);
    report.value_deviation.push_back(value_dev);
    report.max_state_deviation = std::max(report.max_state_deviation, state_dev);
    report.max_value_deviation = std::max(report.max_value_deviation, value_dev);
  };
  record((xs - xc).cwiseAbs().maxCoeff(),
         std::abs(sim_trace.initial_value - report.replay.initial_value));
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& rs = sim_trace.records[t];
    const auto& rc = report.replay.records[t];
    xs.segment(idx(layout.offset(rs.block)), rs.block_value.size()) = rs.block_value;
    xc.segment(idx(layout.offset(rc.block)), rc.block_value.size()) = rc.block_value;
    record((xs - xc).cwiseAbs().maxCoeff(), std::abs(rs.value - rc.value));
  }
  return report;
}

}  // namespace pcd
