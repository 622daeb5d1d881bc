#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "lisfc/graph.hpp"
#include "lisfc/workload.hpp"

namespace lisfc {

struct RewardParams {
  double completion_reward = 1.0;
  double blocking_penalty = -1.0;
  double delay_weight = 0.1;
  double gamma = 0.99;
  double r_max = 1.0;

  void validate() const;
};

struct MdpParams {
  RewardParams reward;
  int k_paths = 3;
  int a_max = 16;
  double per_hop_delay = 0.1;
};

// Immutable planning context for one graph: capacities by dense index and
// the k shortest candidate paths for every ordered node pair.
class SfcEnvironment {
 public:
  SfcEnvironment(NetworkGraph graph, MdpParams params);

  const NetworkGraph& graph() const { return graph_; }
  const MdpParams& params() const { return params_; }
  const RewardParams& reward() const { return params_.reward; }

  std::span<const int> cpu_capacity() const { return cpu_; }
  std::span<const int> bw_capacity() const { return bw_; }
  std::size_t node_index(NodeId id) const;
  // -1 when the pair is not linked.
  int link_between(std::size_t a, std::size_t b) const {
    return link_matrix_[a * n_ + b];
  }
  std::span<const Path> paths(NodeId src, NodeId dst) const;

 private:
  NetworkGraph graph_;
  MdpParams params_;
  std::size_t n_ = 0;
  std::vector<int> cpu_;
  std::vector<int> bw_;
  std::vector<int> link_matrix_;
  std::vector<std::vector<Path>> paths_;
};

// VNF j runs on assignment[j]; segment s (k+1 of them) is routed on
// routing[s]. Segments between co-located elements are single-node paths.
struct Placement {
  std::vector<NodeId> assignment;
  std::vector<Path> routing;
  Slot start_slot = 0;

  bool operator==(const Placement&) const = default;
};

struct Action {
  enum class Kind { kReject, kWait, kPlace };

  Kind kind = Kind::kWait;
  Placement placement;

  static Action reject() { return Action{Kind::kReject, {}}; }
  static Action wait() { return Action{Kind::kWait, {}}; }
  static Action place(Placement p) { return Action{Kind::kPlace, std::move(p)}; }

  // Canonical encoding shared across graph snapshots: "R", "W", or
  // "P/<assignment>/<segment paths>". The start slot is implied by the
  // decision epoch and not encoded.
  std::string sig() const;
  const char* variant() const;

  bool operator==(const Action&) const = default;
};

// Aggregated resource footprint of one placement, by dense index.
struct ResourceUsage {
  std::vector<std::pair<int, int>> cpu;
  std::vector<std::pair<int, int>> bw;
};

struct ActiveSfc {
  int request_index = 0;
  std::shared_ptr<const ResourceUsage> usage;
  Slot completion_slot = 0;
};

// Live system state. Waiting and active entries refer to requests by their
// position in the shared workload stream; pending arrivals are the stream
// suffix starting at next_arrival. Copies share the immutable stream.
struct MdpState {
  Slot clock = 0;
  Slot end_slot = std::numeric_limits<Slot>::max();
  std::vector<int> residual_cpu;
  std::vector<int> residual_bw;
  std::vector<ActiveSfc> active;
  std::vector<int> waiting;
  std::shared_ptr<const std::vector<SfcRequest>> workload;
  std::size_t next_arrival = 0;
  long accepted = 0;
  long blocked = 0;
  long completed = 0;

  const SfcRequest& request(int index) const { return (*workload)[index]; }
  const SfcRequest* head() const {
    return waiting.empty() ? nullptr : &request(waiting.front());
  }
  std::size_t pending_count() const {
    return workload ? workload->size() - next_arrival : 0;
  }
  bool terminal() const { return clock >= end_slot; }
};

MdpState initial_state(const SfcEnvironment& env,
                       std::shared_ptr<const std::vector<SfcRequest>> workload,
                       Slot end_slot = std::numeric_limits<Slot>::max());

struct StepEvents {
  std::optional<int> accepted_id;
  std::optional<double> accepted_delay;
  std::optional<int> rejected_id;
  std::vector<int> completed_ids;
  std::vector<int> arrived_ids;
  std::vector<int> expired_ids;

  int blocked_count() const {
    return static_cast<int>(expired_ids.size()) + (rejected_id ? 1 : 0);
  }
};

struct StepOutcome {
  MdpState next_state;
  double reward = 0.0;
  StepEvents events;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

std::optional<ResourceUsage> placement_usage(const SfcEnvironment& env,
                                             const SfcRequest& request,
                                             const Placement& placement);

bool is_feasible(const SfcEnvironment& env, const MdpState& s,
                 const Action& a);

// Candidate actions for the head request; see enumerate_places() for the
// placement scheme. An empty queue yields exactly [Wait].
std::vector<Action> enumerate_actions(const SfcEnvironment& env,
                                      const MdpState& s, int k_paths,
                                      int a_max);
std::vector<Action> enumerate_actions(const SfcEnvironment& env,
                                      const MdpState& s);

// Feasible on-path placements for the head. When every monotone on-path
// assignment over the k paths fits within a_max they are all enumerated in
// lexicographic order; otherwise each path contributes greedy
// max-residual, greedy earliest-node, and one perturbed variant of each.
std::vector<Placement> enumerate_places(const SfcEnvironment& env,
                                        const MdpState& s, int k_paths,
                                        int a_max);

// Greedy max-residual-CPU assignment along one path (ties to the lower
// node id). Empty when some VNF fits on no remaining path node.
std::optional<Placement> max_residual_on_path(const SfcEnvironment& env,
                                              const MdpState& s,
                                              const SfcRequest& request,
                                              const Path& path);

// Places VNFs at the given nondecreasing positions along the path.
Placement on_path_placement(const Path& path, std::span<const int> positions,
                            Slot start);

// Applies a in place and advances the clock by one slot; returns the reward.
double apply_action(const SfcEnvironment& env, MdpState& s, const Action& a,
                    StepEvents* events = nullptr);

StepOutcome step(const SfcEnvironment& env, const MdpState& s,
                 const Action& a);

double e2e_delay(const SfcRequest& request, const Placement& placement,
                 Slot start_slot, double per_hop_delay);

bool wait_allowed(const MdpState& s);

// Coarse state abstraction used to match states across tasks and graphs.
struct StateAbstraction {
  // (node id, bucket) and (u, v, bucket) for nonzero buckets only.
  std::vector<std::pair<NodeId, int>> node_buckets;
  std::vector<std::tuple<NodeId, NodeId, int>> link_buckets;
  // (chain length, total cpu, total bw, slack bucket), sorted.
  std::vector<std::tuple<int, int, int, int>> waiting;

  bool operator==(const StateAbstraction&) const = default;
};

inline constexpr int kUtilizationLevels = 8;

int utilization_bucket(int used, int capacity);
int slack_bucket(int remaining_slack);
StateAbstraction abstract_state(const SfcEnvironment& env, const MdpState& s);
std::string state_key(const SfcEnvironment& env, const MdpState& s);

// Empty when the state is consistent; otherwise a description of the first
// violated invariant (negative residual, broken conservation, or an active
// placement finishing after its deadline).
std::optional<std::string> check_invariants(const SfcEnvironment& env,
                                            const MdpState& s);

}  // namespace lisfc
