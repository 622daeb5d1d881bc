#include "lisfc/mdp.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace lisfc {

void RewardParams::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  const double largest =
      std::max({std::abs(completion_reward), std::abs(blocking_penalty),
                std::abs(delay_weight)});
  if (r_max < largest) {
    throw std::invalid_argument("r_max below the largest per-event reward");
  }
}

SfcEnvironment::SfcEnvironment(NetworkGraph graph, MdpParams params)
    : graph_(std::move(graph)), params_(params) {
  params_.reward.validate();
  if (params_.k_paths < 1 || params_.a_max < 1) {
    throw std::invalid_argument("k_paths and a_max must be >= 1");
  }
  n_ = graph_.node_count();
  for (const auto& node : graph_.nodes()) cpu_.push_back(node.cpu);
  for (const auto& link : graph_.links()) bw_.push_back(link.bw);
  link_matrix_.assign(n_ * n_, -1);
  const auto links = graph_.links();
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto a = *graph_.node_index(links[i].u);
    const auto b = *graph_.node_index(links[i].v);
    link_matrix_[a * n_ + b] = static_cast<int>(i);
    link_matrix_[b * n_ + a] = static_cast<int>(i);
  }
  paths_.resize(n_ * n_);
  const auto nodes = graph_.nodes();
  for (std::size_t a = 0; a < n_; ++a) {
    for (std::size_t b = 0; b < n_; ++b) {
      if (a == b) continue;
      paths_[a * n_ + b] =
          k_shortest_paths(graph_, nodes[a].id, nodes[b].id, params_.k_paths);
    }
  }
}

std::size_t SfcEnvironment::node_index(NodeId id) const {
  auto idx = graph_.node_index(id);
  if (!idx) throw std::out_of_range("node " + std::to_string(id));
  return *idx;
}

std::span<const Path> SfcEnvironment::paths(NodeId src, NodeId dst) const {
  return paths_[node_index(src) * n_ + node_index(dst)];
}

namespace {

void append_int(std::string& out, long value) {
  char buf[24];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, end);
}

void accumulate(std::vector<std::pair<int, int>>& into, int index,
                int amount) {
  for (auto& [i, v] : into) {
    if (i == index) {
      v += amount;
      return;
    }
  }
  into.emplace_back(index, amount);
}

NodeId segment_source(const SfcRequest& r, const Placement& p, int seg) {
  return seg == 0 ? r.ingress : p.assignment[seg - 1];
}

NodeId segment_target(const SfcRequest& r, const Placement& p, int seg) {
  return seg == r.chain_length() ? r.egress : p.assignment[seg];
}

long binomial_capped(int n, int k, long cap) {
  long result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
    if (result > cap) return cap + 1;
  }
  return result;
}

void monotone_positions(int nodes, int k, std::vector<int>& current,
                        std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == k) {
    out.push_back(current);
    return;
  }
  const int from = current.empty() ? 0 : current.back();
  for (int p = from; p < nodes; ++p) {
    current.push_back(p);
    monotone_positions(nodes, k, current, out);
    current.pop_back();
  }
}

std::vector<int> path_residuals(const SfcEnvironment& env, const MdpState& s,
                                const Path& path) {
  std::vector<int> res(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    res[i] = s.residual_cpu[env.node_index(path[i])];
  }
  return res;
}

// Greedy max-residual assignment; when runner_up_last is set the final VNF
// takes the second-best position instead.
std::optional<std::vector<int>> greedy_max_residual(
    const Path& path, std::vector<int> res, const SfcRequest& r,
    bool runner_up_last) {
  std::vector<int> positions;
  int prev = 0;
  const int k = r.chain_length();
  for (int j = 0; j < k; ++j) {
    const int demand = r.vnf_demands[j];
    int best = -1;
    int second = -1;
    for (int p = prev; p < static_cast<int>(path.size()); ++p) {
      if (res[p] < demand) continue;
      auto better = [&](int a, int b) {
        return b == -1 || res[a] > res[b] ||
               (res[a] == res[b] && path[a] < path[b]);
      };
      if (better(p, best)) {
        second = best;
        best = p;
      } else if (better(p, second)) {
        second = p;
      }
    }
    if (runner_up_last && j == k - 1) best = second;
    if (best == -1) return std::nullopt;
    res[best] -= demand;
    positions.push_back(best);
    prev = best;
  }
  return positions;
}

// Earliest feasible position for each VNF; skip_first drops the first
// feasible position for VNF 0.
std::optional<std::vector<int>> greedy_earliest(const Path& path,
                                                std::vector<int> res,
                                                const SfcRequest& r,
                                                bool skip_first) {
  std::vector<int> positions;
  int prev = 0;
  for (int j = 0; j < r.chain_length(); ++j) {
    const int demand = r.vnf_demands[j];
    int chosen = -1;
    bool skipped = false;
    for (int p = prev; p < static_cast<int>(path.size()); ++p) {
      if (res[p] < demand) continue;
      if (skip_first && j == 0 && !skipped) {
        skipped = true;
        continue;
      }
      chosen = p;
      break;
    }
    if (chosen == -1) return std::nullopt;
    res[chosen] -= demand;
    positions.push_back(chosen);
    prev = chosen;
  }
  return positions;
}

}  // namespace

std::string Action::sig() const {
  switch (kind) {
    case Kind::kReject:
      return "R";
    case Kind::kWait:
      return "W";
    case Kind::kPlace:
      break;
  }
  std::string out = "P/";
  for (std::size_t i = 0; i < placement.assignment.size(); ++i) {
    if (i) out += '.';
    append_int(out, placement.assignment[i]);
  }
  out += '/';
  for (std::size_t s = 0; s < placement.routing.size(); ++s) {
    if (s) out += '|';
    const auto& path = placement.routing[s];
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i) out += '-';
      append_int(out, path[i]);
    }
  }
  return out;
}

const char* Action::variant() const {
  switch (kind) {
    case Kind::kReject:
      return "reject";
    case Kind::kWait:
      return "wait";
    case Kind::kPlace:
      return "place";
  }
  return "?";
}

MdpState initial_state(const SfcEnvironment& env,
                       std::shared_ptr<const std::vector<SfcRequest>> workload,
                       Slot end_slot) {
  MdpState s;
  s.end_slot = end_slot;
  s.residual_cpu.assign(env.cpu_capacity().begin(), env.cpu_capacity().end());
  s.residual_bw.assign(env.bw_capacity().begin(), env.bw_capacity().end());
  s.workload = workload ? std::move(workload)
                        : std::make_shared<const std::vector<SfcRequest>>();
  while (s.next_arrival < s.workload->size() &&
         (*s.workload)[s.next_arrival].release_slot <= s.clock) {
    s.waiting.push_back(static_cast<int>(s.next_arrival));
    ++s.next_arrival;
  }
  return s;
}

std::optional<ResourceUsage> placement_usage(const SfcEnvironment& env,
                                             const SfcRequest& request,
                                             const Placement& placement) {
  const int k = request.chain_length();
  if (static_cast<int>(placement.assignment.size()) != k ||
      static_cast<int>(placement.routing.size()) != k + 1) {
    return std::nullopt;
  }
  const auto& g = env.graph();
  ResourceUsage usage;
  for (int j = 0; j < k; ++j) {
    auto idx = g.node_index(placement.assignment[j]);
    if (!idx) return std::nullopt;
    accumulate(usage.cpu, static_cast<int>(*idx), request.vnf_demands[j]);
  }
  for (int seg = 0; seg <= k; ++seg) {
    const auto& path = placement.routing[seg];
    if (path.empty() || path.front() != segment_source(request, placement, seg) ||
        path.back() != segment_target(request, placement, seg)) {
      return std::nullopt;
    }
    std::vector<std::size_t> seen;
    for (std::size_t i = 0; i < path.size(); ++i) {
      auto idx = g.node_index(path[i]);
      if (!idx) return std::nullopt;
      if (std::find(seen.begin(), seen.end(), *idx) != seen.end()) {
        return std::nullopt;
      }
      seen.push_back(*idx);
      if (i == 0) continue;
      const int link = env.link_between(seen[i - 1], *idx);
      if (link < 0) return std::nullopt;
      accumulate(usage.bw, link, request.segment_bw(seg));
    }
  }
  return usage;
}

namespace {

bool fits(const MdpState& s, const ResourceUsage& usage) {
  for (const auto& [i, v] : usage.cpu) {
    if (s.residual_cpu[i] < v) return false;
  }
  for (const auto& [i, v] : usage.bw) {
    if (s.residual_bw[i] < v) return false;
  }
  return true;
}

}  // namespace

bool wait_allowed(const MdpState& s) {
  const auto* head = s.head();
  return head != nullptr && s.clock + 1 + head->duration <= head->deadline_slot;
}

bool is_feasible(const SfcEnvironment& env, const MdpState& s,
                 const Action& a) {
  switch (a.kind) {
    case Action::Kind::kWait:
      return true;
    case Action::Kind::kReject:
      return s.head() != nullptr;
    case Action::Kind::kPlace:
      break;
  }
  const auto* head = s.head();
  if (head == nullptr) return false;
  const auto& p = a.placement;
  if (p.start_slot != s.clock) return false;
  if (p.start_slot + head->duration > head->deadline_slot) return false;
  auto usage = placement_usage(env, *head, p);
  return usage && fits(s, *usage);
}

Placement on_path_placement(const Path& path, std::span<const int> positions,
                            Slot start) {
  Placement p;
  p.start_slot = start;
  int prev = 0;
  for (int pos : positions) {
    p.assignment.push_back(path[pos]);
    p.routing.emplace_back(path.begin() + prev, path.begin() + pos + 1);
    prev = pos;
  }
  p.routing.emplace_back(path.begin() + prev, path.end());
  return p;
}

std::optional<Placement> max_residual_on_path(const SfcEnvironment& env,
                                              const MdpState& s,
                                              const SfcRequest& request,
                                              const Path& path) {
  auto positions = greedy_max_residual(path, path_residuals(env, s, path),
                                       request, false);
  if (!positions) return std::nullopt;
  return on_path_placement(path, *positions, s.clock);
}

std::vector<Placement> enumerate_places(const SfcEnvironment& env,
                                        const MdpState& s, int k_paths,
                                        int a_max) {
  std::vector<Placement> out;
  const auto* head = s.head();
  if (head == nullptr || a_max <= 0) return out;
  if (s.clock + head->duration > head->deadline_slot) return out;

  std::vector<Path> paths;
  const auto cached = env.paths(head->ingress, head->egress);
  if (k_paths <= static_cast<int>(cached.size()) ||
      static_cast<int>(cached.size()) < env.params().k_paths) {
    const auto n = std::min<std::size_t>(cached.size(), k_paths);
    paths.assign(cached.begin(), cached.begin() + static_cast<long>(n));
  } else {
    paths = k_shortest_paths(env.graph(), head->ingress, head->egress, k_paths);
  }

  const int k = head->chain_length();
  long total = 0;
  for (const auto& path : paths) {
    total += binomial_capped(static_cast<int>(path.size()) + k - 1, k, a_max);
    if (total > a_max) break;
  }

  std::vector<std::string> sigs;
  auto offer = [&](Placement p) {
    if (static_cast<int>(out.size()) >= a_max) return;
    Action a = Action::place(std::move(p));
    if (!is_feasible(env, s, a)) return;
    auto sig = a.sig();
    if (std::find(sigs.begin(), sigs.end(), sig) != sigs.end()) return;
    sigs.push_back(std::move(sig));
    out.push_back(std::move(a.placement));
  };

  if (total <= a_max) {
    for (const auto& path : paths) {
      std::vector<std::vector<int>> all;
      std::vector<int> current;
      monotone_positions(static_cast<int>(path.size()), k, current, all);
      for (const auto& positions : all) {
        offer(on_path_placement(path, positions, s.clock));
      }
    }
    return out;
  }

  for (const auto& path : paths) {
    const auto res = path_residuals(env, s, path);
    if (auto p = greedy_max_residual(path, res, *head, false)) {
      offer(on_path_placement(path, *p, s.clock));
    }
    if (auto p = greedy_earliest(path, res, *head, false)) {
      offer(on_path_placement(path, *p, s.clock));
    }
    if (auto p = greedy_max_residual(path, res, *head, true)) {
      offer(on_path_placement(path, *p, s.clock));
    }
    if (auto p = greedy_earliest(path, res, *head, true)) {
      offer(on_path_placement(path, *p, s.clock));
    }
  }
  return out;
}

std::vector<Action> enumerate_actions(const SfcEnvironment& env,
                                      const MdpState& s, int k_paths,
                                      int a_max) {
  std::vector<Action> out;
  if (s.head() == nullptr) {
    out.push_back(Action::wait());
    return out;
  }
  out.push_back(Action::reject());
  if (wait_allowed(s)) out.push_back(Action::wait());
  for (auto& p : enumerate_places(env, s, k_paths, a_max)) {
    out.push_back(Action::place(std::move(p)));
  }
  return out;
}

std::vector<Action> enumerate_actions(const SfcEnvironment& env,
                                      const MdpState& s) {
  return enumerate_actions(env, s, env.params().k_paths, env.params().a_max);
}

double e2e_delay(const SfcRequest& request, const Placement& placement,
                 Slot start_slot, double per_hop_delay) {
  long hops = 0;
  for (const auto& path : placement.routing) {
    hops += static_cast<long>(path.size()) - 1;
  }
  return static_cast<double>(start_slot - request.release_slot) +
         request.duration + per_hop_delay * static_cast<double>(hops);
}

double apply_action(const SfcEnvironment& env, MdpState& s, const Action& a,
                    StepEvents* events) {
  const auto& rp = env.reward();
  double reward = 0.0;
  switch (a.kind) {
    case Action::Kind::kWait:
      break;
    case Action::Kind::kReject: {
      if (s.head() == nullptr) {
        throw ContractViolation("reject with an empty queue");
      }
      const int index = s.waiting.front();
      s.waiting.erase(s.waiting.begin());
      ++s.blocked;
      reward += rp.blocking_penalty;
      if (events) events->rejected_id = s.request(index).request_id;
      break;
    }
    case Action::Kind::kPlace: {
      const auto* head = s.head();
      if (head == nullptr) throw ContractViolation("place with an empty queue");
      const auto& p = a.placement;
      auto usage = placement_usage(env, *head, p);
      if (p.start_slot != s.clock ||
          p.start_slot + head->duration > head->deadline_slot || !usage ||
          !fits(s, *usage)) {
        throw ContractViolation("infeasible placement for request " +
                                std::to_string(head->request_id));
      }
      for (const auto& [i, v] : usage->cpu) s.residual_cpu[i] -= v;
      for (const auto& [i, v] : usage->bw) s.residual_bw[i] -= v;
      const double delay =
          e2e_delay(*head, p, p.start_slot, env.params().per_hop_delay);
      const double budget = head->deadline_slot - head->release_slot;
      reward -= rp.delay_weight * delay / budget;
      const int index = s.waiting.front();
      s.active.push_back(ActiveSfc{
          index, std::make_shared<const ResourceUsage>(std::move(*usage)),
          p.start_slot + head->duration});
      s.waiting.erase(s.waiting.begin());
      ++s.accepted;
      if (events) {
        events->accepted_id = head->request_id;
        events->accepted_delay = delay;
      }
      break;
    }
  }

  ++s.clock;

  for (std::size_t i = 0; i < s.active.size();) {
    if (s.active[i].completion_slot <= s.clock) {
      const auto& usage = *s.active[i].usage;
      for (const auto& [n, v] : usage.cpu) s.residual_cpu[n] += v;
      for (const auto& [l, v] : usage.bw) s.residual_bw[l] += v;
      ++s.completed;
      reward += rp.completion_reward;
      if (events) {
        events->completed_ids.push_back(
            s.request(s.active[i].request_index).request_id);
      }
      s.active.erase(s.active.begin() + static_cast<long>(i));
    } else {
      ++i;
    }
  }

  while (s.next_arrival < s.workload->size() &&
         (*s.workload)[s.next_arrival].release_slot <= s.clock) {
    s.waiting.push_back(static_cast<int>(s.next_arrival));
    if (events) {
      events->arrived_ids.push_back((*s.workload)[s.next_arrival].request_id);
    }
    ++s.next_arrival;
  }

  for (std::size_t i = 0; i < s.waiting.size();) {
    const auto& r = s.request(s.waiting[i]);
    if (s.clock + r.duration > r.deadline_slot) {
      ++s.blocked;
      reward += rp.blocking_penalty;
      if (events) events->expired_ids.push_back(r.request_id);
      s.waiting.erase(s.waiting.begin() + static_cast<long>(i));
    } else {
      ++i;
    }
  }
  return reward;
}

StepOutcome step(const SfcEnvironment& env, const MdpState& s,
                 const Action& a) {
  StepOutcome out{s, 0.0, {}};
  out.reward = apply_action(env, out.next_state, a, &out.events);
  return out;
}

int utilization_bucket(int used, int capacity) {
  if (capacity <= 0) return used > 0 ? kUtilizationLevels - 1 : 0;
  const long bucket = static_cast<long>(kUtilizationLevels) * used / capacity;
  return static_cast<int>(std::clamp<long>(bucket, 0, kUtilizationLevels - 1));
}

int slack_bucket(int remaining_slack) {
  return std::clamp(remaining_slack, 0, 15) / 5;
}

StateAbstraction abstract_state(const SfcEnvironment& env,
                                const MdpState& s) {
  StateAbstraction out;
  const auto nodes = env.graph().nodes();
  const auto cpu = env.cpu_capacity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int b = utilization_bucket(cpu[i] - s.residual_cpu[i], cpu[i]);
    if (b != 0) out.node_buckets.emplace_back(nodes[i].id, b);
  }
  const auto links = env.graph().links();
  const auto bw = env.bw_capacity();
  for (std::size_t i = 0; i < links.size(); ++i) {
    const int b = utilization_bucket(bw[i] - s.residual_bw[i], bw[i]);
    if (b != 0) out.link_buckets.emplace_back(links[i].u, links[i].v, b);
  }
  for (int index : s.waiting) {
    const auto& r = s.request(index);
    out.waiting.emplace_back(
        r.chain_length(), r.total_cpu(), r.total_bw(),
        slack_bucket(r.deadline_slot - s.clock - r.duration));
  }
  std::sort(out.waiting.begin(), out.waiting.end());
  return out;
}

std::string state_key(const SfcEnvironment& env, const MdpState& s) {
  const auto abs = abstract_state(env, s);
  std::string key = "n";
  for (const auto& [id, b] : abs.node_buckets) {
    append_int(key, id);
    key += ':';
    append_int(key, b);
    key += ',';
  }
  key += "|l";
  for (const auto& [u, v, b] : abs.link_buckets) {
    append_int(key, u);
    key += '-';
    append_int(key, v);
    key += ':';
    append_int(key, b);
    key += ',';
  }
  key += "|w";
  for (const auto& [len, cpu, bw, slack] : abs.waiting) {
    append_int(key, len);
    key += '/';
    append_int(key, cpu);
    key += '/';
    append_int(key, bw);
    key += '/';
    append_int(key, slack);
    key += ',';
  }
  return key;
}

std::optional<std::string> check_invariants(const SfcEnvironment& env,
                                            const MdpState& s) {
  std::vector<long> cpu_used(env.cpu_capacity().size(), 0);
  std::vector<long> bw_used(env.bw_capacity().size(), 0);
  for (const auto& a : s.active) {
    for (const auto& [i, v] : a.usage->cpu) cpu_used[i] += v;
    for (const auto& [i, v] : a.usage->bw) bw_used[i] += v;
    const auto& r = s.request(a.request_index);
    if (a.completion_slot > r.deadline_slot) {
      return "request " + std::to_string(r.request_id) +
             " completes after its deadline";
    }
  }
  for (std::size_t i = 0; i < cpu_used.size(); ++i) {
    if (s.residual_cpu[i] < 0) return "negative cpu residual";
    if (s.residual_cpu[i] + cpu_used[i] != env.cpu_capacity()[i]) {
      return "cpu conservation broken at node index " + std::to_string(i);
    }
  }
  for (std::size_t i = 0; i < bw_used.size(); ++i) {
    if (s.residual_bw[i] < 0) return "negative bandwidth residual";
    if (s.residual_bw[i] + bw_used[i] != env.bw_capacity()[i]) {
      return "bandwidth conservation broken at link index " +
             std::to_string(i);
    }
  }
  return std::nullopt;
}

}  // namespace lisfc
