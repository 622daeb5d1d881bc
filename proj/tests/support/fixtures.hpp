#pragma once

// Shared fixtures: hand-built toy instances and brute-force oracles that do
// not go through the planner code under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lisfc/graph.hpp"
#include "lisfc/mdp.hpp"
#include "lisfc/workload.hpp"

namespace fixtures {

using namespace lisfc;

inline SfcRequest make_request(int id, NodeId in, NodeId out,
                               std::vector<int> cpu, std::vector<int> bw,
                               Slot release, int duration, Slot deadline) {
  SfcRequest r;
  r.request_id = id;
  r.ingress = in;
  r.egress = out;
  r.vnf_demands = std::move(cpu);
  r.flow_demands = std::move(bw);
  r.release_slot = release;
  r.duration = duration;
  r.deadline_slot = deadline;
  return r;
}

inline std::shared_ptr<const std::vector<SfcRequest>> stream(
    std::vector<SfcRequest> v) {
  return std::make_shared<const std::vector<SfcRequest>>(std::move(v));
}

// Two nodes, one link, two scripted requests, horizon 6. Placing the first
// chain as (0,1,1) is the only way to keep the link free enough for the
// second one, whose deadline leaves no room to wait.
struct TinyInstance {
  NetworkGraph graph{"tiny"};
  std::shared_ptr<const std::vector<SfcRequest>> workload;
  MdpParams params;
  Slot horizon = 6;

  TinyInstance() {
    graph.add_node(0, Region::kAccess, 5);
    graph.add_node(1, Region::kAccess, 3);
    graph.add_link(0, 1, 5);
    workload = stream({make_request(0, 0, 1, {2, 1, 1}, {1, 4}, 0, 2, 4),
                       make_request(1, 0, 1, {1, 1, 1}, {3, 3}, 1, 2, 3)});
    params.reward.gamma = 0.5;
  }
  MdpState root(const SfcEnvironment& env) const {
    return initial_state(env, workload, horizon);
  }
};

struct OracleResult {
  double value = 0.0;
  std::map<std::string, double> root_values;
  std::vector<std::string> optimal;
};

// Exhaustive search over every action sequence until the horizon.
inline double sequence_value(const SfcEnvironment& env, const MdpState& s) {
  if (s.terminal()) return 0.0;
  double best = -1e300;
  for (const auto& a : enumerate_actions(env, s)) {
    MdpState next = s;
    const double r = apply_action(env, next, a);
    best = std::max(best, r + env.reward().gamma * sequence_value(env, next));
  }
  return best;
}

inline OracleResult exhaustive_oracle(const SfcEnvironment& env,
                                      const MdpState& root) {
  OracleResult out;
  out.value = -1e300;
  for (const auto& a : enumerate_actions(env, root)) {
    MdpState next = root;
    const double r = apply_action(env, next, a);
    const double v = r + env.reward().gamma * sequence_value(env, next);
    out.root_values[a.sig()] = v;
    out.value = std::max(out.value, v);
  }
  for (const auto& [sig, v] : out.root_values) {
    if (v >= out.value - 1e-9) out.optimal.push_back(sig);
  }
  return out;
}

// Every simple path by DFS, sorted by hop count then node sequence.
inline std::vector<Path> all_simple_paths(const NetworkGraph& g, NodeId src,
                                          NodeId dst) {
  std::vector<Path> out;
  Path current{src};
  std::function<void(NodeId)> dfs = [&](NodeId at) {
    if (at == dst) {
      out.push_back(current);
      return;
    }
    for (NodeId n : g.neighbors(at)) {
      if (std::find(current.begin(), current.end(), n) != current.end()) continue;
      current.push_back(n);
      dfs(n);
      current.pop_back();
    }
  };
  dfs(src);
  std::sort(out.begin(), out.end(), [](const Path& a, const Path& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

}  // namespace fixtures
