#include "lisfc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <utility>

namespace lisfc {

namespace {

std::pair<NodeId, NodeId> ordered(NodeId a, NodeId b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

int scaled(int value, double scale) {
  return std::max(1, static_cast<int>(std::lround(value * scale)));
}

// Picks floor(fraction * n) distinct positions out of [0, n).
std::vector<std::size_t> pick_subset(std::size_t n, double fraction,
                                     std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto count = static_cast<std::size_t>(std::floor(fraction * n + 1e-9));
  order.resize(std::min(count, n));
  std::sort(order.begin(), order.end());
  return order;
}

void rescale(NetworkGraph& g, double fraction, double cpu_scale,
             double bw_scale, std::mt19937_64& rng) {
  const auto nodes = pick_subset(g.node_count(), fraction, rng);
  const auto links = pick_subset(g.link_count(), fraction, rng);
  std::vector<Node> picked_nodes;
  for (auto i : nodes) picked_nodes.push_back(g.nodes()[i]);
  std::vector<Link> picked_links;
  for (auto i : links) picked_links.push_back(g.links()[i]);
  for (const auto& n : picked_nodes) g.set_cpu(n.id, scaled(n.cpu, cpu_scale));
  for (const auto& l : picked_links) g.set_bw(l.u, l.v, scaled(l.bw, bw_scale));
}

std::vector<std::pair<NodeId, NodeId>> unlinked_pairs(const NetworkGraph& g) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  const auto nodes = g.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (!g.has_link(nodes[i].id, nodes[j].id)) {
        pairs.emplace_back(nodes[i].id, nodes[j].id);
      }
    }
  }
  return pairs;
}

void add_random_links(NetworkGraph& g, int count, const TopologyConfig& config,
                      std::mt19937_64& rng,
                      std::vector<std::pair<NodeId, NodeId>>* added) {
  if (count <= 0) return;
  auto pairs = unlinked_pairs(g);
  if (static_cast<int>(pairs.size()) < count) {
    throw GraphError("not enough unlinked node pairs to add links");
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  std::uniform_int_distribution<int> bw(config.bw_min, config.bw_max);
  for (int i = 0; i < count; ++i) {
    g.add_link(pairs[i].first, pairs[i].second, bw(rng));
    if (added != nullptr) added->push_back(pairs[i]);
  }
}

void remove_random_links(NetworkGraph& g, int count, std::mt19937_64& rng,
                         const std::vector<std::pair<NodeId, NodeId>>& keep) {
  for (int removed = 0; removed < count; ++removed) {
    std::vector<Link> candidates(g.links().begin(), g.links().end());
    std::shuffle(candidates.begin(), candidates.end(), rng);
    bool done = false;
    for (const auto& l : candidates) {
      if (std::find(keep.begin(), keep.end(), std::pair{l.u, l.v}) !=
          keep.end()) {
        continue;
      }
      NetworkGraph trial = g;
      trial.remove_link(l.u, l.v);
      if (trial.connected()) {
        g = std::move(trial);
        done = true;
        break;
      }
    }
    if (!done) {
      throw GraphError("cannot remove another link without disconnecting");
    }
  }
}

}  // namespace

const char* to_string(Region region) {
  return region == Region::kCore ? "core" : "access";
}

Region region_from_string(const std::string& text) {
  if (text == "core") return Region::kCore;
  if (text == "access") return Region::kAccess;
  throw GraphError("unknown region '" + text + "'");
}

void NetworkGraph::add_node(NodeId id, Region region, int cpu) {
  if (cpu < 0) throw GraphError("negative cpu capacity");
  auto it = std::lower_bound(
      nodes_.begin(), nodes_.end(), id,
      [](const Node& n, NodeId key) { return n.id < key; });
  if (it != nodes_.end() && it->id == id) {
    throw GraphError("duplicate node " + std::to_string(id));
  }
  nodes_.insert(it, Node{id, region, cpu});
}

void NetworkGraph::add_link(NodeId u, NodeId v, int bw) {
  if (u == v) throw GraphError("self-loop on node " + std::to_string(u));
  if (bw < 0) throw GraphError("negative bandwidth");
  if (!has_node(u) || !has_node(v)) throw GraphError("link to unknown node");
  auto [a, b] = ordered(u, v);
  auto it = std::lower_bound(links_.begin(), links_.end(), std::pair{a, b},
                             [](const Link& l, std::pair<NodeId, NodeId> key) {
                               return std::pair{l.u, l.v} < key;
                             });
  if (it != links_.end() && it->u == a && it->v == b) {
    throw GraphError("duplicate link " + std::to_string(a) + "-" +
                     std::to_string(b));
  }
  links_.insert(it, Link{a, b, bw});
}

void NetworkGraph::remove_link(NodeId u, NodeId v) {
  auto idx = link_index(u, v);
  if (!idx) throw GraphError("no such link");
  links_.erase(links_.begin() + static_cast<std::ptrdiff_t>(*idx));
}

void NetworkGraph::set_cpu(NodeId id, int cpu) {
  auto idx = node_index(id);
  if (!idx) throw GraphError("no such node");
  if (cpu < 0) throw GraphError("negative cpu capacity");
  nodes_[*idx].cpu = cpu;
}

void NetworkGraph::set_bw(NodeId u, NodeId v, int bw) {
  auto idx = link_index(u, v);
  if (!idx) throw GraphError("no such link");
  if (bw < 0) throw GraphError("negative bandwidth");
  links_[*idx].bw = bw;
}

std::optional<std::size_t> NetworkGraph::node_index(NodeId id) const {
  auto it = std::lower_bound(
      nodes_.begin(), nodes_.end(), id,
      [](const Node& n, NodeId key) { return n.id < key; });
  if (it == nodes_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::optional<std::size_t> NetworkGraph::link_index(NodeId u,
                                                    NodeId v) const {
  auto key = ordered(u, v);
  auto it = std::lower_bound(links_.begin(), links_.end(), key,
                             [](const Link& l, std::pair<NodeId, NodeId> k) {
                               return std::pair{l.u, l.v} < k;
                             });
  if (it == links_.end() || it->u != key.first || it->v != key.second) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - links_.begin());
}

const Node& NetworkGraph::node(NodeId id) const {
  auto idx = node_index(id);
  if (!idx) throw GraphError("no such node " + std::to_string(id));
  return nodes_[*idx];
}

const Link& NetworkGraph::link(NodeId u, NodeId v) const {
  auto idx = link_index(u, v);
  if (!idx) throw GraphError("no such link");
  return links_[*idx];
}

std::vector<NodeId> NetworkGraph::neighbors(NodeId id) const {
  std::vector<NodeId> out;
  for (const auto& l : links_) {
    if (l.u == id) out.push_back(l.v);
    if (l.v == id) out.push_back(l.u);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> NetworkGraph::access_nodes() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n.region == Region::kAccess) out.push_back(n.id);
  }
  return out;
}

bool NetworkGraph::connected() const {
  if (nodes_.empty()) return true;
  std::vector<std::vector<std::size_t>> adj(nodes_.size());
  for (const auto& l : links_) {
    auto a = *node_index(l.u);
    auto b = *node_index(l.v);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    for (auto nb : adj[cur]) {
      if (!seen[nb]) {
        seen[nb] = true;
        ++count;
        stack.push_back(nb);
      }
    }
  }
  return count == nodes_.size();
}

long NetworkGraph::total_cpu() const {
  long sum = 0;
  for (const auto& n : nodes_) sum += n.cpu;
  return sum;
}

long NetworkGraph::total_bw() const {
  long sum = 0;
  for (const auto& l : links_) sum += l.bw;
  return sum;
}

NetworkGraph build_base_topology(int n_nodes, int n_links, std::uint64_t seed,
                                 const TopologyConfig& config) {
  if (n_nodes < 1) throw GraphError("need at least one node");
  const long max_links = static_cast<long>(n_nodes) * (n_nodes - 1) / 2;
  if (n_links < n_nodes - 1 || n_links > max_links) {
    throw GraphError("infeasible link count " + std::to_string(n_links) +
                     " for " + std::to_string(n_nodes) + " nodes");
  }
  std::mt19937_64 rng(seed);

  std::vector<NodeId> order(n_nodes);
  for (int i = 0; i < n_nodes; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_core =
      static_cast<int>(std::floor(config.core_fraction * n_nodes + 1e-9));
  std::vector<bool> is_core(n_nodes, false);
  for (int i = 0; i < n_core; ++i) is_core[order[i]] = true;

  std::uniform_int_distribution<int> access_cpu(config.access_cpu_min,
                                                config.access_cpu_max);
  std::uniform_int_distribution<int> core_cpu(config.core_cpu_min,
                                              config.core_cpu_max);
  std::uniform_int_distribution<int> bw(config.bw_min, config.bw_max);

  constexpr int kMaxAttempts = 16;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    NetworkGraph g("G0");
    for (NodeId id = 0; id < n_nodes; ++id) {
      g.add_node(id, is_core[id] ? Region::kCore : Region::kAccess,
                 is_core[id] ? core_cpu(rng) : access_cpu(rng));
    }
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 1; i < n_nodes; ++i) {
      std::uniform_int_distribution<int> parent(0, i - 1);
      g.add_link(order[i], order[parent(rng)], bw(rng));
    }
    add_random_links(g, n_links - (n_nodes - 1), config, rng, nullptr);
    if (g.connected()) return g;
  }
  throw GraphError("failed to build a connected topology");
}

PerturbationSpec PerturbationSpec::upgrade(std::uint64_t seed) {
  PerturbationSpec s;
  s.kind = PerturbationKind::kUpgrade;
  s.fraction_affected = 0.3;
  s.capacity_scale = 1.2;
  s.bandwidth_scale = 1.2;
  s.links_added = 2;
  s.seed = seed;
  return s;
}

PerturbationSpec PerturbationSpec::degrade(std::uint64_t seed) {
  PerturbationSpec s;
  s.kind = PerturbationKind::kDegrade;
  s.fraction_affected = 0.3;
  s.capacity_scale = 0.8;
  s.bandwidth_scale = 0.8;
  s.links_removed = 2;
  s.seed = seed;
  return s;
}

PerturbationSpec PerturbationSpec::mixed(std::uint64_t seed) {
  PerturbationSpec s;
  s.kind = PerturbationKind::kMixed;
  s.fraction_affected = 0.2;
  s.capacity_scale = 1.2;
  s.bandwidth_scale = 1.2;
  s.down_capacity_scale = 0.8;
  s.down_bandwidth_scale = 0.8;
  s.links_added = 2;
  s.links_removed = 2;
  s.seed = seed;
  return s;
}

NetworkGraph apply_perturbation(const NetworkGraph& g,
                                const PerturbationSpec& spec,
                                const TopologyConfig& config) {
  if (spec.fraction_affected < 0.0 || spec.fraction_affected > 1.0) {
    throw GraphError("fraction_affected outside [0, 1]");
  }
  if (spec.capacity_scale <= 0.0 || spec.bandwidth_scale <= 0.0 ||
      spec.down_capacity_scale <= 0.0 || spec.down_bandwidth_scale <= 0.0) {
    throw GraphError("perturbation scales must be positive");
  }
  if (!g.connected()) throw GraphError("perturbation input is disconnected");

  std::mt19937_64 rng(spec.seed);
  NetworkGraph out = g;
  rescale(out, spec.fraction_affected, spec.capacity_scale,
          spec.bandwidth_scale, rng);
  if (spec.kind == PerturbationKind::kMixed) {
    rescale(out, spec.fraction_affected, spec.down_capacity_scale,
            spec.down_bandwidth_scale, rng);
  }
  std::vector<std::pair<NodeId, NodeId>> added;
  add_random_links(out, spec.links_added, config, rng, &added);
  remove_random_links(out, spec.links_removed, rng, added);
  return out;
}

namespace {

class PathEnumerator {
 public:
  PathEnumerator(const NetworkGraph& g, NodeId dst) : g_(g) {
    for (const auto& n : g.nodes()) adj_.push_back(g.neighbors(n.id));
    dist_.assign(g.node_count(), std::numeric_limits<int>::max());
    const auto d = *g.node_index(dst);
    dist_[d] = 0;
    std::queue<std::size_t> q;
    q.push(d);
    while (!q.empty()) {
      auto cur = q.front();
      q.pop();
      for (auto nb : adj_[cur]) {
        auto ni = *g.node_index(nb);
        if (dist_[ni] == std::numeric_limits<int>::max()) {
          dist_[ni] = dist_[cur] + 1;
          q.push(ni);
        }
      }
    }
    dst_ = dst;
  }

  int distance(NodeId id) const { return dist_[*g_.node_index(id)]; }

  // Appends every loop-free path of exactly `hops` hops, in lexicographic
  // order, stopping once `out` holds k paths.
  void collect(NodeId src, int hops, std::size_t k, std::vector<Path>& out) {
    visited_.assign(g_.node_count(), false);
    Path current{src};
    visited_[*g_.node_index(src)] = true;
    dfs(current, hops, k, out);
  }

 private:
  void dfs(Path& current, int remaining, std::size_t k,
           std::vector<Path>& out) {
    if (out.size() >= k) return;
    const NodeId at = current.back();
    if (remaining == 0) {
      if (at == dst_) out.push_back(current);
      return;
    }
    if (at == dst_) return;
    for (NodeId nb : adj_[*g_.node_index(at)]) {
      const auto ni = *g_.node_index(nb);
      if (visited_[ni] || dist_[ni] > remaining - 1) continue;
      visited_[ni] = true;
      current.push_back(nb);
      dfs(current, remaining - 1, k, out);
      current.pop_back();
      visited_[ni] = false;
      if (out.size() >= k) return;
    }
  }

  const NetworkGraph& g_;
  std::vector<std::vector<NodeId>> adj_;
  std::vector<int> dist_;
  std::vector<bool> visited_;
  NodeId dst_ = 0;
};

}  // namespace

std::vector<Path> k_shortest_paths(const NetworkGraph& g, NodeId src,
                                   NodeId dst, int k) {
  if (!g.has_node(src) || !g.has_node(dst)) {
    throw GraphError("path endpoint not in graph");
  }
  std::vector<Path> out;
  if (k <= 0) return out;
  if (src == dst) {
    out.push_back(Path{src});
    return out;
  }
  PathEnumerator paths(g, dst);
  const int shortest = paths.distance(src);
  if (shortest == std::numeric_limits<int>::max()) return out;
  const auto limit = static_cast<int>(g.node_count()) - 1;
  for (int hops = shortest; hops <= limit && out.size() < std::size_t(k);
       ++hops) {
    paths.collect(src, hops, static_cast<std::size_t>(k), out);
  }
  return out;
}

void write_graph(std::ostream& out, const NetworkGraph& g) {
  out << "# lisfc graph v1\n";
  out << "graph " << (g.id().empty() ? "-" : g.id()) << "\n";
  for (const auto& n : g.nodes()) {
    out << "node " << n.id << ' ' << to_string(n.region) << ' ' << n.cpu
        << "\n";
  }
  for (const auto& l : g.links()) {
    out << "link " << l.u << ' ' << l.v << ' ' << l.bw << "\n";
  }
}

NetworkGraph read_graph(std::istream& in) {
  NetworkGraph g;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "graph") {
      std::string id;
      fields >> id;
      g.set_id(id == "-" ? "" : id);
    } else if (tag == "node") {
      NodeId id;
      std::string region;
      int cpu;
      if (!(fields >> id >> region >> cpu)) {
        throw GraphError("malformed node on line " + std::to_string(line_no));
      }
      g.add_node(id, region_from_string(region), cpu);
    } else if (tag == "link") {
      NodeId u, v;
      int bw;
      if (!(fields >> u >> v >> bw)) {
        throw GraphError("malformed link on line " + std::to_string(line_no));
      }
      g.add_link(u, v, bw);
    } else {
      throw GraphError("unknown record '" + tag + "' on line " +
                       std::to_string(line_no));
    }
  }
  return g;
}

NetworkGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open graph file " + path);
  return read_graph(in);
}

void save_graph(const std::string& path, const NetworkGraph& g) {
  std::ofstream out(path);
  if (!out) throw GraphError("cannot write graph file " + path);
  write_graph(out, g);
}

}  // namespace lisfc
