#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lisfc {

// Stable node identifier. The same id names the same physical node in every
// snapshot derived from a base topology.
using NodeId = int;
using Path = std::vector<NodeId>;

enum class Region { kAccess, kCore };

const char* to_string(Region region);
Region region_from_string(const std::string& text);

struct Node {
  NodeId id = 0;
  Region region = Region::kAccess;
  int cpu = 0;

  bool operator==(const Node&) const = default;
};

// Undirected link, stored with u < v.
struct Link {
  NodeId u = 0;
  NodeId v = 0;
  int bw = 0;

  bool operator==(const Link&) const = default;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Computing-power-network topology: nodes carry CPU capacity, links carry
// bandwidth. Nodes are kept sorted by id and links by (u, v), so positions in
// nodes()/links() double as dense indices for resource vectors.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  explicit NetworkGraph(std::string id) : id_(std::move(id)) {}

  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  void add_node(NodeId id, Region region, int cpu);
  void add_link(NodeId u, NodeId v, int bw);
  void remove_link(NodeId u, NodeId v);
  void set_cpu(NodeId id, int cpu);
  void set_bw(NodeId u, NodeId v, int bw);

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Link> links() const { return links_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }

  std::optional<std::size_t> node_index(NodeId id) const;
  std::optional<std::size_t> link_index(NodeId u, NodeId v) const;
  bool has_node(NodeId id) const { return node_index(id).has_value(); }
  bool has_link(NodeId u, NodeId v) const {
    return link_index(u, v).has_value();
  }
  const Node& node(NodeId id) const;
  const Link& link(NodeId u, NodeId v) const;

  // Neighbor ids in ascending order.
  std::vector<NodeId> neighbors(NodeId id) const;
  std::vector<NodeId> access_nodes() const;

  bool connected() const;
  long total_cpu() const;
  long total_bw() const;

  bool operator==(const NetworkGraph&) const = default;

 private:
  std::string id_;
  std::vector<Node> nodes_;
  std::vector<Link> links_;
};

struct TopologyConfig {
  int access_cpu_min = 8;
  int access_cpu_max = 16;
  int core_cpu_min = 24;
  int core_cpu_max = 48;
  int bw_min = 10;
  int bw_max = 30;
  double core_fraction = 0.3;
};

// Random connected topology: a random spanning tree plus uniformly chosen
// extra links. floor(core_fraction * n) nodes are core, the rest access.
NetworkGraph build_base_topology(int n_nodes, int n_links, std::uint64_t seed,
                                 const TopologyConfig& config = {});

enum class PerturbationKind { kUpgrade, kDegrade, kMixed };

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kUpgrade;
  double fraction_affected = 0.0;
  double capacity_scale = 1.0;
  double bandwidth_scale = 1.0;
  int links_added = 0;
  int links_removed = 0;
  std::uint64_t seed = 0;
  // Scales for the degrading half of a mixed perturbation.
  double down_capacity_scale = 0.8;
  double down_bandwidth_scale = 0.8;

  static PerturbationSpec upgrade(std::uint64_t seed);
  static PerturbationSpec degrade(std::uint64_t seed);
  static PerturbationSpec mixed(std::uint64_t seed);
};

// Rescales a random subset of node capacities and link bandwidths, adds links
// between unlinked pairs and removes links that are not bridges. Node ids are
// preserved. Throws GraphError when links_removed cannot be met.
NetworkGraph apply_perturbation(const NetworkGraph& g,
                                const PerturbationSpec& spec,
                                const TopologyConfig& config = {});

// Up to k loop-free paths from src to dst, by hop count and then
// lexicographic node sequence. Empty iff dst is unreachable.
std::vector<Path> k_shortest_paths(const NetworkGraph& g, NodeId src,
                                   NodeId dst, int k);

void write_graph(std::ostream& out, const NetworkGraph& g);
NetworkGraph read_graph(std::istream& in);
NetworkGraph load_graph(const std::string& path);
void save_graph(const std::string& path, const NetworkGraph& g);

}  // namespace lisfc
