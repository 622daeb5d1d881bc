#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lisfc/graph.hpp"

namespace lisfc {

using Slot = int;

// One service function chain request. A k-VNF chain has k-1 flow demands;
// it is routed as k+1 segments (ingress->VNF1, VNFj->VNFj+1, VNFk->egress)
// and segment_bw() maps each segment to the demand of its upstream element.
struct SfcRequest {
  int request_id = 0;
  NodeId ingress = 0;
  NodeId egress = 0;
  std::vector<int> vnf_demands;
  std::vector<int> flow_demands;
  Slot release_slot = 0;
  int duration = 1;
  Slot deadline_slot = 0;

  int chain_length() const { return static_cast<int>(vnf_demands.size()); }
  int segment_count() const { return chain_length() + 1; }
  int segment_bw(int segment) const;
  int total_cpu() const;
  int total_bw() const;

  bool operator==(const SfcRequest&) const = default;
};

struct WorkloadSpec {
  double base_arrival_rate = 0.5;
  double load_factor = 1.0;
  int horizon = 100;
  int min_chain = 3;
  int max_chain = 5;
  int cpu_min = 1;
  int cpu_max = 4;
  int bw_min = 1;
  int bw_max = 3;
  double mean_duration = 10.0;
  int slack_min = 5;
  int slack_max = 15;
  std::uint64_t seed = 0;

  double arrival_rate() const { return base_arrival_rate * load_factor; }
  void validate() const;
};

// Poisson arrivals per slot over [0, horizon), sorted by release slot with
// request ids assigned in order. Ingress/egress are two distinct access
// nodes, falling back to all nodes when fewer than two access nodes exist.
std::vector<SfcRequest> generate_workload(const NetworkGraph& g,
                                          const WorkloadSpec& spec);

WorkloadSpec scale_load(const WorkloadSpec& spec, double factor);

// Specs at each load factor of the grid, in grid order.
std::vector<WorkloadSpec> load_sweep(const WorkloadSpec& spec,
                                     const std::vector<double>& factors);

void write_workload(std::ostream& out, const std::vector<SfcRequest>& requests);
std::vector<SfcRequest> read_workload(std::istream& in);

}  // namespace lisfc
