#include "lisfc/workload.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace lisfc {

int SfcRequest::segment_bw(int segment) const {
  if (flow_demands.empty()) return 0;
  const int last = static_cast<int>(flow_demands.size()) - 1;
  return flow_demands[std::clamp(segment - 1, 0, last)];
}

int SfcRequest::total_cpu() const {
  return std::accumulate(vnf_demands.begin(), vnf_demands.end(), 0);
}

int SfcRequest::total_bw() const {
  int sum = 0;
  for (int s = 0; s < segment_count(); ++s) sum += segment_bw(s);
  return sum;
}

void WorkloadSpec::validate() const {
  if (!(base_arrival_rate > 0.0)) {
    throw std::invalid_argument("base_arrival_rate must be positive");
  }
  if (load_factor < 0.0) throw std::invalid_argument("negative load_factor");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (min_chain < 1 || max_chain < min_chain || cpu_min < 1 ||
      cpu_max < cpu_min || bw_min < 1 || bw_max < bw_min ||
      slack_min < 0 || slack_max < slack_min || !(mean_duration >= 1.0)) {
    throw std::invalid_argument("invalid workload demand ranges");
  }
}

std::vector<SfcRequest> generate_workload(const NetworkGraph& g,
                                          const WorkloadSpec& spec) {
  spec.validate();
  if (g.node_count() < 2) {
    throw std::invalid_argument("workload needs a graph with >= 2 nodes");
  }
  std::vector<SfcRequest> out;
  if (spec.load_factor == 0.0) return out;

  std::vector<NodeId> endpoints = g.access_nodes();
  if (endpoints.size() < 2) {
    endpoints.clear();
    for (const auto& n : g.nodes()) endpoints.push_back(n.id);
  }

  std::mt19937_64 rng(spec.seed);
  std::poisson_distribution<int> arrivals(spec.arrival_rate());
  std::uniform_int_distribution<int> chain(spec.min_chain, spec.max_chain);
  std::uniform_int_distribution<int> cpu(spec.cpu_min, spec.cpu_max);
  std::uniform_int_distribution<int> bw(spec.bw_min, spec.bw_max);
  std::geometric_distribution<int> extra_duration(1.0 / spec.mean_duration);
  std::uniform_int_distribution<int> slack(spec.slack_min, spec.slack_max);
  std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0,
                                                        endpoints.size() - 2);

  int next_id = 0;
  for (Slot t = 0; t < spec.horizon; ++t) {
    const int count = arrivals(rng);
    for (int i = 0; i < count; ++i) {
      SfcRequest r;
      r.request_id = next_id++;
      const auto a = pick(rng);
      auto b = pick_other(rng);
      if (b >= a) ++b;
      r.ingress = endpoints[a];
      r.egress = endpoints[b];
      const int k = chain(rng);
      for (int j = 0; j < k; ++j) r.vnf_demands.push_back(cpu(rng));
      for (int j = 0; j + 1 < k; ++j) r.flow_demands.push_back(bw(rng));
      r.release_slot = t;
      r.duration = 1 + extra_duration(rng);
      r.deadline_slot = t + r.duration + slack(rng);
      out.push_back(std::move(r));
    }
  }
  return out;
}

WorkloadSpec scale_load(const WorkloadSpec& spec, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("load factor must be > 0");
  WorkloadSpec out = spec;
  out.load_factor = spec.load_factor * factor;
  return out;
}

std::vector<WorkloadSpec> load_sweep(const WorkloadSpec& spec,
                                     const std::vector<double>& factors) {
  std::vector<WorkloadSpec> out;
  for (double f : factors) {
    WorkloadSpec s = spec;
    s.load_factor = f;
    out.push_back(s);
  }
  return out;
}

namespace {

template <class T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    out << values[i];
  }
  return values.empty() ? "-" : out.str();
}

std::vector<int> split_ints(const std::string& text) {
  std::vector<int> out;
  if (text == "-") return out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stoi(item));
  return out;
}

}  // namespace

void write_workload(std::ostream& out,
                    const std::vector<SfcRequest>& requests) {
  out << "# id ingress egress cpu bw release duration deadline\n";
  for (const auto& r : requests) {
    out << r.request_id << ' ' << r.ingress << ' ' << r.egress << ' '
        << join(r.vnf_demands) << ' ' << join(r.flow_demands) << ' '
        << r.release_slot << ' ' << r.duration << ' ' << r.deadline_slot
        << "\n";
  }
}

std::vector<SfcRequest> read_workload(std::istream& in) {
  std::vector<SfcRequest> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    SfcRequest r;
    std::string cpu, bw;
    if (!(fields >> r.request_id >> r.ingress >> r.egress >> cpu >> bw >>
          r.release_slot >> r.duration >> r.deadline_slot)) {
      throw std::runtime_error("malformed workload line: " + line);
    }
    r.vnf_demands = split_ints(cpu);
    r.flow_demands = split_ints(bw);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lisfc
