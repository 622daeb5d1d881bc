#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lisfc/drift.hpp"
#include "lisfc/graph.hpp"
#include "lisfc/lifelong.hpp"
#include "lisfc/mdp.hpp"
#include "lisfc/search.hpp"
#include "lisfc/workload.hpp"

namespace lisfc {

enum class PlannerKind { kNfHeuristic, kUmcts, kLisfc };

const char* to_string(PlannerKind kind);
PlannerKind planner_kind_from_string(const std::string& text);

struct PlannerSpec {
  std::string name;
  PlannerKind kind = PlannerKind::kNfHeuristic;
  UctParams uct;
  TransferParams transfer;
  bool seeding = true;
};

struct Decision {
  Action action;
  int sims_used = 0;
};

class Planner {
 public:
  virtual ~Planner() = default;
  virtual Decision decide(const MdpState& s, Rng& rng) = 0;
  virtual void end_episode() {}
};

// kb is required for lisfc and must outlive the planner; its drifts are
// refreshed against env's graph and the episode is archived under task_id
// when end_episode() runs.
std::unique_ptr<Planner> make_planner(const PlannerSpec& spec,
                                      const SfcEnvironment& env,
                                      KnowledgeBase* kb = nullptr,
                                      std::string task_id = {});

// One row per planner decision on a queue head, plus one row per request
// that expired while waiting (action "expire", sims_used 0).
struct DecisionRow {
  std::string planner;
  std::string graph;
  double load = 0.0;
  std::uint64_t seed = 0;
  long decision = 0;
  Slot slot = 0;
  int request_id = -1;
  std::string action;
  bool blocked = false;
  bool accepted = false;
  std::optional<double> delay;
  int sims_used = 0;
};

struct RunSummary {
  long decisions = 0;  // rows, expiries included
  long planner_decisions = 0;
  long accepted = 0;
  long blocked = 0;
  long pending = 0;
  double blocking = 0.0;
  std::optional<double> p95_delay;
  double mean_sims = 0.0;
};

struct MetricsRecord {
  std::vector<DecisionRow> rows;
  std::vector<TraceRow> trace;
  RunSummary summary;
  std::vector<double> running_blocking;
};

// Nearest rank: the ceil(p/100 * n)-th order statistic.
double percentile(std::vector<double> values, double p);

// Aggregates recomputed from the rows alone (pending is left at 0).
RunSummary summarize(std::span<const DecisionRow> rows);

// Cumulative blocked / t after each row t = 1..n.
std::vector<double> running_blocking(std::span<const DecisionRow> rows);

// First 1-based t after which every value stays within rel * |final| of
// the final value; 0 for an empty series.
long decisions_to_within(std::span<const double> series, double rel = 0.1);

struct EpisodeLabels {
  std::string planner;
  std::string graph;
  double load = 0.0;
  std::uint64_t seed = 0;
};

// Drives the MDP from the empty state until `horizon`, asking the planner
// once per slot in which a request waits. With check_invariants set every
// state is validated and a violation throws ContractViolation.
MetricsRecord run_episode(const SfcEnvironment& env,
                          std::shared_ptr<const std::vector<SfcRequest>> workload,
                          Slot horizon, Planner& planner, std::uint64_t seed,
                          const EpisodeLabels& labels = {},
                          bool check_invariants = false);

enum class ScenarioKind { kLoadSweep, kDriftTransfer, kConvergence };

const char* to_string(ScenarioKind kind);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kLoadSweep;
  int nodes = 20;
  int links = 40;
  std::uint64_t graph_seed = 1;
  std::uint64_t perturb_seed = 7;
  TopologyConfig topology;
  WorkloadSpec workload;
  MdpParams mdp;
  std::vector<PlannerSpec> planners;
  std::vector<std::uint64_t> seeds;
  std::vector<double> loads{1.0};
  int warmup_episodes = 1;
  std::uint64_t warmup_seed_offset = 1000;
  bool write_traces = false;

  void validate() const;
  const PlannerSpec* planner(PlannerKind kind) const;
};

// INI sections [graph], [workload], [scenario] and [planner.<name>].
ScenarioConfig load_scenario_config(const std::string& path,
                                    std::uint64_t seed_offset = 0);
ScenarioConfig parse_scenario_config(std::istream& in,
                                     std::uint64_t seed_offset = 0);

struct RunResult {
  std::string planner;
  std::string graph;
  double load = 0.0;
  double delta_g = 0.0;
  std::uint64_t seed = 0;
  MetricsRecord metrics;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<NetworkGraph> graphs;
  std::vector<DriftReport> drifts;  // from G0, per graph
  std::vector<RunResult> runs;
};

// G0 and its upgrade/degrade/mixed variants G1..G3.
std::vector<NetworkGraph> scenario_graphs(const ScenarioConfig& config);

// Load factor times the mean CPU-time demand per slot over total capacity.
double normalized_load(const WorkloadSpec& spec, const NetworkGraph& g,
                       double load_factor);

ScenarioResult run_scenario(const ScenarioConfig& config,
                            std::ostream* progress = nullptr);

struct AggregateRow {
  std::string planner;
  std::string graph;
  double load = 0.0;
  double normalized_load = 0.0;
  double delta_g = 0.0;
  int seeds = 0;
  double blocking_mean = 0.0;
  double blocking_se = 0.0;
  std::optional<double> p95_mean;
  std::optional<double> p95_se;
  double sims_mean = 0.0;
  double sims_se = 0.0;
  double final_running_mean = 0.0;
  double converge_decisions_mean = 0.0;
};

// One row per (planner, graph, load), in run order of first appearance.
std::vector<AggregateRow> aggregate(const ScenarioResult& result);

const AggregateRow* find_aggregate(std::span<const AggregateRow> rows,
                                   const std::string& planner,
                                   const std::string& graph, double load);

void write_decisions_csv(std::ostream& out, const ScenarioResult& result);
void write_aggregates_csv(std::ostream& out, const ScenarioResult& result,
                          std::span<const AggregateRow> rows);

// decisions.csv, aggregates.csv and curves/*.dat (plus traces/ when
// enabled) under dir.
void write_outputs(const ScenarioResult& result, const std::string& dir);

}  // namespace lisfc
