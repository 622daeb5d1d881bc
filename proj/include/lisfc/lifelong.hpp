#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lisfc/drift.hpp"
#include "lisfc/mdp.hpp"
#include "lisfc/search.hpp"

namespace lisfc {

struct TransferParams {
  DriftWeights weights;
  double kappa = 1.0;
  double delta = 0.05;
  double r_max = 1.0;
  double gamma = 0.99;
  // Tasks with delta_g <= theta seed live trees.
  double theta = 0.5;
  long n_cap = 50;
  long n_min = 5;

  void validate() const;
};

struct ArchivedEdge {
  double q_hat = 0.0;
  long visits = 0;
};

// state_key -> action_sig -> statistics. Ordered so persistence is stable.
using EdgeArchive = std::map<std::string, std::map<std::string, ArchivedEdge>>;

struct TaskRecord {
  std::string task_id;
  std::shared_ptr<const NetworkGraph> graph;
  EdgeArchive edges;
  DriftReport drift_to_current;
  bool drift_fresh = false;
  std::optional<double> d_hat;

  std::size_t edge_count() const;
  const ArchivedEdge* find(const std::string& key,
                           const std::string& sig) const;
};

class KnowledgeBase {
 public:
  explicit KnowledgeBase(TransferParams params = {});

  const TransferParams& params() const { return params_; }
  std::span<const TaskRecord> tasks() const { return tasks_; }
  bool empty() const { return tasks_.empty(); }

  // Throws std::invalid_argument on a duplicate id.
  TaskRecord& add_task(std::string task_id, NetworkGraph graph);
  TaskRecord* find_task(const std::string& task_id);
  const TaskRecord* find_task(const std::string& task_id) const;

  // Recomputes every task's drift to the graph of the task about to run.
  void begin_task(const NetworkGraph& current);
  void require_fresh() const;

 private:
  TransferParams params_;
  std::vector<TaskRecord> tasks_;
};

struct TransferBound {
  std::string task_id;
  double bias = 0.0;
  double confidence = 0.0;
  double u_value = 0.0;
};

// q_i + (c / (1 - gamma)) * delta_g
//     + (2 r_max / (1 - gamma)) * sqrt(ln(2 / delta) / (2 n_i)).
// Throws std::invalid_argument when n_i < 1.
TransferBound auct_bound(double q_i, long n_i, const DriftReport& drift,
                         const TransferParams& params,
                         std::string task_id = {});

// Minimum bound over tasks holding data at the edge; +inf when none does.
double transfer_ucb(const KnowledgeBase& kb, const std::string& state_key,
                    const std::string& action_sig);

// Prior statistics for an edge from the closest task within theta, visits
// capped at n_cap.
std::optional<ArchivedEdge> seed_prior(const KnowledgeBase& kb,
                                       const std::string& state_key,
                                       const std::string& action_sig);

// Serves the knowledge base to the search: transfer bounds for every edge
// and prior seeding for edges of lazily materialized nodes.
class KbOracle : public TransferOracle {
 public:
  explicit KbOracle(const KnowledgeBase& kb, bool seeding = true)
      : kb_(kb), seeding_(seeding) {}
  void lookup(const std::string& state_key, std::span<const std::string> sigs,
              std::span<EdgePrior> out) const override;

 private:
  const KnowledgeBase& kb_;
  bool seeding_;
};

// Seeds every edge of `node` that has no visits yet; returns how many.
template <class Node>
int inject_subtrees(const KnowledgeBase& kb, Node& node) {
  int seeded = 0;
  for (std::size_t i = 0; i < node.edge_count(); ++i) {
    if (node.stats[i].visit_count != 0) continue;
    if (auto prior = seed_prior(kb, node.key, node.sigs[i])) {
      node.stats[i].seed(prior->visits, prior->q_hat);
      node.visits += prior->visits;
      ++seeded;
    }
  }
  return seeded;
}

// Live statistics gathered over the trees of one episode. Edges with fewer
// than n_min live visits are skipped.
class EpisodeArchive {
 public:
  template <class Node>
  void absorb(const std::vector<Node>& tree, long n_min) {
    for (const auto& node : tree) {
      for (std::size_t i = 0; i < node.edge_count(); ++i) {
        const auto& st = node.stats[i];
        if (st.live_visits() >= n_min) add(node.key, node.sigs[i], st.live_q(), st.live_visits());
      }
    }
  }
  void add(const std::string& key, const std::string& sig, double q,
           long visits);
  const EdgeArchive& edges() const { return edges_; }
  bool empty() const { return edges_.empty(); }

 private:
  EdgeArchive edges_;
};

// Merges the archive into the task's record (created on first use):
// visit-weighted mean of q, summed visits capped at n_cap. An empty archive
// leaves the knowledge base untouched. Drifts go stale until the next
// begin_task.
void update_kb(KnowledgeBase& kb, const EpisodeArchive& archive,
               const std::string& task_id, const NetworkGraph& graph);

template <class Node>
void update_kb(KnowledgeBase& kb, const std::vector<Node>& tree,
               const std::string& task_id, const NetworkGraph& graph) {
  EpisodeArchive archive;
  archive.absorb(tree, kb.params().n_min);
  update_kb(kb, archive, task_id, graph);
}

// Text persistence: "# lisfc kb v1", then `task <id> <graph file>` and
// `edge <id> <state_key> <action_sig> <q_hat> <N>` records. Graph
// snapshots are written next to the file.
void save_kb(const std::string& path, const KnowledgeBase& kb);
KnowledgeBase load_kb(const std::string& path, TransferParams params);

// ---- distance estimation ----

class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IsTerm {
  double delta_r = 0.0;
  double delta_p = 0.0;
  double behavior_prob = 0.0;
  double reference_prob = 0.0;
};

// (1/n) sum w_i (delta_r + kappa delta_p), w_i = reference / behavior.
// Throws CoverageError on a non-positive behavior probability.
double estimate_distance(std::span<const IsTerm> terms, double kappa);

// Samples (s, a, s', behavior_prob, reference_prob) against two explicit
// models exposing r(s, a) and p(s, a, s').
template <class Sample, class Model>
double estimate_distance(std::span<const Sample> samples, const Model& a,
                         const Model& b, double kappa) {
  std::vector<IsTerm> terms;
  terms.reserve(samples.size());
  for (const auto& x : samples) {
    terms.push_back(IsTerm{std::abs(a.r(x.s, x.a) - b.r(x.s, x.a)),
                           std::abs(a.p(x.s, x.a, x.next) -
                                    b.p(x.s, x.a, x.next)),
                           x.behavior_prob, x.reference_prob});
  }
  return estimate_distance(std::span<const IsTerm>(terms), kappa);
}

struct SfcSample {
  MdpState state;
  Action action;
};

// Behavior trajectory on `env`: a uniformly random legal action each slot.
std::vector<SfcSample> collect_sfc_samples(
    const SfcEnvironment& env,
    std::shared_ptr<const std::vector<SfcRequest>> workload, Slot slots,
    Rng& rng);

// The same occupancy on another snapshot: active usage is re-indexed by node
// id and link endpoints (dropped where the element is missing) and
// residuals are clamped at zero.
MdpState rebase_state(const SfcEnvironment& from, const SfcEnvironment& to,
                      const MdpState& s);

// One IS term per sample. Transition probabilities are taken on the
// abstract next-state key: the behavior snapshot moves to its recorded key
// with probability 1, the other one with probability 1 iff it reaches the
// same key. An action infeasible on the other snapshot is replaced by
// Reject. pi is the empirical triple frequency and U is uniform over the
// observed triples.
std::vector<IsTerm> sfc_distance_terms(const SfcEnvironment& a,
                                       const SfcEnvironment& b,
                                       std::span<const SfcSample> samples);

double estimate_sfc_distance(const SfcEnvironment& a, const SfcEnvironment& b,
                             std::span<const SfcSample> samples,
                             double kappa);

// Per-step trajectory log row; the counters are this step's event counts.
struct TraceRow {
  Slot slot = 0;
  std::string action_variant;
  int request_id = -1;
  double reward = 0.0;
  int accepted = 0;
  int blocked = 0;
  int completed = 0;
};

void write_trace(std::ostream& out, std::span<const TraceRow> rows);
std::vector<TraceRow> read_trace(std::istream& in);

// Distance between the processes behind two logs, rows aligned by index.
// A step's outcome class is (variant, accepted, blocked, completed); P is
// each log's empirical class frequency, pi the frequency in log a, U
// uniform over the classes seen in either log.
double estimate_trace_distance(std::span<const TraceRow> a,
                               std::span<const TraceRow> b, double kappa);

}  // namespace lisfc
