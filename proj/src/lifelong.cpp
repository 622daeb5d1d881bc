#include "lisfc/lifelong.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

namespace lisfc {

void TransferParams::validate() const {
  weights.validate();
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  if (!(r_max > 0.0)) throw std::invalid_argument("r_max must be positive");
  if (!(theta >= 0.0)) throw std::invalid_argument("theta must be >= 0");
  if (n_cap < 1 || n_min < 1) {
    throw std::invalid_argument("n_cap and n_min must be >= 1");
  }
}

std::size_t TaskRecord::edge_count() const {
  std::size_t n = 0;
  for (const auto& [key, sigs] : edges) n += sigs.size();
  return n;
}

const ArchivedEdge* TaskRecord::find(const std::string& key,
                                     const std::string& sig) const {
  auto it = edges.find(key);
  if (it == edges.end()) return nullptr;
  auto jt = it->second.find(sig);
  return jt == it->second.end() ? nullptr : &jt->second;
}

KnowledgeBase::KnowledgeBase(TransferParams params) : params_(params) {
  params_.validate();
}

TaskRecord& KnowledgeBase::add_task(std::string task_id, NetworkGraph graph) {
  if (find_task(task_id)) {
    throw std::invalid_argument("duplicate task id " + task_id);
  }
  TaskRecord r;
  r.task_id = std::move(task_id);
  r.graph = std::make_shared<const NetworkGraph>(std::move(graph));
  tasks_.push_back(std::move(r));
  return tasks_.back();
}

TaskRecord* KnowledgeBase::find_task(const std::string& task_id) {
  for (auto& t : tasks_) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

const TaskRecord* KnowledgeBase::find_task(const std::string& task_id) const {
  for (const auto& t : tasks_) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

void KnowledgeBase::begin_task(const NetworkGraph& current) {
  for (auto& t : tasks_) {
    t.drift_to_current = graph_drift(*t.graph, current, params_.weights);
    t.drift_fresh = true;
  }
}

void KnowledgeBase::require_fresh() const {
  for (const auto& t : tasks_) {
    if (!t.drift_fresh) {
      throw std::logic_error("drift of task " + t.task_id +
                             " not refreshed for the current task");
    }
  }
}

TransferBound auct_bound(double q_i, long n_i, const DriftReport& drift,
                         const TransferParams& p, std::string task_id) {
  if (n_i < 1) {
    throw std::invalid_argument("no visits from task " + task_id);
  }
  if (!(p.gamma > 0.0 && p.gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  TransferBound b;
  b.task_id = std::move(task_id);
  b.bias = p.weights.lipschitz_c / (1.0 - p.gamma) * drift.delta_g;
  b.confidence = 2.0 * p.r_max / (1.0 - p.gamma) *
                 std::sqrt(std::log(2.0 / p.delta) /
                           (2.0 * static_cast<double>(n_i)));
  b.u_value = q_i + b.bias + b.confidence;
  return b;
}

double transfer_ucb(const KnowledgeBase& kb, const std::string& state_key,
                    const std::string& action_sig) {
  kb.require_fresh();
  double best = kInf;
  for (const auto& t : kb.tasks()) {
    if (const auto* e = t.find(state_key, action_sig)) {
      best = std::min(best, auct_bound(e->q_hat, e->visits, t.drift_to_current,
                                       kb.params())
                                .u_value);
    }
  }
  return best;
}

std::optional<ArchivedEdge> seed_prior(const KnowledgeBase& kb,
                                       const std::string& state_key,
                                       const std::string& action_sig) {
  kb.require_fresh();
  const TaskRecord* closest = nullptr;
  const ArchivedEdge* edge = nullptr;
  for (const auto& t : kb.tasks()) {
    if (t.drift_to_current.delta_g > kb.params().theta) continue;
    const auto* e = t.find(state_key, action_sig);
    if (e == nullptr) continue;
    if (closest == nullptr ||
        t.drift_to_current.delta_g < closest->drift_to_current.delta_g) {
      closest = &t;
      edge = e;
    }
  }
  if (edge == nullptr) return std::nullopt;
  return ArchivedEdge{edge->q_hat, std::min(edge->visits, kb.params().n_cap)};
}

void KbOracle::lookup(const std::string& state_key,
                      std::span<const std::string> sigs,
                      std::span<EdgePrior> out) const {
  if (kb_.empty()) return;
  for (std::size_t i = 0; i < sigs.size(); ++i) {
    out[i].transfer_u = transfer_ucb(kb_, state_key, sigs[i]);
    if (!seeding_) continue;
    if (auto prior = seed_prior(kb_, state_key, sigs[i])) {
      out[i].seed_visits = prior->visits;
      out[i].seed_q = prior->q_hat;
    }
  }
}

void EpisodeArchive::add(const std::string& key, const std::string& sig,
                         double q, long visits) {
  auto& e = edges_[key][sig];
  const long total = e.visits + visits;
  e.q_hat = (e.q_hat * static_cast<double>(e.visits) +
             q * static_cast<double>(visits)) /
            static_cast<double>(total);
  e.visits = total;
}

void update_kb(KnowledgeBase& kb, const EpisodeArchive& archive,
               const std::string& task_id, const NetworkGraph& graph) {
  if (archive.empty()) return;
  TaskRecord* task = kb.find_task(task_id);
  if (task == nullptr) task = &kb.add_task(task_id, graph);
  const long cap = kb.params().n_cap;
  for (const auto& [key, sigs] : archive.edges()) {
    for (const auto& [sig, incoming] : sigs) {
      auto& e = task->edges[key][sig];
      const long total = e.visits + incoming.visits;
      e.q_hat = (e.q_hat * static_cast<double>(e.visits) +
                 incoming.q_hat * static_cast<double>(incoming.visits)) /
                static_cast<double>(total);
      e.visits = std::min(total, cap);
    }
  }
  task->drift_fresh = false;
}

void save_kb(const std::string& path, const KnowledgeBase& kb) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# lisfc kb v1\n" << std::setprecision(17);
  const auto base = std::filesystem::path(path).filename().string();
  for (const auto& t : kb.tasks()) {
    const std::string graph_file = base + "." + t.task_id + ".graph";
    const auto graph_path =
        std::filesystem::path(path).parent_path() / graph_file;
    save_graph(graph_path.string(), *t.graph);
    out << "task " << t.task_id << ' ' << graph_file << "\n";
  }
  for (const auto& t : kb.tasks()) {
    for (const auto& [key, sigs] : t.edges) {
      for (const auto& [sig, e] : sigs) {
        out << "edge " << t.task_id << ' ' << key << ' ' << sig << ' '
            << e.q_hat << ' ' << e.visits << "\n";
      }
    }
  }
}

KnowledgeBase load_kb(const std::string& path, TransferParams params) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "# lisfc kb v1") {
    throw std::runtime_error(path + ": not a v1 knowledge base file");
  }
  KnowledgeBase kb(params);
  const auto dir = std::filesystem::path(path).parent_path();
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "task") {
      std::string id, file;
      if (!(fields >> id >> file)) throw std::runtime_error("bad task: " + line);
      kb.add_task(id, load_graph((dir / file).string()));
    } else if (tag == "edge") {
      std::string id, key, sig;
      ArchivedEdge e;
      if (!(fields >> id >> key >> sig >> e.q_hat >> e.visits) ||
          e.visits < 1) {
        throw std::runtime_error("bad edge: " + line);
      }
      auto* task = kb.find_task(id);
      if (task == nullptr) throw std::runtime_error("edge for unknown task " + id);
      task->edges[key][sig] = e;
    } else {
      throw std::runtime_error("unknown record: " + line);
    }
  }
  return kb;
}

double estimate_distance(std::span<const IsTerm> terms, double kappa) {
  if (terms.empty()) throw std::invalid_argument("no samples");
  double sum = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    if (!(t.behavior_prob > 0.0)) {
      throw CoverageError("sample " + std::to_string(i) +
                          " has zero behavior probability");
    }
    sum += t.reference_prob / t.behavior_prob *
           (t.delta_r + kappa * t.delta_p);
  }
  return sum / static_cast<double>(terms.size());
}

std::vector<SfcSample> collect_sfc_samples(
    const SfcEnvironment& env,
    std::shared_ptr<const std::vector<SfcRequest>> workload, Slot slots,
    Rng& rng) {
  std::vector<SfcSample> out;
  MdpState s = initial_state(env, std::move(workload), slots);
  while (!s.terminal()) {
    auto actions = enumerate_actions(env, s);
    std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
    Action a = actions[pick(rng)];
    out.push_back(SfcSample{s, a});
    apply_action(env, s, a);
  }
  return out;
}

MdpState rebase_state(const SfcEnvironment& from, const SfcEnvironment& to,
                      const MdpState& s) {
  MdpState out = s;
  const auto& gf = from.graph();
  const auto& gt = to.graph();
  std::vector<long> cpu_used(to.cpu_capacity().size(), 0);
  std::vector<long> bw_used(to.bw_capacity().size(), 0);
  for (auto& active : out.active) {
    ResourceUsage mapped;
    for (const auto& [i, v] : active.usage->cpu) {
      if (auto j = gt.node_index(gf.nodes()[i].id)) {
        mapped.cpu.emplace_back(static_cast<int>(*j), v);
        cpu_used[*j] += v;
      }
    }
    for (const auto& [i, v] : active.usage->bw) {
      const auto& l = gf.links()[i];
      if (auto j = gt.link_index(l.u, l.v)) {
        mapped.bw.emplace_back(static_cast<int>(*j), v);
        bw_used[*j] += v;
      }
    }
    active.usage = std::make_shared<const ResourceUsage>(std::move(mapped));
  }
  for (std::size_t j = 0; j < cpu_used.size(); ++j) {
    out.residual_cpu[j] = static_cast<int>(
        std::max(0L, to.cpu_capacity()[j] - cpu_used[j]));
  }
  out.residual_cpu.resize(cpu_used.size());
  out.residual_bw.assign(bw_used.size(), 0);
  for (std::size_t j = 0; j < bw_used.size(); ++j) {
    out.residual_bw[j] =
        static_cast<int>(std::max(0L, to.bw_capacity()[j] - bw_used[j]));
  }
  return out;
}

std::vector<IsTerm> sfc_distance_terms(const SfcEnvironment& a,
                                       const SfcEnvironment& b,
                                       std::span<const SfcSample> samples) {
  struct Row {
    std::string triple;
    double delta_r;
    double delta_p;
  };
  std::vector<Row> rows;
  rows.reserve(samples.size());
  for (const auto& x : samples) {
    MdpState next_a = x.state;
    const double ra = apply_action(a, next_a, x.action);
    MdpState next_b = rebase_state(a, b, x.state);
    const Action& act_b =
        is_feasible(b, next_b, x.action) ? x.action : Action::reject();
    double rb = 0.0;
    if (act_b.kind == Action::Kind::kReject && next_b.head() == nullptr) {
      rb = apply_action(b, next_b, Action::wait());
    } else {
      rb = apply_action(b, next_b, act_b);
    }
    const std::string key_next = state_key(a, next_a);
    const bool same = state_key(b, next_b) == key_next;
    rows.push_back(Row{state_key(a, x.state) + " " + x.action.sig() + " " +
                           key_next,
                       std::abs(ra - rb), same ? 0.0 : 1.0});
  }
  std::map<std::string, long> counts;
  for (const auto& r : rows) ++counts[r.triple];
  const double n = static_cast<double>(rows.size());
  const double u = 1.0 / static_cast<double>(counts.size());
  std::vector<IsTerm> terms;
  terms.reserve(rows.size());
  for (const auto& r : rows) {
    terms.push_back(IsTerm{r.delta_r, r.delta_p,
                           static_cast<double>(counts[r.triple]) / n, u});
  }
  return terms;
}

double estimate_sfc_distance(const SfcEnvironment& a, const SfcEnvironment& b,
                             std::span<const SfcSample> samples,
                             double kappa) {
  const auto terms = sfc_distance_terms(a, b, samples);
  return estimate_distance(std::span<const IsTerm>(terms), kappa);
}

void write_trace(std::ostream& out, std::span<const TraceRow> rows) {
  out << "slot,action_variant,request_id,reward,accepted,blocked,completed\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.slot << ',' << r.action_variant << ',' << r.request_id << ','
        << r.reward << ',' << r.accepted << ',' << r.blocked << ','
        << r.completed << "\n";
  }
}

std::vector<TraceRow> read_trace(std::istream& in) {
  std::vector<TraceRow> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("slot,", 0) == 0) continue;
    }
    std::istringstream fields(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error("bad trace row: " + line);
    TraceRow r;
    try {
      r.slot = std::stoi(cells[0]);
      r.action_variant = cells[1];
      r.request_id = std::stoi(cells[2]);
      r.reward = std::stod(cells[3]);
      r.accepted = std::stoi(cells[4]);
      r.blocked = std::stoi(cells[5]);
      r.completed = std::stoi(cells[6]);
    } catch (const std::logic_error&) {
      throw std::runtime_error("bad trace row: " + line);
    }
    out.push_back(std::move(r));
  }
  return out;
}

double estimate_trace_distance(std::span<const TraceRow> a,
                               std::span<const TraceRow> b, double kappa) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) throw std::invalid_argument("empty trace");
  using Class = std::tuple<std::string, int, int, int>;
  auto cls = [](const TraceRow& r) {
    return Class{r.action_variant, r.accepted, r.blocked, r.completed};
  };
  std::map<Class, double> pa, pb;
  for (std::size_t i = 0; i < n; ++i) {
    pa[cls(a[i])] += 1.0;
    pb[cls(b[i])] += 1.0;
  }
  std::map<Class, int> support;
  for (auto& [c, v] : pa) {
    v /= static_cast<double>(n);
    support[c] = 1;
  }
  for (auto& [c, v] : pb) {
    v /= static_cast<double>(n);
    support[c] = 1;
  }
  const double u = 1.0 / static_cast<double>(support.size());
  std::vector<IsTerm> terms;
  terms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = cls(a[i]);
    const double p_b = pb.count(c) ? pb.at(c) : 0.0;
    terms.push_back(IsTerm{std::abs(a[i].reward - b[i].reward),
                           std::abs(pa.at(c) - p_b), pa.at(c), u});
  }
  return estimate_distance(std::span<const IsTerm>(terms), kappa);
}

}  // namespace lisfc
