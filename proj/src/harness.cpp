#include "lisfc/harness.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lisfc/baselines.hpp"
#include "lisfc/sfc_domain.hpp"

namespace lisfc {

const char* to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::kNfHeuristic:
      return "nf_heuristic";
    case PlannerKind::kUmcts:
      return "umcts";
    case PlannerKind::kLisfc:
      return "lisfc";
  }
  return "?";
}

PlannerKind planner_kind_from_string(const std::string& text) {
  if (text == "nf_heuristic" || text == "nf") return PlannerKind::kNfHeuristic;
  if (text == "umcts" || text == "uct") return PlannerKind::kUmcts;
  if (text == "lisfc") return PlannerKind::kLisfc;
  throw std::invalid_argument("unknown planner kind '" + text + "'");
}

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kLoadSweep:
      return "load_sweep";
    case ScenarioKind::kDriftTransfer:
      return "drift_transfer";
    case ScenarioKind::kConvergence:
      return "convergence";
  }
  return "?";
}

namespace {

ScenarioKind scenario_kind_from_string(const std::string& text) {
  if (text == "load_sweep") return ScenarioKind::kLoadSweep;
  if (text == "drift_transfer") return ScenarioKind::kDriftTransfer;
  if (text == "convergence") return ScenarioKind::kConvergence;
  throw std::invalid_argument("unknown scenario id '" + text + "'");
}

class NfPlanner : public Planner {
 public:
  NfPlanner(const SfcEnvironment& env) : env_(env) {}
  Decision decide(const MdpState& s, Rng&) override {
    return Decision{nf_heuristic(env_, s, env_.params().k_paths), 0};
  }

 private:
  const SfcEnvironment& env_;
};

class UctPlanner : public Planner {
 public:
  UctPlanner(const SfcEnvironment& env, const UctParams& params)
      : domain_(env), search_(domain_, params) {}
  Decision decide(const MdpState& s, Rng& rng) override {
    auto r = search_.plan(s, rng);
    return Decision{std::move(r.action), r.sims_used};
  }

 private:
  SfcDomain domain_;
  UctSearch<SfcDomain> search_;
};

class LisfcPlanner : public Planner {
 public:
  LisfcPlanner(const SfcEnvironment& env, const PlannerSpec& spec,
               KnowledgeBase& kb, std::string task_id)
      : env_(env),
        kb_(kb),
        task_id_(std::move(task_id)),
        domain_(env),
        oracle_(kb, spec.seeding),
        search_(domain_, spec.uct, &oracle_) {
    kb_.begin_task(env.graph());
  }
  Decision decide(const MdpState& s, Rng& rng) override {
    auto r = search_.plan(s, rng);
    archive_.absorb(search_.tree(), kb_.params().n_min);
    return Decision{std::move(r.action), r.sims_used};
  }
  void end_episode() override {
    update_kb(kb_, archive_, task_id_, env_.graph());
    archive_ = EpisodeArchive{};
  }

 private:
  const SfcEnvironment& env_;
  KnowledgeBase& kb_;
  std::string task_id_;
  SfcDomain domain_;
  KbOracle oracle_;
  UctSearch<SfcDomain> search_;
  EpisodeArchive archive_;
};

}  // namespace

std::unique_ptr<Planner> make_planner(const PlannerSpec& spec,
                                      const SfcEnvironment& env,
                                      KnowledgeBase* kb, std::string task_id) {
  switch (spec.kind) {
    case PlannerKind::kNfHeuristic:
      return std::make_unique<NfPlanner>(env);
    case PlannerKind::kUmcts:
      return std::make_unique<UctPlanner>(env, spec.uct);
    case PlannerKind::kLisfc:
      if (kb == nullptr) {
        throw std::invalid_argument("lisfc planner needs a knowledge base");
      }
      return std::make_unique<LisfcPlanner>(env, spec, *kb,
                                            task_id.empty() ? env.graph().id()
                                                            : task_id);
  }
  throw std::invalid_argument("unknown planner kind");
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of no values");
  if (!(p > 0.0 && p <= 100.0)) {
    throw std::invalid_argument("percentile rank must lie in (0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

RunSummary summarize(std::span<const DecisionRow> rows) {
  RunSummary s;
  std::vector<double> delays;
  long sims = 0;
  for (const auto& r : rows) {
    ++s.decisions;
    if (r.blocked) ++s.blocked;
    if (r.accepted) ++s.accepted;
    if (r.delay) delays.push_back(*r.delay);
    if (r.action != "expire") {
      ++s.planner_decisions;
      sims += r.sims_used;
    }
  }
  const long finished = s.accepted + s.blocked;
  s.blocking = finished > 0 ? static_cast<double>(s.blocked) /
                                  static_cast<double>(finished)
                            : 0.0;
  if (!delays.empty()) s.p95_delay = percentile(delays, 95.0);
  s.mean_sims = s.planner_decisions > 0
                    ? static_cast<double>(sims) /
                          static_cast<double>(s.planner_decisions)
                    : 0.0;
  return s;
}

std::vector<double> running_blocking(std::span<const DecisionRow> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  long blocked = 0;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].blocked) ++blocked;
    out.push_back(static_cast<double>(blocked) / static_cast<double>(t + 1));
  }
  return out;
}

long decisions_to_within(std::span<const double> series, double rel) {
  if (series.empty()) return 0;
  const double final_value = series.back();
  const double tol = rel * std::abs(final_value);
  long t = static_cast<long>(series.size());
  for (long i = static_cast<long>(series.size()) - 1; i >= 0; --i) {
    if (std::abs(series[i] - final_value) > tol + 1e-12) break;
    t = i + 1;
  }
  return t;
}

MetricsRecord run_episode(const SfcEnvironment& env,
                          std::shared_ptr<const std::vector<SfcRequest>> workload,
                          Slot horizon, Planner& planner, std::uint64_t seed,
                          const EpisodeLabels& labels, bool check) {
  MetricsRecord m;
  MdpState s = initial_state(env, std::move(workload), horizon);
  Rng rng(seed);
  auto row = [&](Slot slot, int request_id, std::string action) {
    DecisionRow r;
    r.planner = labels.planner;
    r.graph = labels.graph;
    r.load = labels.load;
    r.seed = labels.seed;
    r.decision = static_cast<long>(m.rows.size()) + 1;
    r.slot = slot;
    r.request_id = request_id;
    r.action = std::move(action);
    return r;
  };
  while (!s.terminal()) {
    const Slot slot = s.clock;
    Action action = Action::wait();
    int head_id = -1;
    if (const auto* head = s.head()) {
      head_id = head->request_id;
      Decision d;
      try {
        d = planner.decide(s, rng);
      } catch (const std::exception& e) {
        throw std::runtime_error("planner " + labels.planner + " failed at slot " +
                                 std::to_string(slot) + ": " + e.what());
      }
      action = std::move(d.action);
      DecisionRow r = row(slot, head_id, action.variant());
      r.sims_used = d.sims_used;
      r.blocked = action.kind == Action::Kind::kReject;
      r.accepted = action.kind == Action::Kind::kPlace;
      if (r.accepted) {
        r.delay = e2e_delay(*head, action.placement, slot,
                            env.params().per_hop_delay);
      }
      m.rows.push_back(std::move(r));
    }
    StepEvents ev;
    const double reward = apply_action(env, s, action, &ev);
    for (int id : ev.expired_ids) {
      DecisionRow r = row(slot, id, "expire");
      r.blocked = true;
      m.rows.push_back(std::move(r));
    }
    m.trace.push_back(TraceRow{slot, action.variant(), head_id, reward,
                               ev.accepted_id ? 1 : 0, ev.blocked_count(),
                               static_cast<int>(ev.completed_ids.size())});
    if (check) {
      if (auto violation = check_invariants(env, s)) {
        throw ContractViolation("slot " + std::to_string(slot) + ": " +
                                *violation);
      }
    }
  }
  planner.end_episode();
  m.summary = summarize(m.rows);
  m.summary.pending =
      static_cast<long>(s.waiting.size() + s.pending_count());
  m.running_blocking = running_blocking(m.rows);
  return m;
}

void ScenarioConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("scenario needs >= 1 seed");
  if (planners.empty()) throw std::invalid_argument("scenario needs planners");
  if (loads.empty()) throw std::invalid_argument("scenario needs >= 1 load");
  for (double l : loads) {
    if (!(l > 0.0)) throw std::invalid_argument("loads must be positive");
  }
  if (warmup_episodes < 0) throw std::invalid_argument("negative warmup");
  workload.validate();
  mdp.reward.validate();
  for (const auto& p : planners) {
    p.uct.validate();
    if (p.kind == PlannerKind::kLisfc) p.transfer.validate();
  }
}

const PlannerSpec* ScenarioConfig::planner(PlannerKind kind) const {
  for (const auto& p : planners) {
    if (p.kind == kind) return &p;
  }
  return nullptr;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

using Tree = boost::property_tree::ptree;

std::optional<double> optional_value(const Tree& t, const char* key) {
  if (auto v = t.get_optional<double>(key)) return *v;
  return std::nullopt;
}

const Tree& section(const Tree& root, const std::string& name) {
  static const Tree empty;
  for (const auto& [key, child] : root) {
    if (key == name) return child;
  }
  return empty;
}

}  // namespace

ScenarioConfig parse_scenario_config(std::istream& in,
                                     std::uint64_t seed_offset) {
  Tree root;
  boost::property_tree::read_ini(in, root);
  ScenarioConfig c;

  const Tree& g = section(root, "graph");
  c.nodes = g.get("nodes", c.nodes);
  c.links = g.get("links", c.links);
  c.graph_seed = g.get("seed", c.graph_seed);
  c.perturb_seed = g.get("perturb_seed", c.perturb_seed);
  auto& t = c.topology;
  t.access_cpu_min = g.get("access_cpu_min", t.access_cpu_min);
  t.access_cpu_max = g.get("access_cpu_max", t.access_cpu_max);
  t.core_cpu_min = g.get("core_cpu_min", t.core_cpu_min);
  t.core_cpu_max = g.get("core_cpu_max", t.core_cpu_max);
  t.bw_min = g.get("bw_min", t.bw_min);
  t.bw_max = g.get("bw_max", t.bw_max);
  t.core_fraction = g.get("core_fraction", t.core_fraction);

  const Tree& w = section(root, "workload");
  auto& ws = c.workload;
  ws.base_arrival_rate = w.get("base_arrival_rate", ws.base_arrival_rate);
  ws.load_factor = w.get("load_factor", ws.load_factor);
  ws.horizon = w.get("horizon", ws.horizon);
  ws.min_chain = w.get("min_chain", ws.min_chain);
  ws.max_chain = w.get("max_chain", ws.max_chain);
  ws.cpu_min = w.get("cpu_min", ws.cpu_min);
  ws.cpu_max = w.get("cpu_max", ws.cpu_max);
  ws.bw_min = w.get("bw_min", ws.bw_min);
  ws.bw_max = w.get("bw_max", ws.bw_max);
  ws.mean_duration = w.get("mean_duration", ws.mean_duration);
  ws.slack_min = w.get("slack_min", ws.slack_min);
  ws.slack_max = w.get("slack_max", ws.slack_max);

  const Tree& s = section(root, "scenario");
  c.kind = scenario_kind_from_string(s.get<std::string>("id", "load_sweep"));
  auto& r = c.mdp.reward;
  r.completion_reward = s.get("completion_reward", r.completion_reward);
  r.blocking_penalty = s.get("blocking_penalty", r.blocking_penalty);
  r.delay_weight = s.get("delay_weight", r.delay_weight);
  r.gamma = s.get("gamma", r.gamma);
  r.r_max = s.get("r_max", r.r_max);
  c.mdp.k_paths = s.get("k_paths", c.mdp.k_paths);
  c.mdp.a_max = s.get("a_max", c.mdp.a_max);
  c.mdp.per_hop_delay = s.get("per_hop_delay", c.mdp.per_hop_delay);
  c.warmup_episodes = s.get("warmup_episodes", c.warmup_episodes);
  c.warmup_seed_offset = s.get("warmup_seed_offset", c.warmup_seed_offset);
  c.write_traces = s.get("traces", c.write_traces);
  if (auto loads = s.get_optional<std::string>("loads")) {
    c.loads.clear();
    for (const auto& x : split_list(*loads)) c.loads.push_back(std::stod(x));
  }
  if (auto list = s.get_optional<std::string>("seed_list")) {
    for (const auto& x : split_list(*list)) {
      c.seeds.push_back(std::stoull(x) + seed_offset);
    }
  } else {
    const int count = s.get("seeds", 10);
    const auto base = s.get<std::uint64_t>("seed_base", 1);
    for (int i = 0; i < count; ++i) {
      c.seeds.push_back(base + seed_offset + static_cast<std::uint64_t>(i));
    }
  }

  const auto names = split_list(
      s.get<std::string>("planners", "nf_heuristic,umcts,lisfc"));
  for (const auto& name : names) {
    const Tree& p = section(root, "planner." + name);
    PlannerSpec spec;
    spec.name = name;
    spec.kind = planner_kind_from_string(p.get<std::string>("kind", name));
    auto& u = spec.uct;
    u.exploration_c = optional_value(p, "exploration_c");
    u.budget = p.get("budget", u.budget);
    u.rollout_horizon = p.get("rollout_horizon", u.rollout_horizon);
    u.max_depth = p.get("max_depth", u.max_depth);
    u.delta = p.get("delta", u.delta);
    u.early_stop = p.get("early_stop", u.early_stop);
    auto& tp = spec.transfer;
    tp.delta = u.delta;
    tp.gamma = r.gamma;
    tp.r_max = r.r_max;
    tp.kappa = p.get("kappa", tp.kappa);
    tp.theta = p.get("theta", tp.theta);
    tp.n_cap = p.get("n_cap", tp.n_cap);
    tp.n_min = p.get("n_min", tp.n_min);
    auto& dw = tp.weights;
    dw.w_spec = p.get("w_spec", dw.w_spec);
    dw.w_cap = p.get("w_cap", dw.w_cap);
    dw.w_bw = p.get("w_bw", dw.w_bw);
    dw.w_edit = p.get("w_edit", dw.w_edit);
    dw.rho_spec = optional_value(p, "rho_spec");
    dw.rho_cap = optional_value(p, "rho_cap");
    dw.rho_bw = optional_value(p, "rho_bw");
    dw.rho_edit = optional_value(p, "rho_edit");
    dw.lipschitz_c = p.get("lipschitz_c", dw.lipschitz_c);
    spec.seeding = p.get("seeding", spec.seeding);
    c.planners.push_back(std::move(spec));
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario_config(const std::string& path,
                                    std::uint64_t seed_offset) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path);
  try {
    return parse_scenario_config(in, seed_offset);
  } catch (const boost::property_tree::ptree_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::vector<NetworkGraph> scenario_graphs(const ScenarioConfig& config) {
  std::vector<NetworkGraph> out;
  out.push_back(build_base_topology(config.nodes, config.links,
                                    config.graph_seed, config.topology));
  const NetworkGraph g0 = out.front();
  auto add = [&](PerturbationSpec spec, const char* id) {
    NetworkGraph g = apply_perturbation(g0, spec, config.topology);
    g.set_id(id);
    out.push_back(std::move(g));
  };
  add(PerturbationSpec::upgrade(config.perturb_seed), "G1");
  add(PerturbationSpec::degrade(config.perturb_seed), "G2");
  add(PerturbationSpec::mixed(config.perturb_seed), "G3");
  return out;
}

double normalized_load(const WorkloadSpec& spec, const NetworkGraph& g,
                       double load_factor) {
  const double chain = 0.5 * (spec.min_chain + spec.max_chain);
  const double cpu = 0.5 * (spec.cpu_min + spec.cpu_max);
  const double demand =
      load_factor * spec.base_arrival_rate * chain * cpu * spec.mean_duration;
  return demand / static_cast<double>(std::max(1L, g.total_cpu()));
}

namespace {

std::shared_ptr<const std::vector<SfcRequest>> make_workload(
    const NetworkGraph& g, WorkloadSpec spec, double load,
    std::uint64_t seed) {
  spec.load_factor = load;
  spec.seed = seed;
  return std::make_shared<const std::vector<SfcRequest>>(
      generate_workload(g, spec));
}

void report(std::ostream* progress, const RunResult& r) {
  if (progress == nullptr) return;
  *progress << r.planner << ' ' << r.graph << " load=" << r.load
            << " seed=" << r.seed << " blocking=" << r.metrics.summary.blocking
            << " sims=" << r.metrics.summary.mean_sims << "\n";
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config,
                            std::ostream* progress) {
  config.validate();
  ScenarioResult result;
  result.config = config;
  const auto all = scenario_graphs(config);
  const Slot horizon = config.workload.horizon;
  DriftWeights weights;
  if (const auto* lisfc = config.planner(PlannerKind::kLisfc)) {
    weights = lisfc->transfer.weights;
  }

  if (config.kind == ScenarioKind::kLoadSweep) {
    result.graphs.push_back(all.front());
    result.drifts.push_back(graph_drift(all.front(), all.front(), weights));
    const SfcEnvironment env(all.front(), config.mdp);
    for (double load : config.loads) {
      for (auto seed : config.seeds) {
        auto wl = make_workload(env.graph(), config.workload, load, seed);
        for (const auto& spec : config.planners) {
          KnowledgeBase kb(spec.transfer);
          auto planner = make_planner(spec, env, &kb, env.graph().id());
          RunResult r{spec.name, env.graph().id(), load, 0.0, seed, {}};
          r.metrics = run_episode(env, wl, horizon, *planner, seed,
                                  {spec.name, r.graph, load, seed});
          report(progress, r);
          result.runs.push_back(std::move(r));
        }
      }
    }
    return result;
  }

  result.graphs = all;
  for (const auto& g : all) {
    result.drifts.push_back(graph_drift(all.front(), g, weights));
  }
  std::vector<SfcEnvironment> envs;
  envs.reserve(all.size());
  for (const auto& g : all) envs.emplace_back(g, config.mdp);
  const double load = config.workload.load_factor;
  const auto* lisfc = config.planner(PlannerKind::kLisfc);

  for (auto seed : config.seeds) {
    std::optional<KnowledgeBase> warm;
    if (lisfc != nullptr) {
      warm.emplace(lisfc->transfer);
      for (int w = 0; w < config.warmup_episodes; ++w) {
        const auto wseed = seed + config.warmup_seed_offset +
                           static_cast<std::uint64_t>(w);
        auto wl = make_workload(envs[0].graph(), config.workload, load, wseed);
        auto planner = make_planner(*lisfc, envs[0], &*warm, envs[0].graph().id());
        run_episode(envs[0], wl, horizon, *planner, wseed);
      }
    }
    auto wl = make_workload(envs[0].graph(), config.workload, load, seed);
    for (std::size_t k = 0; k < envs.size(); ++k) {
      const auto& env = envs[k];
      for (const auto& spec : config.planners) {
        std::optional<KnowledgeBase> kb;
        if (spec.kind == PlannerKind::kLisfc) kb = *warm;
        auto planner =
            make_planner(spec, env, kb ? &*kb : nullptr, env.graph().id());
        RunResult r{spec.name, env.graph().id(), load,
                    result.drifts[k].delta_g, seed, {}};
        r.metrics = run_episode(env, wl, horizon, *planner, seed,
                                {spec.name, r.graph, load, seed});
        report(progress, r);
        result.runs.push_back(std::move(r));
      }
    }
  }
  return result;
}

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

}  // namespace

std::vector<AggregateRow> aggregate(const ScenarioResult& result) {
  struct Group {
    AggregateRow row;
    std::vector<double> blocking, p95, sims, final_running, converge;
  };
  std::vector<Group> groups;
  const auto& g0 = result.graphs.front();
  for (const auto& run : result.runs) {
    Group* group = nullptr;
    for (auto& g : groups) {
      if (g.row.planner == run.planner && g.row.graph == run.graph &&
          g.row.load == run.load) {
        group = &g;
        break;
      }
    }
    if (group == nullptr) {
      groups.emplace_back();
      group = &groups.back();
      group->row.planner = run.planner;
      group->row.graph = run.graph;
      group->row.load = run.load;
      group->row.normalized_load =
          normalized_load(result.config.workload, g0, run.load);
      group->row.delta_g = run.delta_g;
    }
    const auto summary = summarize(run.metrics.rows);
    group->blocking.push_back(summary.blocking);
    if (summary.p95_delay) group->p95.push_back(*summary.p95_delay);
    group->sims.push_back(summary.mean_sims);
    const auto series = running_blocking(run.metrics.rows);
    group->final_running.push_back(series.empty() ? 0.0 : series.back());
    group->converge.push_back(
        static_cast<double>(decisions_to_within(series, 0.1)));
  }
  std::vector<AggregateRow> out;
  for (auto& g : groups) {
    g.row.seeds = static_cast<int>(g.blocking.size());
    const auto b = mean_se(g.blocking);
    g.row.blocking_mean = b.mean;
    g.row.blocking_se = b.se;
    if (!g.p95.empty()) {
      const auto p = mean_se(g.p95);
      g.row.p95_mean = p.mean;
      g.row.p95_se = p.se;
    }
    const auto s = mean_se(g.sims);
    g.row.sims_mean = s.mean;
    g.row.sims_se = s.se;
    g.row.final_running_mean = mean_se(g.final_running).mean;
    g.row.converge_decisions_mean = mean_se(g.converge).mean;
    out.push_back(g.row);
  }
  return out;
}

const AggregateRow* find_aggregate(std::span<const AggregateRow> rows,
                                   const std::string& planner,
                                   const std::string& graph, double load) {
  for (const auto& r : rows) {
    if (r.planner == planner && r.graph == graph &&
        std::abs(r.load - load) < 1e-12) {
      return &r;
    }
  }
  return nullptr;
}

namespace {

std::string opt(const std::optional<double>& v) {
  if (!v) return "nan";
  std::ostringstream out;
  out << std::setprecision(10) << *v;
  return out.str();
}

}  // namespace

void write_decisions_csv(std::ostream& out, const ScenarioResult& result) {
  out << "scenario,planner,graph,load,seed,decision,slot,request_id,action,"
         "blocked,accepted,delay,sims_used\n";
  out << std::setprecision(10);
  const char* id = to_string(result.config.kind);
  for (const auto& run : result.runs) {
    for (const auto& r : run.metrics.rows) {
      out << id << ',' << r.planner << ',' << r.graph << ',' << r.load << ','
          << r.seed << ',' << r.decision << ',' << r.slot << ','
          << r.request_id << ',' << r.action << ',' << (r.blocked ? 1 : 0)
          << ',' << (r.accepted ? 1 : 0) << ',' << opt(r.delay) << ','
          << r.sims_used << "\n";
    }
  }
}

void write_aggregates_csv(std::ostream& out, const ScenarioResult& result,
                          std::span<const AggregateRow> rows) {
  out << "scenario,planner,graph,load,normalized_load,delta_g,seeds,"
         "blocking_mean,blocking_se,p95_mean,p95_se,sims_mean,sims_se,"
         "final_running_blocking,decisions_to_within_10pct\n";
  out << std::setprecision(10);
  const char* id = to_string(result.config.kind);
  for (const auto& r : rows) {
    out << id << ',' << r.planner << ',' << r.graph << ',' << r.load << ','
        << r.normalized_load << ',' << r.delta_g << ',' << r.seeds << ','
        << r.blocking_mean << ',' << r.blocking_se << ',' << opt(r.p95_mean)
        << ',' << opt(r.p95_se) << ',' << r.sims_mean << ',' << r.sims_se
        << ',' << r.final_running_mean << ',' << r.converge_decisions_mean
        << "\n";
  }
}

void write_outputs(const ScenarioResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root / "curves");
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(root / "decisions.csv");
    write_decisions_csv(out, result);
  }
  const auto rows = aggregate(result);
  {
    auto out = open(root / "aggregates.csv");
    write_aggregates_csv(out, result, rows);
  }
  switch (result.config.kind) {
    case ScenarioKind::kLoadSweep: {
      auto out = open(root / "curves" / "blocking_vs_load.dat");
      out << "# planner load normalized_load blocking_mean blocking_se "
             "p95_mean sims_mean\n"
          << std::setprecision(10);
      for (const auto& r : rows) {
        out << r.planner << ' ' << r.load << ' ' << r.normalized_load << ' '
            << r.blocking_mean << ' ' << r.blocking_se << ' '
            << opt(r.p95_mean) << ' ' << r.sims_mean << "\n";
      }
      break;
    }
    case ScenarioKind::kDriftTransfer: {
      auto out = open(root / "curves" / "sims_vs_drift.dat");
      out << "# planner graph delta_g sims_mean sims_se blocking_mean "
             "p95_mean\n"
          << std::setprecision(10);
      for (const auto& r : rows) {
        out << r.planner << ' ' << r.graph << ' ' << r.delta_g << ' '
            << r.sims_mean << ' ' << r.sims_se << ' ' << r.blocking_mean
            << ' ' << opt(r.p95_mean) << "\n";
      }
      break;
    }
    case ScenarioKind::kConvergence: {
      for (const auto& agg : rows) {
        auto out = open(root / "curves" /
                        ("running_blocking_" + agg.graph + "_" + agg.planner +
                         ".dat"));
        out << "# decision mean_running_blocking runs\n"
            << std::setprecision(10);
        std::vector<double> sum;
        std::vector<int> count;
        for (const auto& run : result.runs) {
          if (run.planner != agg.planner || run.graph != agg.graph) continue;
          const auto& series = run.metrics.running_blocking;
          if (sum.size() < series.size()) {
            sum.resize(series.size(), 0.0);
            count.resize(series.size(), 0);
          }
          for (std::size_t t = 0; t < series.size(); ++t) {
            sum[t] += series[t];
            ++count[t];
          }
        }
        for (std::size_t t = 0; t < sum.size(); ++t) {
          out << t + 1 << ' ' << sum[t] / count[t] << ' ' << count[t] << "\n";
        }
      }
      break;
    }
  }
  if (result.config.write_traces) {
    fs::create_directories(root / "traces");
    for (const auto& run : result.runs) {
      std::ostringstream name;
      name << run.planner << '_' << run.graph << "_load" << run.load << "_seed"
           << run.seed << ".csv";
      auto out = open(root / "traces" / name.str());
      write_trace(out, run.metrics.trace);
    }
  }
}

}  // namespace lisfc
