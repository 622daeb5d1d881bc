// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion
// numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "lisfc/harness.hpp"
#include "lisfc/sfc_domain.hpp"
#include "lisfc/tabular.hpp"
#include "support/fixtures.hpp"

using namespace lisfc;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string config_path(const std::string& name) {
  return std::string(LISFC_SOURCE_DIR) + "/configs/" + name;
}

class RandomPlanner : public Planner {
 public:
  explicit RandomPlanner(const SfcEnvironment& env) : env_(env) {}
  Decision decide(const MdpState& s, Rng& rng) override {
    const auto acts = enumerate_actions(env_, s);
    return {acts[rng() % acts.size()], 0};
  }

 private:
  const SfcEnvironment& env_;
};

// 1. No negative residuals, broken conservation or late completions.
Verdict feasibility() {
  const auto g = build_base_topology(20, 40, 1);
  SfcEnvironment env(g, MdpParams{});
  const std::vector<double> loads = {0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4};
  const Slot horizon = 7200;
  long slots = 0, rows = 0;
  try {
    for (double load : loads) {
      WorkloadSpec ws;
      ws.base_arrival_rate = 0.8;
      ws.load_factor = load;
      ws.horizon = horizon;
      ws.seed = static_cast<std::uint64_t>(load * 10);
      auto wl = fixtures::stream(generate_workload(g, ws));
      RandomPlanner random(env);
      auto nf = make_planner(PlannerSpec{}, env);
      for (Planner* p : {static_cast<Planner*>(&random), nf.get()}) {
        const auto m = run_episode(env, wl, horizon, *p, 1, {}, true);
        slots += horizon;
        rows += static_cast<long>(m.rows.size());
      }
    }
  } catch (const ContractViolation& e) {
    return {false, e.what()};
  }
  return {slots >= 100000, std::to_string(slots) + " slots, " +
                               std::to_string(rows) + " decisions, 0 violations"};
}

// 2. |Q_M - Q_M'| at the root against the transfer inequality.
Verdict bound_soundness() {
  const double delta = 0.05, gamma = 0.9, r_max = 1.0;
  Rng gen(2024);
  long events = 0, held = 0;
  for (int pair = 0; pair < 200; ++pair) {
    const int states = 2 + static_cast<int>(gen() % 4);
    const int actions = 2 + static_cast<int>(gen() % 2);
    const auto m = random_tabular_mdp(states, actions, gamma, r_max, gen);
    const auto m2 = perturb_tabular_mdp(m, 0.2, 0.3, gen);
    const double d = exact_distance(m, m2, 1.0);
    TabularDomain da(m), db(m2);
    UctParams p;
    p.budget = 500;
    p.max_depth = 10;
    UctSearch<TabularDomain> sa(da, p), sb(db, p);
    Rng ra(pair), rb(pair + 100000);
    sa.plan(0, ra);
    sb.plan(0, rb);
    const auto& na = sa.tree()[0];
    const auto& nb = sb.tree()[0];
    for (int a = 0; a < actions; ++a) {
      const long n = std::min(na.stats[a].visit_count, nb.stats[a].visit_count);
      if (n < 1) continue;
      const double lhs = std::abs(na.stats[a].q_hat() - nb.stats[a].q_hat());
      const double rhs = d / (1 - gamma) + 2 * r_max / (1 - gamma) *
                                               std::sqrt(std::log(2 / delta) / (2.0 * n));
      ++events;
      held += lhs <= rhs;
    }
  }
  const double freq = static_cast<double>(held) / static_cast<double>(events);
  return {freq >= 1 - delta - 0.02,
          std::to_string(held) + "/" + std::to_string(events) +
              " root edges over 200 pairs, frequency " + fmt("%.4f", freq)};
}

struct TabSample {
  int s, a, next;
  double behavior_prob, reference_prob;
};

// 3. Importance-sampled distance against exact enumeration.
Verdict estimator() {
  Rng gen(77);
  const auto m = random_tabular_mdp(3, 2, 0.9, 1.0, gen);
  const auto m2 = perturb_tabular_mdp(m, 0.3, 0.3, gen);
  std::vector<TabSample> samples;
  std::uniform_int_distribution<int> ps(0, 2), pa(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 100000; ++i) {
    TabSample x{ps(gen), pa(gen), 2, 0, 1.0 / 18.0};
    double acc = 0;
    const double draw = u(gen);
    for (int k = 0; k < 3; ++k) {
      acc += m.p(x.s, x.a, k);
      if (draw < acc) {
        x.next = k;
        break;
      }
    }
    x.behavior_prob = m.p(x.s, x.a, x.next) / 6.0;
    samples.push_back(x);
  }
  const std::span<const TabSample> view(samples);
  const double exact = exact_distance(m, m2, 1.0);
  const double est = estimate_distance(view, m, m2, 1.0);
  const double same = estimate_distance(view, m, m, 1.0);
  const double rel = std::abs(est - exact) / exact;
  return {rel <= 0.05 && same == 0.0,
          "exact " + fmt("%.5f", exact) + ", estimate " + fmt("%.5f", est) +
              ", rel err " + fmt("%.4f", rel) + ", identical " + fmt("%g", same)};
}

// 4. Calibrated c * drift covers held-out distance estimates.
Verdict surrogate() {
  auto pair_sample = [](int i) {
    const auto base = build_base_topology(5, 7, 500 + i);
    PerturbationSpec spec;
    switch (i % 3) {
      case 0: spec = PerturbationSpec::upgrade(900 + i); break;
      case 1: spec = PerturbationSpec::degrade(900 + i); break;
      default: spec = PerturbationSpec::mixed(900 + i); break;
    }
    const auto moved = apply_perturbation(base, spec);
    const auto drift = graph_drift(base, moved, DriftWeights{});
    SfcEnvironment ea(base, MdpParams{}), eb(moved, MdpParams{});
    WorkloadSpec ws;
    ws.horizon = 300;
    ws.seed = 700 + static_cast<std::uint64_t>(i);
    auto wl = fixtures::stream(generate_workload(base, ws));
    Rng rng(i);
    const auto samples = collect_sfc_samples(ea, wl, ws.horizon, rng);
    return std::pair<DriftReport, double>{drift,
                                          estimate_sfc_distance(ea, eb, samples, 1.0)};
  };
  std::vector<std::pair<DriftReport, double>> train, test;
  for (int i = 0; i < 50; ++i) train.push_back(pair_sample(i));
  for (int i = 50; i < 100; ++i) test.push_back(pair_sample(i));
  double c = 0;
  try {
    c = calibrate_lipschitz_c(train);
  } catch (const std::exception& e) {
    return {false, std::string("calibration failed: ") + e.what()};
  }
  int covered = 0;
  double worst = 0;
  for (const auto& [drift, d] : test) {
    covered += c * drift.delta_g >= d;
    if (drift.delta_g > 0) worst = std::max(worst, d / drift.delta_g);
  }
  return {covered == 50, "c = " + fmt("%.4f", c) + ", covered " +
                             std::to_string(covered) + "/50, worst held-out ratio " +
                             fmt("%.4f", worst)};
}

// 5. Empty knowledge base: identical decisions to plain UCT.
Verdict fallback() {
  const auto g = build_base_topology(20, 40, 1);
  SfcEnvironment env(g, MdpParams{});
  PlannerSpec u;
  u.name = "umcts";
  u.kind = PlannerKind::kUmcts;
  u.uct.budget = 50;
  PlannerSpec l = u;
  l.name = "lisfc";
  l.kind = PlannerKind::kLisfc;
  int identical = 0;
  long decisions = 0;
  for (std::uint64_t ep = 1; ep <= 20; ++ep) {
    WorkloadSpec ws;
    ws.base_arrival_rate = 0.8;
    ws.horizon = 50;
    ws.seed = ep;
    auto wl = fixtures::stream(generate_workload(g, ws));
    KnowledgeBase kb(l.transfer);
    auto pu = make_planner(u, env);
    auto pl = make_planner(l, env, &kb, "G0");
    const auto a = run_episode(env, wl, ws.horizon, *pu, ep);
    const auto b = run_episode(env, wl, ws.horizon, *pl, ep);
    bool same = a.rows.size() == b.rows.size();
    for (std::size_t i = 0; same && i < a.rows.size(); ++i) {
      same = a.rows[i].action == b.rows[i].action &&
             a.rows[i].sims_used == b.rows[i].sims_used;
    }
    identical += same;
    decisions += static_cast<long>(a.rows.size());
  }
  return {identical == 20, std::to_string(identical) + "/20 episodes identical (" +
                               std::to_string(decisions) + " decisions)"};
}

// 6. Exhaustive optimum on the tiny instance; prior-seeded early stop.
Verdict oracle_optimality() {
  fixtures::TinyInstance tiny;
  SfcEnvironment env(tiny.graph, tiny.params);
  SfcDomain domain(env);
  const auto root = tiny.root(env);
  const auto oracle = fixtures::exhaustive_oracle(env, root);
  const std::set<std::string> optimal(oracle.optimal.begin(), oracle.optimal.end());

  UctParams p;
  p.budget = 5000;
  int uct_hits = 0;
  double uct_sims = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    UctSearch<SfcDomain> search(domain, p);
    Rng rng(seed);
    const auto r = search.plan(root, rng);
    uct_hits += optimal.count(r.sig) > 0;
    uct_sims += r.sims_used;
  }
  uct_sims /= 100;

  // prior from a separate long run on the same graph (drift 0)
  TransferParams tp;
  tp.gamma = tiny.params.reward.gamma;
  tp.r_max = tiny.params.reward.r_max;
  tp.n_cap = 100000;
  KnowledgeBase kb(tp);
  {
    UctParams big = p;
    big.budget = 20000;
    UctSearch<SfcDomain> search(domain, big);
    Rng rng(999);
    search.plan(root, rng);
    update_kb(kb, search.tree(), "prior", tiny.graph);
  }
  kb.begin_task(tiny.graph);
  KbOracle o(kb);
  int lisfc_hits = 0;
  double lisfc_sims = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    UctSearch<SfcDomain> search(domain, p, &o);
    Rng rng(seed);
    const auto r = search.plan(root, rng);
    lisfc_hits += optimal.count(r.sig) > 0;
    lisfc_sims += r.sims_used;
  }
  lisfc_sims /= 100;
  return {uct_hits >= 95 && lisfc_hits >= 95 && lisfc_sims < uct_sims,
          "optimum " + oracle.optimal.front() + " (value " + fmt("%.4f", oracle.value) +
              "); uct " + std::to_string(uct_hits) + "/100 at " + fmt("%.0f", uct_sims) +
              " sims; lisfc " + std::to_string(lisfc_hits) + "/100 at " +
              fmt("%.1f", lisfc_sims) + " sims"};
}

ScenarioResult run_config(const std::string& name) {
  return run_scenario(load_scenario_config(config_path(name)));
}

// 7. Blocking grows with load; search planners beat the heuristic at load.
Verdict scenario_load() {
  const auto result = run_config("load_sweep.ini");
  const auto rows = aggregate(result);
  const auto& c = result.config;
  bool ok = true;
  std::ostringstream detail;
  detail << std::fixed;
  detail.precision(4);
  for (const auto& spec : c.planners) {
    int inversions = 0;
    double worst = 0;
    std::vector<double> curve;
    for (double load : c.loads) {
      curve.push_back(find_aggregate(rows, spec.name, "G0", load)->blocking_mean);
    }
    for (std::size_t i = 1; i < curve.size(); ++i) {
      if (curve[i] < curve[i - 1]) {
        ++inversions;
        worst = std::max(worst, curve[i - 1] - curve[i]);
      }
    }
    const bool mono = inversions == 0 || (inversions == 1 && worst <= 0.01);
    ok &= mono;
    detail << spec.name << " [";
    for (std::size_t i = 0; i < curve.size(); ++i) detail << (i ? " " : "") << curve[i];
    detail << "]" << (mono ? "" : " NOT MONOTONE") << "; ";
  }
  for (double load : c.loads) {
    if (load < 0.8 - 1e-12) continue;
    const double nf = find_aggregate(rows, "nf_heuristic", "G0", load)->blocking_mean;
    for (const char* name : {"umcts", "lisfc"}) {
      const double b = find_aggregate(rows, name, "G0", load)->blocking_mean;
      if (b > nf) {
        ok = false;
        detail << name << " above nf at load " << load << "; ";
      }
    }
  }
  return {ok, detail.str()};
}

std::vector<std::string> drifted_by_delta(const ScenarioResult& r) {
  std::vector<std::pair<double, std::string>> order;
  for (std::size_t k = 1; k < r.graphs.size(); ++k)
    order.emplace_back(r.drifts[k].delta_g, r.graphs[k].id());
  std::sort(order.begin(), order.end());
  std::vector<std::string> out;
  for (const auto& [d, id] : order) out.push_back(id);
  return out;
}

// 8. Fewer simulations from transfer, growing with drift, at no blocking cost.
Verdict scenario_drift() {
  const auto result = run_config("drift_transfer.ini");
  const auto rows = aggregate(result);
  const double load = result.config.workload.load_factor;
  const auto order = drifted_by_delta(result);
  std::ostringstream detail;
  detail << std::fixed;
  detail.precision(4);
  auto row = [&](const char* p, const std::string& g) {
    return find_aggregate(rows, p, g, load);
  };
  const bool fewer = row("lisfc", order[0])->sims_mean < row("umcts", order[0])->sims_mean;
  bool nondecreasing = true;
  for (std::size_t i = 1; i < order.size(); ++i) {
    nondecreasing &= row("lisfc", order[i])->sims_mean >=
                     0.95 * row("lisfc", order[i - 1])->sims_mean;
  }
  bool blocking = true;
  for (const auto& g : result.graphs) {
    blocking &= row("lisfc", g.id())->blocking_mean <= row("umcts", g.id())->blocking_mean + 0.02;
  }
  for (std::size_t k = 0; k < result.graphs.size(); ++k) {
    const auto& id = result.graphs[k].id();
    detail << id << "(dG " << result.drifts[k].delta_g << ") sims lisfc/umcts "
           << row("lisfc", id)->sims_mean << "/" << row("umcts", id)->sims_mean
           << " blocking " << row("lisfc", id)->blocking_mean << "/"
           << row("umcts", id)->blocking_mean << "; ";
  }
  detail << "fewer sims on " << order[0] << ": " << (fewer ? "yes" : "no")
         << "; sims nondecreasing in dG: " << (nondecreasing ? "yes" : "no")
         << "; blocking within 0.02: " << (blocking ? "yes" : "no");
  return {fewer && nondecreasing && blocking, detail.str()};
}

// 9. Faster convergence of running blocking; advantage fades with drift.
Verdict scenario_convergence() {
  const auto result = run_config("convergence.ini");
  const auto rows = aggregate(result);
  const double load = result.config.workload.load_factor;
  const auto order = drifted_by_delta(result);
  auto row = [&](const char* p, const std::string& g) {
    return find_aggregate(rows, p, g, load);
  };
  std::ostringstream detail;
  detail << std::fixed;
  detail.precision(4);
  const bool faster = row("lisfc", order[0])->converge_decisions_mean <
                      row("umcts", order[0])->converge_decisions_mean;
  bool shrinking = true;
  double prev_gap = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double gap = row("umcts", order[i])->final_running_mean -
                       row("lisfc", order[i])->final_running_mean;
    if (i > 0) shrinking &= gap <= prev_gap + 0.02;
    prev_gap = gap;
  }
  bool never_worse = true;
  for (const auto& g : result.graphs) {
    never_worse &= row("lisfc", g.id())->final_running_mean <=
                   row("umcts", g.id())->final_running_mean + 0.02;
  }
  for (std::size_t k = 0; k < result.graphs.size(); ++k) {
    const auto& id = result.graphs[k].id();
    detail << id << " decisions-to-10% lisfc/umcts "
           << row("lisfc", id)->converge_decisions_mean << "/"
           << row("umcts", id)->converge_decisions_mean << " final "
           << row("lisfc", id)->final_running_mean << "/"
           << row("umcts", id)->final_running_mean << "; ";
  }
  detail << "faster on " << order[0] << ": " << (faster ? "yes" : "no")
         << "; gap shrinking: " << (shrinking ? "yes" : "no")
         << "; never worse by > 0.02: " << (never_worse ? "yes" : "no");
  return {faster && shrinking && never_worse, detail.str()};
}

// 10. Same config, same bytes.
Verdict determinism() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"load_sweep.ini", "drift_transfer.ini", "convergence.ini"}) {
    auto c = load_scenario_config(config_path(name));
    c.seeds.resize(2);
    c.workload.horizon = 40;
    if (c.kind == ScenarioKind::kLoadSweep) c.loads = {0.6, 1.4};
    auto render = [&] {
      const auto r = run_scenario(c);
      std::ostringstream out;
      write_decisions_csv(out, r);
      write_aggregates_csv(out, r, aggregate(r));
      return out.str();
    };
    const auto a = render(), b = render();
    ok &= a == b && !a.empty();
    detail += std::string(name) + (a == b ? " identical (" : " DIFFERS (") +
              std::to_string(a.size()) + " bytes); ";
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"feasibility and conservation", feasibility},
      {"transfer bound soundness", bound_soundness},
      {"distance estimator", estimator},
      {"drift surrogate coverage", surrogate},
      {"empty-KB fallback equivalence", fallback},
      {"tiny-instance oracle optimality", oracle_optimality},
      {"load sweep trend", scenario_load},
      {"drift transfer trend", scenario_drift},
      {"convergence trend", scenario_convergence},
      {"determinism", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " ("
              << criteria[i].first << ", " << fmt("%.1f", secs) << " s): " << v.detail
              << std::endl;
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
