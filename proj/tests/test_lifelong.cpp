#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "lisfc/lifelong.hpp"
#include "lisfc/sfc_domain.hpp"
#include "lisfc/tabular.hpp"
#include "support/fixtures.hpp"

using namespace lisfc;

namespace {

TransferParams params_with(double gamma, long n_cap = 50) {
  TransferParams p;
  p.gamma = gamma;
  p.n_cap = n_cap;
  return p;
}

// Two Bernoulli arms with success probabilities 0.9 and 0.1.
class Bandit {
 public:
  using State = int;
  using Action = int;
  std::vector<Action> legal_actions(State) const { return {0, 1}; }
  Transition<State> transition(State s, Action a, Rng& rng) const {
    std::bernoulli_distribution hit(a == 0 ? 0.9 : 0.1);
    return {s, hit(rng) ? 1.0 : 0.0};
  }
  Action default_action(State, Rng& rng) const { return static_cast<int>(rng() % 2); }
  std::string state_key(State) const { return "bandit"; }
  std::string action_sig(Action a) const { return "a" + std::to_string(a); }
  double gamma() const { return 0.01; }
  double r_max() const { return 1.0; }
  bool is_terminal(State) const { return false; }
};
static_assert(PlanningDomain<Bandit>);

struct TabSample {
  int s, a, next;
  double behavior_prob, reference_prob;
};

std::vector<TabSample> tabular_samples(const TabularMdp& m, int n, Rng& rng) {
  std::vector<TabSample> out;
  std::uniform_int_distribution<int> ps(0, m.states - 1), pa(0, m.actions - 1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < n; ++i) {
    TabSample x{ps(rng), pa(rng), 0, 0, 0};
    double acc = 0, draw = u(rng);
    x.next = m.states - 1;
    for (int k = 0; k < m.states; ++k) {
      acc += m.p(x.s, x.a, k);
      if (draw < acc) {
        x.next = k;
        break;
      }
    }
    x.behavior_prob = m.p(x.s, x.a, x.next) / (m.states * m.actions);
    x.reference_prob = 1.0 / (m.states * m.actions * m.states);
    out.push_back(x);
  }
  return out;
}

SearchNode<SfcDomain> root_node(const SfcEnvironment& env, const MdpState& s) {
  SearchNode<SfcDomain> n;
  n.key = state_key(env, s);
  n.state = s;
  n.actions = enumerate_actions(env, s);
  for (const auto& a : n.actions) n.sigs.push_back(a.sig());
  n.stats.assign(n.actions.size(), EdgeStats{});
  n.transfer_u.assign(n.actions.size(), kInf);
  n.eliminated.assign(n.actions.size(), 0);
  n.children.resize(n.actions.size());
  return n;
}

// Knowledge base holding one long UCT run on the tiny instance.
KnowledgeBase tiny_prior_kb(const fixtures::TinyInstance& tiny, long n_cap,
                            int budget = 20000) {
  SfcEnvironment env(tiny.graph, tiny.params);
  SfcDomain domain(env);
  UctParams p;
  p.budget = budget;
  UctSearch<SfcDomain> search(domain, p);
  Rng rng(12345);
  search.plan(tiny.root(env), rng);
  auto tp = params_with(tiny.params.reward.gamma, n_cap);
  tp.r_max = tiny.params.reward.r_max;
  KnowledgeBase kb(tp);
  update_kb(kb, search.tree(), "prior", tiny.graph);
  kb.begin_task(tiny.graph);
  return kb;
}

}  // namespace

TEST_CASE("transfer bound terms") {
  TransferParams p = params_with(0.9);
  DriftReport d;
  d.delta_g = 0.1;
  const auto b = auct_bound(0.5, 100, d, p);
  CHECK(b.bias == doctest::Approx(1.0));
  // 20 * sqrt(ln 40 / 200)
  CHECK(b.confidence == doctest::Approx(2.7162).epsilon(1e-4));
  CHECK(b.u_value == doctest::Approx(0.5 + 1.0 + b.confidence));

  d.delta_g = 0.2;
  CHECK(auct_bound(0.5, 100, d, p).bias == doctest::Approx(2.0 * b.bias));
  CHECK(auct_bound(0.5, 400, d, p).confidence == doctest::Approx(b.confidence / 2.0));
  CHECK_THROWS_AS(auct_bound(0.5, 0, d, p), std::invalid_argument);

  // nondecreasing in drift, nonincreasing in visits
  double last = -kInf;
  for (double dg : {0.0, 0.05, 0.1, 0.5, 1.0}) {
    d.delta_g = dg;
    const double u = auct_bound(0.5, 100, d, p).u_value;
    CHECK(u >= last);
    last = u;
  }
  last = kInf;
  for (long n : {1L, 2L, 10L, 50L, 1000L}) {
    const double u = auct_bound(0.5, n, d, p).u_value;
    CHECK(u <= last);
    last = u;
  }
}

TEST_CASE("transfer ucb takes the minimum over tasks") {
  const auto g = build_base_topology(5, 6, 1);
  TransferParams p = params_with(0.9);
  KnowledgeBase kb(p);
  kb.begin_task(g);
  CHECK(transfer_ucb(kb, "k", "a") == kInf);

  DriftReport zero;
  const double conf = auct_bound(0.0, 100, zero, p).confidence;
  kb.add_task("t1", g).edges["k"]["a"] = ArchivedEdge{3.1 - conf, 100};
  kb.add_task("t2", g).edges["k"]["a"] = ArchivedEdge{2.4 - conf, 100};
  kb.add_task("t3", g).edges["k"]["b"] = ArchivedEdge{0.0, 100};
  kb.begin_task(g);
  CHECK(transfer_ucb(kb, "k", "a") == doctest::Approx(2.4));
  CHECK(transfer_ucb(kb, "k", "missing") == kInf);
}

TEST_CASE("stale drifts are refused") {
  const auto g = build_base_topology(5, 6, 1);
  KnowledgeBase kb;
  kb.add_task("t", g);
  CHECK_THROWS_AS(transfer_ucb(kb, "k", "a"), std::logic_error);
  kb.begin_task(g);
  CHECK_NOTHROW(transfer_ucb(kb, "k", "a"));
  CHECK_THROWS_AS(kb.add_task("t", g), std::invalid_argument);
}

TEST_CASE("maxmin selection matches brute force") {
  Rng rng(9);
  std::uniform_real_distribution<double> q(-1, 1), u(-1, 3);
  for (int trial = 0; trial < 500; ++trial) {
    SearchNode<Bandit> n;
    const int k = 2 + static_cast<int>(rng() % 6);
    for (int i = 0; i < k; ++i) {
      n.actions.push_back(i);
      n.sigs.push_back("s" + std::to_string(k - i));
      EdgeStats e;
      const int visits = static_cast<int>(rng() % 5);
      for (int v = 0; v < visits; ++v) e.add(q(rng));
      n.visits += visits;
      n.stats.push_back(e);
      n.transfer_u.push_back(rng() % 3 == 0 ? kInf : u(rng));
      n.eliminated.push_back(rng() % 5 == 0 && i > 0);
    }
    std::vector<std::tuple<double, long, std::string, std::size_t>> ranked;
    for (int i = 0; i < k; ++i) {
      if (n.eliminated[i]) continue;
      ranked.emplace_back(std::min(uct_score(n.stats[i], n.visits, 0.7), n.transfer_u[i]),
                          n.stats[i].visit_count, n.sigs[i], i);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
      return std::get<2>(a) < std::get<2>(b);
    });
    CHECK(maxmin_select(n, 0.7) == std::get<3>(ranked.front()));
  }
}

TEST_CASE("elimination") {
  SearchNode<Bandit> n;
  n.actions = {0, 1};
  n.sigs = {"a0", "a1"};
  n.stats.resize(2);
  for (int i = 0; i < 1000; ++i) n.stats[0].add(0.5);
  n.stats[1].add(0.3);
  n.visits = 1001;
  n.transfer_u = {kInf, kInf};
  n.eliminated = {0, 0};
  CHECK(eliminate_actions(n, 0.01) == 0);
  n.transfer_u[1] = 0.1;
  CHECK(eliminate_actions(n, 0.01) == 1);
  CHECK(n.eliminated[1]);
  CHECK_FALSE(n.eliminated[0]);

  // a single visited edge is never enough
  SearchNode<Bandit> m = n;
  m.stats[1] = EdgeStats{};
  m.eliminated = {0, 0};
  CHECK(eliminate_actions(m, 0.01) == 0);
}

TEST_CASE("inferior bandit arm is eliminated within 10 live visits") {
  Bandit bandit;
  const NetworkGraph g = build_base_topology(3, 2, 1);
  auto tp = params_with(bandit.gamma());
  KnowledgeBase kb(tp);
  auto& t = kb.add_task("arms", g);
  t.edges["bandit"]["a0"] = ArchivedEdge{0.9, 50};
  t.edges["bandit"]["a1"] = ArchivedEdge{0.1, 50};
  kb.begin_task(g);
  KbOracle oracle(kb);
  UctParams p;
  p.budget = 2000;
  p.max_depth = 1;
  p.rollout_horizon = 0;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    UctSearch<Bandit> search(bandit, p, &oracle);
    Rng rng(seed);
    const auto r = search.plan(0, rng);
    const auto& root = search.tree()[0];
    ok += r.early_stopped && r.sig == "a0" && root.eliminated[1] &&
          root.stats[1].live_visits() <= 10;
  }
  CHECK(ok >= 95);
}

TEST_CASE("subtree injection respects theta and n_cap") {
  fixtures::TinyInstance tiny;
  SfcEnvironment env(tiny.graph, tiny.params);
  const auto root = tiny.root(env);
  auto node = root_node(env, root);
  auto tp = params_with(0.5, 30);
  KnowledgeBase kb(tp);
  auto& t = kb.add_task("same", tiny.graph);
  for (const auto& sig : node.sigs) t.edges[node.key][sig] = ArchivedEdge{0.25, 80};
  kb.begin_task(tiny.graph);
  CHECK(inject_subtrees(kb, node) == static_cast<int>(node.edge_count()));
  for (const auto& e : node.stats) {
    CHECK(e.visit_count == 30);
    CHECK(e.prior_visits == 30);
    CHECK(e.q_hat() == doctest::Approx(0.25));
  }
  CHECK(node.visits == 30 * static_cast<long>(node.edge_count()));

  // the same data from a graph beyond theta seeds nothing
  auto tp2 = tp;
  tp2.theta = 0.0;
  KnowledgeBase far(tp2);
  auto other = tiny.graph;
  other.set_cpu(0, 9);
  auto& t2 = far.add_task("far", other);
  t2.edges = t.edges;
  far.begin_task(tiny.graph);
  REQUIRE(far.tasks()[0].drift_to_current.delta_g > 0.0);
  auto fresh = root_node(env, root);
  CHECK(inject_subtrees(far, fresh) == 0);
  // but its bound still applies
  CHECK(transfer_ucb(far, fresh.key, fresh.sigs[0]) < kInf);
}

TEST_CASE("adding a task never loosens a bound") {
  fixtures::TinyInstance tiny;
  SfcEnvironment env(tiny.graph, tiny.params);
  auto kb = tiny_prior_kb(tiny, 1000, 3000);
  const auto node = root_node(env, tiny.root(env));
  std::vector<double> before;
  for (const auto& sig : node.sigs) before.push_back(transfer_ucb(kb, node.key, sig));
  auto& extra = kb.add_task("extra", tiny.graph);
  for (const auto& sig : node.sigs) extra.edges[node.key][sig] = ArchivedEdge{-0.5, 7};
  kb.begin_task(tiny.graph);
  for (std::size_t i = 0; i < node.sigs.size(); ++i)
    CHECK(transfer_ucb(kb, node.key, node.sigs[i]) <= before[i]);
}

TEST_CASE("seeded search reaches the optimal action with fewer simulations") {
  fixtures::TinyInstance tiny;
  SfcEnvironment env(tiny.graph, tiny.params);
  SfcDomain domain(env);
  const auto root = tiny.root(env);
  const auto oracle = fixtures::exhaustive_oracle(env, root);
  REQUIRE(oracle.optimal.size() == 1);
  const auto kb = tiny_prior_kb(tiny, 100000);
  KbOracle seeded(kb);

  // smallest budget on a doubling grid from which the answer stays optimal
  auto sims_needed = [&](const TransferOracle* o, std::uint64_t seed) {
    int first_good = -1;
    for (int b = 1; b <= 4096; b *= 2) {
      UctParams p;
      p.budget = b;
      p.early_stop = false;
      UctSearch<SfcDomain> search(domain, p, o);
      Rng rng(seed);
      const bool good = search.plan(root, rng).sig == oracle.optimal[0];
      if (good && first_good < 0) first_good = b;
      if (!good) first_good = -1;
    }
    return first_good < 0 ? 8192 : first_good;
  };
  double with = 0, without = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    with += sims_needed(&seeded, seed);
    without += sims_needed(nullptr, seed);
  }
  CHECK(with < without);
}

TEST_CASE("early stopping with honest priors keeps the optimal action") {
  fixtures::TinyInstance tiny;
  SfcEnvironment env(tiny.graph, tiny.params);
  SfcDomain domain(env);
  const auto root = tiny.root(env);
  const auto oracle = fixtures::exhaustive_oracle(env, root);
  const auto kb = tiny_prior_kb(tiny, 100000);
  KbOracle o(kb);
  UctParams p;
  p.budget = 5000;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    UctSearch<SfcDomain> search(domain, p, &o);
    Rng rng(seed);
    const auto r = search.plan(root, rng);
    CHECK(r.sig == oracle.optimal[0]);
    const auto& node = search.tree()[0];
    for (std::size_t i = 0; i < node.edge_count(); ++i)
      if (node.sigs[i] == oracle.optimal[0]) CHECK_FALSE(node.eliminated[i]);
  }
}

TEST_CASE("knowledge base update") {
  const auto g = build_base_topology(5, 6, 1);
  KnowledgeBase kb(params_with(0.9));
  EpisodeArchive empty;
  update_kb(kb, empty, "t", g);
  CHECK(kb.empty());

  SearchNode<Bandit> n;
  n.key = "k";
  n.actions = {0, 1};
  n.sigs = {"a0", "a1"};
  n.stats.resize(2);
  for (int i = 0; i < 10; ++i) n.stats[0].add(0.4);
  for (int i = 0; i < 3; ++i) n.stats[1].add(1.0);
  n.transfer_u = {kInf, kInf};
  n.eliminated = {0, 0};
  std::vector<SearchNode<Bandit>> tree{n};
  update_kb(kb, tree, "t", g);
  const auto* t = kb.find_task("t");
  REQUIRE(t != nullptr);
  REQUIRE(t->find("k", "a0") != nullptr);
  CHECK(t->find("k", "a1") == nullptr);  // below n_min

  for (auto& x : tree[0].stats) x = EdgeStats{};
  for (int i = 0; i < 10; ++i) tree[0].stats[0].add(0.6);
  update_kb(kb, tree, "t", g);
  CHECK(t->find("k", "a0")->q_hat == doctest::Approx(0.5));
  CHECK(t->find("k", "a0")->visits == 20);

  // prior visits are not archived again
  for (auto& x : tree[0].stats) x = EdgeStats{};
  tree[0].stats[0].seed(40, 0.0);
  for (int i = 0; i < 40; ++i) tree[0].stats[0].add(0.5);
  update_kb(kb, tree, "t", g);
  CHECK(t->find("k", "a0")->q_hat == doctest::Approx(0.5));
  CHECK(t->find("k", "a0")->visits == 50);  // 60 capped
}

TEST_CASE("knowledge base persistence round trip") {
  fixtures::TinyInstance tiny;
  const auto kb = tiny_prior_kb(tiny, 500, 2000);
  const auto dir = std::filesystem::temp_directory_path() / "lisfc_kb_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "kb.txt").string();
  save_kb(path, kb);
  const auto back = load_kb(path, kb.params());
  REQUIRE(back.tasks().size() == kb.tasks().size());
  for (std::size_t i = 0; i < kb.tasks().size(); ++i) {
    CHECK(back.tasks()[i].task_id == kb.tasks()[i].task_id);
    CHECK(*back.tasks()[i].graph == *kb.tasks()[i].graph);
    CHECK(back.tasks()[i].edges.size() == kb.tasks()[i].edges.size());
    for (const auto& [key, sigs] : kb.tasks()[i].edges)
      for (const auto& [sig, e] : sigs) {
        const auto* f = back.tasks()[i].find(key, sig);
        REQUIRE(f != nullptr);
        CHECK(f->q_hat == e.q_hat);
        CHECK(f->visits == e.visits);
      }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("importance-sampled distance on explicit MDPs") {
  Rng rng(21);
  const auto m = random_tabular_mdp(3, 2, 0.9, 1.0, rng);
  const auto samples = tabular_samples(m, 2000, rng);
  CHECK(estimate_distance(std::span<const TabSample>(samples), m, m, 1.0) == 0.0);

  const auto m2 = perturb_tabular_mdp(m, 0.3, 0.4, rng);
  const auto many = tabular_samples(m, 50000, rng);
  const double exact = exact_distance(m, m2, 1.0);
  CHECK(estimate_distance(std::span<const TabSample>(many), m, m2, 1.0) ==
        doctest::Approx(exact).epsilon(0.05));

  // with pi = U the estimate is the plain mean
  std::vector<IsTerm> terms = {{0.2, 0.1, 0.5, 0.5}, {0.4, 0.3, 0.5, 0.5}};
  CHECK(estimate_distance(std::span<const IsTerm>(terms), 2.0) ==
        doctest::Approx(((0.2 + 0.2) + (0.4 + 0.6)) / 2.0));
  terms[1].behavior_prob = 0.0;
  CHECK_THROWS_AS(estimate_distance(std::span<const IsTerm>(terms), 1.0), CoverageError);
}

TEST_CASE("exact distance by enumeration") {
  Rng rng(2);
  const auto a = random_tabular_mdp(2, 2, 0.9, 1.0, rng);
  auto b = a;
  b.reward[0] += 0.4;  // one (s, a) pair, seen by 2 of 8 triples
  CHECK(exact_distance(a, b, 1.0) == doctest::Approx(0.4 * 2 / 8));
}

TEST_CASE("sfc distance vanishes on the same snapshot") {
  const auto g = build_base_topology(8, 12, 2);
  SfcEnvironment env(g, MdpParams{});
  WorkloadSpec spec;
  spec.horizon = 150;
  spec.seed = 1;
  auto wl = fixtures::stream(generate_workload(g, spec));
  Rng rng(1);
  const auto samples = collect_sfc_samples(env, wl, spec.horizon, rng);
  CHECK(estimate_sfc_distance(env, env, samples, 1.0) == 0.0);
  SfcEnvironment down(apply_perturbation(g, PerturbationSpec::degrade(3)), MdpParams{});
  CHECK(estimate_sfc_distance(env, down, samples, 1.0) > 0.0);
}

TEST_CASE("trace distance") {
  std::vector<TraceRow> a = {{0, "place", 0, -0.05, 1, 0, 0},
                             {1, "wait", -1, 1.0, 0, 0, 1},
                             {2, "reject", 1, -1.0, 0, 1, 0}};
  CHECK(estimate_trace_distance(a, a, 1.0) == 0.0);
  std::stringstream ss;
  write_trace(ss, a);
  const auto back = read_trace(ss);
  REQUIRE(back.size() == 3);
  CHECK(back[2].action_variant == "reject");
  CHECK(back[0].reward == -0.05);
  auto b = a;
  b[2] = {2, "place", 1, -0.1, 1, 0, 0};
  CHECK(estimate_trace_distance(a, b, 1.0) > 0.0);
}
