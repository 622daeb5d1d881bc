#pragma once

// Generic UCT over any PlanningDomain, with optional per-edge transfer
// upper bounds, prior seeding and action elimination supplied by a
// TransferOracle. Without an oracle this is plain UCT.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lisfc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Rng = std::mt19937_64;

template <class S>
struct Transition {
  S state;
  double reward = 0.0;
};

template <class D>
concept PlanningDomain = requires(const D& d, const typename D::State& s,
                                  const typename D::Action& a, Rng& rng) {
  { d.legal_actions(s) } -> std::same_as<std::vector<typename D::Action>>;
  { d.transition(s, a, rng) } -> std::same_as<Transition<typename D::State>>;
  { d.default_action(s, rng) } -> std::same_as<typename D::Action>;
  { d.state_key(s) } -> std::convertible_to<std::string>;
  { d.action_sig(a) } -> std::convertible_to<std::string>;
  { d.gamma() } -> std::convertible_to<double>;
  { d.r_max() } -> std::convertible_to<double>;
  { d.is_terminal(s) } -> std::convertible_to<bool>;
};

// Visit statistics of one edge. Seeded prior visits are counted in
// visit_count/value_sum and also tracked separately so that only live
// evidence is archived.
struct EdgeStats {
  long visit_count = 0;
  double value_sum = 0.0;
  long prior_visits = 0;
  double prior_value = 0.0;

  double q_hat() const {
    return visit_count > 0 ? value_sum / static_cast<double>(visit_count) : 0.0;
  }
  long live_visits() const { return visit_count - prior_visits; }
  double live_q() const {
    const long n = live_visits();
    return n > 0 ? (value_sum - prior_value) / static_cast<double>(n) : 0.0;
  }
  void add(double value) {
    ++visit_count;
    value_sum += value;
  }
  void seed(long visits, double q) {
    visit_count += visits;
    value_sum += q * static_cast<double>(visits);
    prior_visits += visits;
    prior_value += q * static_cast<double>(visits);
  }
};

struct UctParams {
  // Unset means sqrt(2) * r_max / (1 - gamma).
  std::optional<double> exploration_c;
  int budget = 200;
  int rollout_horizon = 20;
  int max_depth = 30;
  double delta = 0.05;
  // Stop early once every non-best root action is eliminated.
  bool early_stop = true;

  double exploration(double gamma, double r_max) const {
    return exploration_c.value_or(std::sqrt(2.0) * r_max / (1.0 - gamma));
  }

  void validate() const {
    if (exploration_c && !(*exploration_c > 0.0)) {
      throw std::invalid_argument("exploration_c must be positive");
    }
    if (budget < 1 || rollout_horizon < 0 || max_depth < 1) {
      throw std::invalid_argument("budget and max_depth must be >= 1");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
      throw std::invalid_argument("delta must lie in (0, 1)");
    }
  }
};

// q_hat + c * sqrt(ln parent_n / N); +inf for an unvisited edge.
inline double uct_score(const EdgeStats& e, long parent_n, double c) {
  if (e.visit_count == 0) return kInf;
  const double n = static_cast<double>(std::max(parent_n, 1L));
  return e.q_hat() +
         c * std::sqrt(std::log(n) / static_cast<double>(e.visit_count));
}

// Lower confidence counterpart; -inf for an unvisited edge.
inline double lcb_score(const EdgeStats& e, long parent_n, double c) {
  if (e.visit_count == 0) return -kInf;
  const double n = static_cast<double>(std::max(parent_n, 1L));
  return e.q_hat() -
         c * std::sqrt(std::log(n) / static_cast<double>(e.visit_count));
}

struct PathStep {
  EdgeStats* edge = nullptr;
  double reward = 0.0;
};

// Each edge receives the discounted return from its own depth:
// G_d = r_d + gamma * G_{d+1}, with leaf_value beyond the last edge.
inline void backpropagate(std::span<const PathStep> path, double leaf_value,
                          double gamma) {
  if (path.empty()) throw std::invalid_argument("empty backprop path");
  double g = leaf_value;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    g = it->reward + gamma * g;
    it->edge->add(g);
  }
}

// Discounted return of the default policy over at most `horizon` steps.
template <PlanningDomain D>
double rollout(const D& domain, typename D::State state, int horizon,
               Rng& rng) {
  double total = 0.0;
  double discount = 1.0;
  for (int t = 0; t < horizon && !domain.is_terminal(state); ++t) {
    const auto a = domain.default_action(state, rng);
    if constexpr (requires { domain.advance(state, a, rng); }) {
      total += discount * domain.advance(state, a, rng);
    } else {
      auto next = domain.transition(state, a, rng);
      total += discount * next.reward;
      state = std::move(next.state);
    }
    discount *= domain.gamma();
  }
  return total;
}

// Prior knowledge attached to an edge when its node is first materialized.
struct EdgePrior {
  double transfer_u = kInf;
  long seed_visits = 0;
  double seed_q = 0.0;
};

class TransferOracle {
 public:
  virtual ~TransferOracle() = default;
  // Fills one EdgePrior per action signature of the node with this key.
  virtual void lookup(const std::string& state_key,
                      std::span<const std::string> sigs,
                      std::span<EdgePrior> out) const = 0;
};

template <PlanningDomain D>
struct SearchNode {
  using State = typename D::State;
  using Action = typename D::Action;

  std::string key;
  State state;
  int depth = 0;
  // Selections made at this node plus seeded prior visits.
  long visits = 0;
  std::vector<Action> actions;
  std::vector<std::string> sigs;
  std::vector<EdgeStats> stats;
  std::vector<double> transfer_u;
  std::vector<char> eliminated;
  // Per edge: (child state key, node index).
  std::vector<std::vector<std::pair<std::string, int>>> children;

  std::size_t edge_count() const { return actions.size(); }
};

// Argmax over non-eliminated edges of min(uct, U). Ties go to the higher
// visit count, then the lexicographically smaller signature.
template <class Node>
std::size_t maxmin_select(const Node& node, double c) {
  std::size_t best = node.edge_count();
  double best_score = -kInf;
  for (std::size_t i = 0; i < node.edge_count(); ++i) {
    if (node.eliminated[i]) continue;
    const double score =
        std::min(uct_score(node.stats[i], node.visits, c), node.transfer_u[i]);
    if (best == node.edge_count() || score > best_score ||
        (score == best_score &&
         (node.stats[i].visit_count > node.stats[best].visit_count ||
          (node.stats[i].visit_count == node.stats[best].visit_count &&
           node.sigs[i] < node.sigs[best])))) {
      best = i;
      best_score = score;
    }
  }
  if (best == node.edge_count()) {
    throw std::logic_error("every action at " + node.key + " is eliminated");
  }
  return best;
}

// Non-eliminated visited edge with the largest lower confidence bound, or
// edge_count() when there is none.
template <class Node>
std::size_t best_lcb_edge(const Node& node, double c) {
  std::size_t best = node.edge_count();
  double best_lcb = -kInf;
  for (std::size_t i = 0; i < node.edge_count(); ++i) {
    if (node.eliminated[i] || node.stats[i].visit_count == 0) continue;
    const double lcb = lcb_score(node.stats[i], node.visits, c);
    if (best == node.edge_count() || lcb > best_lcb ||
        (lcb == best_lcb &&
         (node.stats[i].visit_count > node.stats[best].visit_count ||
          (node.stats[i].visit_count == node.stats[best].visit_count &&
           node.sigs[i] < node.sigs[best])))) {
      best = i;
      best_lcb = lcb;
    }
  }
  return best;
}

// Marks every action whose transfer bound lies below the best lower
// confidence bound. Needs two visited live edges; the LCB maximizer itself
// is never eliminated. Returns the number of newly eliminated edges.
template <class Node>
int eliminate_actions(Node& node, double c) {
  int visited = 0;
  for (std::size_t i = 0; i < node.edge_count(); ++i) {
    if (!node.eliminated[i] && node.stats[i].visit_count > 0) ++visited;
  }
  if (visited < 2) return 0;
  const std::size_t best = best_lcb_edge(node, c);
  const double threshold = lcb_score(node.stats[best], node.visits, c);
  int count = 0;
  for (std::size_t i = 0; i < node.edge_count(); ++i) {
    if (i == best || node.eliminated[i]) continue;
    if (node.transfer_u[i] < threshold) {
      node.eliminated[i] = 1;
      ++count;
    }
  }
  return count;
}

template <class A>
struct PlanResult {
  A action;
  std::string sig;
  int sims_used = 0;
  bool early_stopped = false;
  std::size_t tree_size = 0;
  int seeded_edges = 0;
};

template <PlanningDomain D>
class UctSearch {
 public:
  using State = typename D::State;
  using Action = typename D::Action;
  using Node = SearchNode<D>;

  UctSearch(const D& domain, UctParams params,
            const TransferOracle* oracle = nullptr)
      : domain_(domain), params_(params), oracle_(oracle) {
    params_.validate();
    c_ = params_.exploration(domain_.gamma(), domain_.r_max());
  }

  double exploration() const { return c_; }
  const UctParams& params() const { return params_; }
  const std::vector<Node>& tree() const { return tree_; }

  PlanResult<Action> plan(const State& root_state, Rng& rng) {
    tree_.clear();
    seeded_edges_ = 0;
    make_node(root_state, 0);
    if (tree_[0].actions.empty()) {
      throw std::logic_error("no legal action at the search root");
    }
    if (tree_[0].actions.size() == 1) return finish(0, 0, false);

    const bool stopping = params_.early_stop && oracle_ != nullptr;
    int sims = 0;
    bool stopped = stopping && root_decided();
    while (!stopped && sims < params_.budget) {
      simulate(rng);
      ++sims;
      stopped = stopping && root_decided();
    }
    const std::size_t chosen =
        stopped ? best_lcb_edge(tree_[0], c_) : robust_child(tree_[0]);
    return finish(chosen, sims, stopped);
  }

  // Depth-limited text dump of the last tree.
  void dump(std::ostream& out, int depth_limit) const {
    if (!tree_.empty()) dump_node(out, 0, depth_limit);
  }

 private:
  bool root_decided() {
    Node& root = tree_[0];
    eliminate_actions(root, c_);
    const std::size_t best = best_lcb_edge(root, c_);
    if (best == root.edge_count()) return false;
    for (std::size_t i = 0; i < root.edge_count(); ++i) {
      if (i != best && !root.eliminated[i]) return false;
    }
    return true;
  }

  static std::size_t robust_child(const Node& n) {
    std::size_t best = n.edge_count();
    for (std::size_t i = 0; i < n.edge_count(); ++i) {
      if (n.eliminated[i]) continue;
      if (best == n.edge_count()) {
        best = i;
        continue;
      }
      const auto& a = n.stats[i];
      const auto& b = n.stats[best];
      if (a.visit_count > b.visit_count ||
          (a.visit_count == b.visit_count &&
           (a.q_hat() > b.q_hat() ||
            (a.q_hat() == b.q_hat() && n.sigs[i] < n.sigs[best])))) {
        best = i;
      }
    }
    return best;
  }

  PlanResult<Action> finish(std::size_t edge, int sims, bool stopped) {
    const Node& root = tree_[0];
    return PlanResult<Action>{root.actions[edge], root.sigs[edge], sims,
                              stopped, tree_.size(), seeded_edges_};
  }

  int make_node(State state, int depth) {
    Node n;
    n.key = domain_.state_key(state);
    n.depth = depth;
    if (!domain_.is_terminal(state)) n.actions = domain_.legal_actions(state);
    n.state = std::move(state);
    const std::size_t k = n.actions.size();
    n.sigs.reserve(k);
    for (const auto& a : n.actions) n.sigs.push_back(domain_.action_sig(a));
    n.stats.assign(k, EdgeStats{});
    n.transfer_u.assign(k, kInf);
    n.eliminated.assign(k, 0);
    n.children.resize(k);
    if (oracle_ != nullptr && k > 0) {
      std::vector<EdgePrior> priors(k);
      oracle_->lookup(n.key, n.sigs, priors);
      for (std::size_t i = 0; i < k; ++i) {
        n.transfer_u[i] = priors[i].transfer_u;
        if (priors[i].seed_visits > 0) {
          n.stats[i].seed(priors[i].seed_visits, priors[i].seed_q);
          n.visits += priors[i].seed_visits;
          ++seeded_edges_;
        }
      }
    }
    tree_.push_back(std::move(n));
    return static_cast<int>(tree_.size()) - 1;
  }

  void simulate(Rng& rng) {
    std::vector<std::pair<int, std::size_t>> edges;
    std::vector<double> rewards;
    int index = 0;
    double leaf = 0.0;
    while (true) {
      Node& node = tree_[index];
      if (node.actions.empty()) break;
      if (node.depth >= params_.max_depth) {
        leaf = rollout(domain_, node.state, params_.rollout_horizon, rng);
        break;
      }
      ++node.visits;
      if (oracle_ != nullptr) eliminate_actions(node, c_);
      const std::size_t e = maxmin_select(node, c_);
      auto next = domain_.transition(node.state, node.actions[e], rng);
      edges.emplace_back(index, e);
      rewards.push_back(next.reward);
      auto key = domain_.state_key(next.state);
      int child = -1;
      for (const auto& [k, idx] : node.children[e]) {
        if (k == key) {
          child = idx;
          break;
        }
      }
      if (child >= 0) {
        index = child;
        continue;
      }
      const int depth = node.depth + 1;
      const int created = make_node(std::move(next.state), depth);
      tree_[index].children[e].emplace_back(std::move(key), created);
      leaf = rollout(domain_, tree_[created].state, params_.rollout_horizon,
                     rng);
      break;
    }
    if (edges.empty()) return;
    std::vector<PathStep> path;
    path.reserve(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      path.push_back(
          PathStep{&tree_[edges[i].first].stats[edges[i].second], rewards[i]});
    }
    backpropagate(path, leaf, domain_.gamma());
  }

  void dump_node(std::ostream& out, int index, int depth_limit) const {
    const Node& n = tree_[index];
    const std::string indent(static_cast<std::size_t>(2 * n.depth), ' ');
    out << indent << "node " << n.key << " N=" << n.visits << "\n";
    if (n.depth >= depth_limit) return;
    for (std::size_t i = 0; i < n.edge_count(); ++i) {
      out << indent << "- " << n.sigs[i] << " N=" << n.stats[i].visit_count
          << " q=" << n.stats[i].q_hat();
      if (n.stats[i].prior_visits) out << " prior=" << n.stats[i].prior_visits;
      if (n.transfer_u[i] < kInf) out << " U=" << n.transfer_u[i];
      if (n.eliminated[i]) out << " eliminated";
      out << "\n";
      for (const auto& [key, child] : n.children[i]) {
        dump_node(out, child, depth_limit);
      }
    }
  }

  const D& domain_;
  UctParams params_;
  const TransferOracle* oracle_;
  double c_ = 0.0;
  std::vector<Node> tree_;
  int seeded_edges_ = 0;
};

}  // namespace lisfc
