#pragma once

// Small explicit MDPs: used to check the transfer bounds and the distance
// estimator against exact enumeration.

#include <string>
#include <vector>

#include "lisfc/search.hpp"

namespace lisfc {

struct TabularMdp {
  int states = 0;
  int actions = 0;
  double gamma = 0.9;
  double r_max = 1.0;
  // reward[s * actions + a]; prob[(s * actions + a) * states + s'].
  std::vector<double> reward;
  std::vector<double> prob;

  double r(int s, int a) const { return reward[s * actions + a]; }
  double p(int s, int a, int next) const {
    return prob[(s * actions + a) * states + next];
  }
  void validate() const;
};

// Rewards uniform on [0, r_max]; each transition row drawn from a flat
// Dirichlet, so every entry is positive.
TabularMdp random_tabular_mdp(int states, int actions, double gamma,
                              double r_max, Rng& rng);

// Same shape; rewards shifted by up to +-reward_noise (clamped to
// [0, r_max]) and rows mixed with a fresh random row at weight mix.
TabularMdp perturb_tabular_mdp(const TabularMdp& m, double reward_noise,
                               double mix, Rng& rng);

// d under the uniform measure over all (s, a, s') triples.
double exact_distance(const TabularMdp& a, const TabularMdp& b, double kappa);

// Q* by value iteration, indexed s * actions + a.
std::vector<double> optimal_q(const TabularMdp& m, double tolerance = 1e-12);

class TabularDomain {
 public:
  using State = int;
  using Action = int;

  explicit TabularDomain(const TabularMdp& m) : m_(m) {}

  std::vector<Action> legal_actions(State) const {
    std::vector<Action> out(m_.actions);
    for (int a = 0; a < m_.actions; ++a) out[a] = a;
    return out;
  }
  Transition<State> transition(State s, Action a, Rng& rng) const;
  Action default_action(State, Rng& rng) const;
  std::string state_key(State s) const { return "s" + std::to_string(s); }
  std::string action_sig(Action a) const { return "a" + std::to_string(a); }
  double gamma() const { return m_.gamma; }
  double r_max() const { return m_.r_max; }
  bool is_terminal(State) const { return false; }

 private:
  const TabularMdp& m_;
};

static_assert(PlanningDomain<TabularDomain>);

}  // namespace lisfc
