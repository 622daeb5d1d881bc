#pragma once

#include "lisfc/baselines.hpp"
#include "lisfc/mdp.hpp"
#include "lisfc/search.hpp"

namespace lisfc {

// Adapts the SFC MDP to the search template. Dynamics are deterministic
// given the state (pending arrivals are part of it), so the rng is unused.
class SfcDomain {
 public:
  using State = MdpState;
  using Action = lisfc::Action;

  explicit SfcDomain(const SfcEnvironment& env)
      : SfcDomain(env, env.params().k_paths, env.params().a_max) {}
  SfcDomain(const SfcEnvironment& env, int k_paths, int a_max)
      : env_(env), k_paths_(k_paths), a_max_(a_max) {}

  const SfcEnvironment& env() const { return env_; }

  std::vector<Action> legal_actions(const State& s) const {
    return enumerate_actions(env_, s, k_paths_, a_max_);
  }
  Transition<State> transition(const State& s, const Action& a, Rng&) const {
    Transition<State> t{s, 0.0};
    t.reward = apply_action(env_, t.state, a);
    return t;
  }
  double advance(State& s, const Action& a, Rng&) const {
    return apply_action(env_, s, a);
  }
  Action default_action(const State& s, Rng&) const {
    return nf_heuristic(env_, s, k_paths_);
  }
  std::string state_key(const State& s) const {
    return lisfc::state_key(env_, s);
  }
  std::string action_sig(const Action& a) const { return a.sig(); }
  double gamma() const { return env_.reward().gamma; }
  double r_max() const { return env_.reward().r_max; }
  bool is_terminal(const State& s) const { return s.terminal(); }

 private:
  const SfcEnvironment& env_;
  int k_paths_;
  int a_max_;
};

static_assert(PlanningDomain<SfcDomain>);

}  // namespace lisfc
