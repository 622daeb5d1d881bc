#include "lisfc/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lisfc {

void TabularMdp::validate() const {
  if (states < 1 || actions < 1) throw std::invalid_argument("empty MDP");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  if (reward.size() != static_cast<std::size_t>(states * actions) ||
      prob.size() != static_cast<std::size_t>(states * actions * states)) {
    throw std::invalid_argument("MDP table sizes do not match");
  }
  for (int sa = 0; sa < states * actions; ++sa) {
    if (std::abs(reward[sa]) > r_max) {
      throw std::invalid_argument("reward exceeds r_max");
    }
    double sum = 0.0;
    for (int n = 0; n < states; ++n) {
      const double v = prob[sa * states + n];
      if (v < 0.0) throw std::invalid_argument("negative probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("transition row does not sum to 1");
    }
  }
}

namespace {

std::vector<double> dirichlet_row(int n, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> row(n);
  double sum = 0.0;
  for (auto& v : row) {
    v = e(rng) + 1e-12;
    sum += v;
  }
  for (auto& v : row) v /= sum;
  return row;
}

}  // namespace

TabularMdp random_tabular_mdp(int states, int actions, double gamma,
                              double r_max, Rng& rng) {
  TabularMdp m;
  m.states = states;
  m.actions = actions;
  m.gamma = gamma;
  m.r_max = r_max;
  std::uniform_real_distribution<double> u(0.0, r_max);
  for (int sa = 0; sa < states * actions; ++sa) {
    m.reward.push_back(u(rng));
    const auto row = dirichlet_row(states, rng);
    m.prob.insert(m.prob.end(), row.begin(), row.end());
  }
  m.validate();
  return m;
}

TabularMdp perturb_tabular_mdp(const TabularMdp& m, double reward_noise,
                               double mix, Rng& rng) {
  TabularMdp out = m;
  std::uniform_real_distribution<double> u(-reward_noise, reward_noise);
  for (auto& r : out.reward) r = std::clamp(r + u(rng), 0.0, m.r_max);
  for (int sa = 0; sa < m.states * m.actions; ++sa) {
    const auto row = dirichlet_row(m.states, rng);
    double sum = 0.0;
    for (int n = 0; n < m.states; ++n) {
      auto& v = out.prob[sa * m.states + n];
      v = (1.0 - mix) * v + mix * row[n];
      sum += v;
    }
    for (int n = 0; n < m.states; ++n) out.prob[sa * m.states + n] /= sum;
  }
  out.validate();
  return out;
}

double exact_distance(const TabularMdp& a, const TabularMdp& b,
                      double kappa) {
  if (a.states != b.states || a.actions != b.actions) {
    throw std::invalid_argument("MDPs do not share state/action spaces");
  }
  double sum = 0.0;
  for (int s = 0; s < a.states; ++s) {
    for (int act = 0; act < a.actions; ++act) {
      const double dr = std::abs(a.r(s, act) - b.r(s, act));
      for (int n = 0; n < a.states; ++n) {
        sum += dr + kappa * std::abs(a.p(s, act, n) - b.p(s, act, n));
      }
    }
  }
  return sum / static_cast<double>(a.states * a.actions * a.states);
}

std::vector<double> optimal_q(const TabularMdp& m, double tolerance) {
  std::vector<double> v(m.states, 0.0);
  std::vector<double> q(m.states * m.actions, 0.0);
  for (int iter = 0; iter < 100000; ++iter) {
    double change = 0.0;
    for (int s = 0; s < m.states; ++s) {
      for (int a = 0; a < m.actions; ++a) {
        double next = 0.0;
        for (int n = 0; n < m.states; ++n) next += m.p(s, a, n) * v[n];
        q[s * m.actions + a] = m.r(s, a) + m.gamma * next;
      }
    }
    for (int s = 0; s < m.states; ++s) {
      const double best = *std::max_element(q.begin() + s * m.actions,
                                            q.begin() + (s + 1) * m.actions);
      change = std::max(change, std::abs(best - v[s]));
      v[s] = best;
    }
    if (change < tolerance) break;
  }
  return q;
}

Transition<int> TabularDomain::transition(int s, int a, Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  int next = m_.states - 1;
  for (int n = 0; n < m_.states; ++n) {
    acc += m_.p(s, a, n);
    if (x < acc) {
      next = n;
      break;
    }
  }
  return Transition<int>{next, m_.r(s, a)};
}

int TabularDomain::default_action(int, Rng& rng) const {
  std::uniform_int_distribution<int> pick(0, m_.actions - 1);
  return pick(rng);
}

}  // namespace lisfc
