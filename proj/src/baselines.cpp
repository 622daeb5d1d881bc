#include "lisfc/baselines.hpp"

#include <algorithm>

namespace lisfc {

Action nf_heuristic(const SfcEnvironment& env, const MdpState& s,
                    int k_paths) {
  const auto* head = s.head();
  if (head == nullptr) return Action::wait();
  if (s.clock + head->duration <= head->deadline_slot) {
    const auto paths = env.paths(head->ingress, head->egress);
    const auto n = std::min<std::size_t>(paths.size(),
                                         static_cast<std::size_t>(k_paths));
    for (std::size_t i = 0; i < n; ++i) {
      auto p = max_residual_on_path(env, s, *head, paths[i]);
      if (!p) continue;
      Action a = Action::place(std::move(*p));
      if (is_feasible(env, s, a)) return a;
    }
  }
  if (wait_allowed(s)) return Action::wait();
  return Action::reject();
}

}  // namespace lisfc
