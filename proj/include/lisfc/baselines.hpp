#pragma once

#include "lisfc/mdp.hpp"

namespace lisfc {

// Greedy shortest-path placer: the first of the k candidate paths on which
// max-residual packing fits, else Wait while the deadline allows, else
// Reject. Pure function of the state.
Action nf_heuristic(const SfcEnvironment& env, const MdpState& s, int k_paths);

}  // namespace lisfc
