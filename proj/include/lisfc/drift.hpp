#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lisfc/graph.hpp"

namespace lisfc {

// Weights and per-component scale divisors for the aggregate drift, plus the
// Lipschitz constant that turns drift into an MDP-distance bound.
//
// Unset normalizers are derived from the pair being compared, symmetrically:
// spectral uses max(|V|, |V'|), capacity and bandwidth use the mean total
// resource of the two graphs, edit uses the mean of |V| + |E|.
struct DriftWeights {
  double w_spec = 0.25;
  double w_cap = 0.25;
  double w_bw = 0.25;
  double w_edit = 0.25;
  std::optional<double> rho_spec;
  std::optional<double> rho_cap;
  std::optional<double> rho_bw;
  std::optional<double> rho_edit;
  double lipschitz_c = 1.0;

  // Throws std::invalid_argument on negative weights, all-zero weights,
  // non-positive normalizers or a non-positive lipschitz_c.
  void validate() const;
};

struct DriftReport {
  double delta_spec = 0.0;
  double delta_cap = 0.0;
  double delta_bw = 0.0;
  double delta_edit = 0.0;
  double delta_g = 0.0;
  double mdp_distance_bound = 0.0;
};

// Eigenvalues of the combinatorial Laplacian D - A, ascending.
std::vector<double> laplacian_spectrum(const NetworkGraph& g);

double spectral_distance(const NetworkGraph& a, const NetworkGraph& b);
double capacity_delta(const NetworkGraph& a, const NetworkGraph& b);
double bandwidth_delta(const NetworkGraph& a, const NetworkGraph& b);
double edit_distance(const NetworkGraph& a, const NetworkGraph& b);

DriftReport graph_drift(const NetworkGraph& a, const NetworkGraph& b,
                        const DriftWeights& weights);

// Same aggregation, starting from already computed raw components.
DriftReport combine_drift(double delta_spec, double delta_cap, double delta_bw,
                          double delta_edit, const NetworkGraph& a,
                          const NetworkGraph& b, const DriftWeights& weights);

class SurrogateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kLipschitzSafetyFactor = 1.1;

// Smallest c with c * delta_g >= d_hat over all samples, times 1.1. Throws
// SurrogateError when a sample has zero drift but positive distance, and
// std::invalid_argument when no sample has positive drift.
double calibrate_lipschitz_c(
    std::span<const std::pair<DriftReport, double>> samples);

DriftWeights load_drift_weights(const std::string& path);

}  // namespace lisfc
