#include "lisfc/drift.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <map>
#include <set>

namespace lisfc {

void DriftWeights::validate() const {
  for (double w : {w_spec, w_cap, w_bw, w_edit}) {
    if (!(w >= 0.0)) throw std::invalid_argument("drift weights must be >= 0");
  }
  if (w_spec + w_cap + w_bw + w_edit <= 0.0) {
    throw std::invalid_argument("at least one drift weight must be positive");
  }
  for (const auto& rho : {rho_spec, rho_cap, rho_bw, rho_edit}) {
    if (rho && !(*rho > 0.0)) {
      throw std::invalid_argument("drift normalizers must be positive");
    }
  }
  if (!(lipschitz_c > 0.0)) {
    throw std::invalid_argument("lipschitz_c must be positive");
  }
}

std::vector<double> laplacian_spectrum(const NetworkGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  if (n == 0) return {};
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& l : g.links()) {
    const auto a = static_cast<Eigen::Index>(*g.node_index(l.u));
    const auto b = static_cast<Eigen::Index>(*g.node_index(l.v));
    lap(a, a) += 1.0;
    lap(b, b) += 1.0;
    lap(a, b) -= 1.0;
    lap(b, a) -= 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      lap, Eigen::EigenvaluesOnly);
  const auto& values = solver.eigenvalues();
  std::vector<double> out(values.data(), values.data() + values.size());
  std::sort(out.begin(), out.end());
  return out;
}

double spectral_distance(const NetworkGraph& a, const NetworkGraph& b) {
  auto sa = laplacian_spectrum(a);
  auto sb = laplacian_spectrum(b);
  // Pad the shorter spectrum with leading zeros so it stays ascending.
  if (sa.size() < sb.size()) sa.insert(sa.begin(), sb.size() - sa.size(), 0.0);
  if (sb.size() < sa.size()) sb.insert(sb.begin(), sa.size() - sb.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = sa[i] - sb[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double capacity_delta(const NetworkGraph& a, const NetworkGraph& b) {
  std::map<NodeId, std::pair<int, int>> merged;
  for (const auto& n : a.nodes()) merged[n.id].first = n.cpu;
  for (const auto& n : b.nodes()) merged[n.id].second = n.cpu;
  double sum = 0.0;
  for (const auto& [id, caps] : merged) sum += std::abs(caps.first - caps.second);
  return sum;
}

double bandwidth_delta(const NetworkGraph& a, const NetworkGraph& b) {
  std::map<std::pair<NodeId, NodeId>, std::pair<int, int>> merged;
  for (const auto& l : a.links()) merged[{l.u, l.v}].first = l.bw;
  for (const auto& l : b.links()) merged[{l.u, l.v}].second = l.bw;
  double sum = 0.0;
  for (const auto& [key, bws] : merged) sum += std::abs(bws.first - bws.second);
  return sum;
}

double edit_distance(const NetworkGraph& a, const NetworkGraph& b) {
  std::set<NodeId> va, vb;
  for (const auto& n : a.nodes()) va.insert(n.id);
  for (const auto& n : b.nodes()) vb.insert(n.id);
  std::set<std::pair<NodeId, NodeId>> ea, eb;
  for (const auto& l : a.links()) ea.insert({l.u, l.v});
  for (const auto& l : b.links()) eb.insert({l.u, l.v});
  std::vector<NodeId> node_diff;
  std::set_symmetric_difference(va.begin(), va.end(), vb.begin(), vb.end(),
                                std::back_inserter(node_diff));
  std::vector<std::pair<NodeId, NodeId>> edge_diff;
  std::set_symmetric_difference(ea.begin(), ea.end(), eb.begin(), eb.end(),
                                std::back_inserter(edge_diff));
  return static_cast<double>(node_diff.size() + edge_diff.size());
}

DriftReport combine_drift(double delta_spec, double delta_cap, double delta_bw,
                          double delta_edit, const NetworkGraph& a,
                          const NetworkGraph& b, const DriftWeights& weights) {
  weights.validate();
  auto positive = [](double v) { return v > 0.0 ? v : 1.0; };
  const double rho_spec = weights.rho_spec.value_or(positive(static_cast<double>(
      std::max(a.node_count(), b.node_count()))));
  const double rho_cap = weights.rho_cap.value_or(
      positive(0.5 * static_cast<double>(a.total_cpu() + b.total_cpu())));
  const double rho_bw = weights.rho_bw.value_or(
      positive(0.5 * static_cast<double>(a.total_bw() + b.total_bw())));
  const double rho_edit = weights.rho_edit.value_or(positive(
      0.5 * static_cast<double>(a.node_count() + a.link_count() +
                                b.node_count() + b.link_count())));

  DriftReport r;
  r.delta_spec = delta_spec;
  r.delta_cap = delta_cap;
  r.delta_bw = delta_bw;
  r.delta_edit = delta_edit;
  r.delta_g = weights.w_spec * delta_spec / rho_spec +
              weights.w_cap * delta_cap / rho_cap +
              weights.w_bw * delta_bw / rho_bw +
              weights.w_edit * delta_edit / rho_edit;
  r.mdp_distance_bound = weights.lipschitz_c * r.delta_g;
  return r;
}

DriftReport graph_drift(const NetworkGraph& a, const NetworkGraph& b,
                        const DriftWeights& weights) {
  return combine_drift(spectral_distance(a, b), capacity_delta(a, b),
                       bandwidth_delta(a, b), edit_distance(a, b), a, b,
                       weights);
}

double calibrate_lipschitz_c(
    std::span<const std::pair<DriftReport, double>> samples) {
  double worst_ratio = 0.0;
  bool any_positive = false;
  for (const auto& [report, d_hat] : samples) {
    if (report.delta_g > 0.0) {
      any_positive = true;
      worst_ratio = std::max(worst_ratio, d_hat / report.delta_g);
    } else if (d_hat > 0.0) {
      throw SurrogateError(
          "graph drift is zero while the estimated MDP distance is positive");
    }
  }
  if (!any_positive) {
    throw std::invalid_argument(
        "calibration needs at least one sample with positive drift");
  }
  return worst_ratio * kLipschitzSafetyFactor;
}

namespace {

std::optional<double> optional_value(const boost::property_tree::ptree& t,
                                     const char* key) {
  if (auto v = t.get_optional<double>(key)) return *v;
  return std::nullopt;
}

}  // namespace

DriftWeights load_drift_weights(const std::string& path) {
  boost::property_tree::ptree tree;
  boost::property_tree::read_ini(path, tree);
  DriftWeights w;
  const auto section = tree.get_child_optional("weights");
  const auto& t = section ? *section : tree;
  w.w_spec = t.get("w_spec", w.w_spec);
  w.w_cap = t.get("w_cap", w.w_cap);
  w.w_bw = t.get("w_bw", w.w_bw);
  w.w_edit = t.get("w_edit", w.w_edit);
  w.rho_spec = optional_value(t, "rho_spec");
  w.rho_cap = optional_value(t, "rho_cap");
  w.rho_bw = optional_value(t, "rho_bw");
  w.rho_edit = optional_value(t, "rho_edit");
  w.lipschitz_c = t.get("lipschitz_c", w.lipschitz_c);
  w.validate();
  return w;
}

}  // namespace lisfc
