// Command-line front end: scenario runs, graph drift and distance estimates.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "lisfc/drift.hpp"
#include "lisfc/harness.hpp"
#include "lisfc/lifelong.hpp"

namespace {

std::vector<lisfc::TraceRow> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read trace " + path);
  return lisfc::read_trace(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lifelong SFC placement simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario from a config file");
  std::string config_path, out_dir;
  std::uint64_t seed_offset = 0;
  bool quiet = false;
  run->add_option("--config", config_path, "scenario config (INI)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed-offset", seed_offset, "added to every seed");
  run->add_flag("-q,--quiet", quiet, "no per-run progress on stderr");

  auto* drift = app.add_subcommand("drift", "graph drift between two graphs");
  std::string g1, g2, weights_path;
  drift->add_option("g1", g1)->required()->check(CLI::ExistingFile);
  drift->add_option("g2", g2)->required()->check(CLI::ExistingFile);
  drift->add_option("--weights", weights_path, "weights config ([weights])")
      ->check(CLI::ExistingFile);

  auto* estimate =
      app.add_subcommand("estimate", "MDP distance from two trajectory logs");
  std::string trace_a, trace_b;
  double kappa = 1.0;
  estimate->add_option("trace_a", trace_a)->required()->check(CLI::ExistingFile);
  estimate->add_option("trace_b", trace_b)->required()->check(CLI::ExistingFile);
  estimate->add_option("--kappa", kappa, "transition weight")
      ->check(CLI::PositiveNumber);

  auto* topo = app.add_subcommand("topology", "write G0 or a perturbed variant");
  int nodes = 20, links = 40;
  std::uint64_t seed = 1, perturb_seed = 7;
  std::string perturb = "none", graph_out;
  topo->add_option("--nodes", nodes);
  topo->add_option("--links", links);
  topo->add_option("--seed", seed);
  topo->add_option("--perturb", perturb)
      ->check(CLI::IsMember({"none", "upgrade", "degrade", "mixed"}));
  topo->add_option("--perturb-seed", perturb_seed);
  topo->add_option("--out", graph_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto config = lisfc::load_scenario_config(config_path, seed_offset);
      auto result = lisfc::run_scenario(config, quiet ? nullptr : &std::cerr);
      lisfc::write_outputs(result, out_dir);
    } else if (*drift) {
      lisfc::DriftWeights w;
      if (!weights_path.empty()) w = lisfc::load_drift_weights(weights_path);
      const auto r = lisfc::graph_drift(lisfc::load_graph(g1),
                                        lisfc::load_graph(g2), w);
      std::printf("%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.delta_spec,
                  r.delta_cap, r.delta_bw, r.delta_edit, r.delta_g,
                  r.mdp_distance_bound);
    } else if (*estimate) {
      const auto a = load_trace(trace_a);
      const auto b = load_trace(trace_b);
      std::printf("%.10g\n", lisfc::estimate_trace_distance(a, b, kappa));
    } else if (*topo) {
      auto g = lisfc::build_base_topology(nodes, links, seed);
      if (perturb == "upgrade") {
        g = lisfc::apply_perturbation(g, lisfc::PerturbationSpec::upgrade(perturb_seed));
        g.set_id("G1");
      } else if (perturb == "degrade") {
        g = lisfc::apply_perturbation(g, lisfc::PerturbationSpec::degrade(perturb_seed));
        g.set_id("G2");
      } else if (perturb == "mixed") {
        g = lisfc::apply_perturbation(g, lisfc::PerturbationSpec::mixed(perturb_seed));
        g.set_id("G3");
      }
      lisfc::save_graph(graph_out, g);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
