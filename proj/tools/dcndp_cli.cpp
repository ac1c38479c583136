// Command-line front end. Every subcommand loads its inputs, calls one library
// operation and writes the result.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "dcndp/errors.hpp"
#include "dcndp/graph.hpp"
#include "dcndp/model.hpp"
#include "dcndp/pipeline.hpp"
#include "dcndp/policy.hpp"
#include "dcndp/polyhedra.hpp"
#include "dcndp/population.hpp"
#include "dcndp/rollout.hpp"
#include "dcndp/solvers.hpp"

namespace fs = std::filesystem;
using namespace dcndp;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitSizeGuard = 4;

std::ofstream open_out(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return in;
}

/// Attribute file: explicit path, or <stem>.attrs.csv next to a .edges file.
Graph load(const std::string& graph, const std::string& attrs) {
  std::string attr_path = attrs;
  if (attr_path.empty()) {
    const fs::path p(graph);
    if (p.extension() == ".edges") {
      const fs::path sibling = p.parent_path() / (p.stem().string() + ".attrs.csv");
      if (fs::exists(sibling)) attr_path = sibling.string();
    }
  }
  return load_graph_file(graph, attr_path);
}

std::int64_t resolve_budget(std::int64_t budget, double frac, std::int64_t n) {
  return budget >= 0 ? budget : budget_from_fraction(frac, n);
}

ConstraintStyle parse_style(const std::string& s) {
  if (s == "agg") return ConstraintStyle::Aggregated;
  if (s == "disagg") return ConstraintStyle::Disaggregated;
  throw ConfigError("style must be agg or disagg");
}

MipModel make_model(const Graph& g, int k, std::int64_t budget, ConstraintStyle style, bool relax) {
  return k == 1 ? build_1dcndp(g, budget, relax) : build_2dcndp(g, edge_squared(g), budget, style, relax);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distance-based critical node detection and vaccination rollout toolkit", "dcndp"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", version_info());
  std::string config_path;
  app.add_option("--config", config_path, "Pipeline configuration JSON")->check(CLI::ExistingFile);

  std::string graph_path, attrs_path, out_path;
  auto add_graph = [&](CLI::App* sub) {
    sub->add_option("--graph", graph_path, "Edge list")->required()->check(CLI::ExistingFile);
    sub->add_option("--attrs", attrs_path, "Attribute CSV (default: <graph stem>.attrs.csv when present)");
  };

  // gen-population
  auto* gen = app.add_subcommand("gen-population", "Generate a synthetic attributed contact network");
  PopulationConfig pop;
  std::string out_prefix;
  std::vector<double> rha_weights;
  gen->add_option("--seed", pop.seed, "Random seed")->required();
  gen->add_option("--n", pop.n, "Population size")->required();
  gen->add_option("--out-prefix", out_prefix, "Writes <prefix>.edges and <prefix>.attrs.csv")->required();
  gen->add_option("--rha-weights", rha_weights, "East,Central,West,LaGr shares")->delimiter(',')->expected(4);
  gen->add_option("--community-degree", pop.mixing.community_degree, "Mean community edges per person");
  gen->add_option("--workplace-cap", pop.mixing.workplace_cap, "Largest workplace clique");
  gen->add_option("--school-cap", pop.mixing.school_cap, "Largest school clique");

  // partition
  auto* part = app.add_subcommand("partition", "Split by RHA and bisect oversized parts");
  bool by_rha = false;
  std::int64_t max_size = 2600;
  std::uint64_t part_seed = 1;
  add_graph(part);
  part->add_flag("--by-rha", by_rha, "Split by regional health authority first");
  part->add_option("--max-size", max_size, "Largest part size");
  part->add_option("--seed", part_seed, "Random seed");
  part->add_option("--out", out_path, "parts.json")->required();

  // build-model
  auto* build = app.add_subcommand("build-model", "Write the 1- or 2-DCNDP model as free MPS");
  int k = 1;
  std::string style = "agg";
  double budget_frac = 0.2;
  std::int64_t budget = -1;
  bool relax = false;
  add_graph(build);
  build->add_option("--k", k, "Hop distance")->check(CLI::IsMember({1, 2}));
  build->add_option("--style", style, "2-hop row style")->check(CLI::IsMember({"agg", "disagg"}));
  build->add_option("--budget-frac", budget_frac, "Budget as a fraction of n");
  build->add_option("--budget", budget, "Absolute budget (overrides --budget-frac)");
  build->add_flag("--relax", relax, "Continuous y");
  build->add_option("--out", out_path, "MPS path")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Solve DCNDP on a graph");
  std::string method = "bnb", solver_cmd;
  double time_limit = 3600.0;
  std::int64_t node_limit = -1;
  bool fix = false;
  add_graph(solve);
  solve->add_option("--k", k, "Hop distance")->check(CLI::IsMember({1, 2}));
  solve->add_option("--budget-frac", budget_frac, "Budget as a fraction of n");
  solve->add_option("--budget", budget, "Absolute budget (overrides --budget-frac)");
  solve->add_option("--method", method, "Solver")->check(CLI::IsMember({"oracle", "bnb", "greedy", "external"}));
  solve->add_option("--solver-cmd", solver_cmd, "External command with {mps}, {sol}, {timelimit}");
  solve->add_option("--style", style, "2-hop row style for external solves")->check(CLI::IsMember({"agg", "disagg"}));
  solve->add_option("--time-limit", time_limit, "Seconds");
  solve->add_option("--node-limit", node_limit, "Branch-and-bound node limit");
  solve->add_flag("--fix-simplicial", fix, "Exclude provably unnecessary simplicial nodes");
  solve->add_option("--out", out_path, "Solution JSON (stdout when absent)");

  // verify-polyhedra
  auto* verify = app.add_subcommand("verify-polyhedra", "Check face certificates of the 1-DCNDP polytope");
  int proposition = 1;
  std::string report_path;
  add_graph(verify);
  verify->add_option("--budget", budget, "Budget")->required();
  verify->add_option("--proposition", proposition, "1 = dimension, 2 = trivial bounds, 3 = edge rows")
      ->check(CLI::IsMember({1, 2, 3}));
  verify->add_option("--report", report_path, "CSV report")->required();

  // train-policy
  auto* train = app.add_subcommand("train-policy", "Train a decision tree on DCNDP labels and derive a policy");
  std::string solution_path, tree_out;
  bool realistic = false;
  int max_depth = 5;
  double min_leaf_prob = 0.5;
  add_graph(train);
  train->add_option("--solution", solution_path, "Solution JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_path, "Policy JSON")->required();
  train->add_flag("--realistic", realistic, "Prepend the healthcare/urgent-care/over-80 phase");
  train->add_option("--max-depth", max_depth, "Tree depth cap");
  train->add_option("--min-leaf-prob", min_leaf_prob, "Smallest leaf probability that becomes a phase");
  train->add_option("--tree-out", tree_out, "Tree JSON");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a budgeted rollout");
  std::string policy_path;
  SimulationOptions sim_opts;
  add_graph(sim);
  sim->add_option("--policy", policy_path, "Policy JSON ('baseline' for the shipped default)")->required();
  sim->add_option("--days", sim_opts.days, "Days");
  sim->add_option("--budget-frac", sim_opts.budget_frac, "Daily budget fraction");
  sim->add_option("--seed", sim_opts.seed, "Random seed");
  sim->add_option("--out", out_path, "Trace CSV")->required();

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare a candidate trace with a baseline trace");
  std::string trace_a, trace_b;
  cmp->add_option("--a", trace_a, "Candidate trace")->required()->check(CLI::ExistingFile);
  cmp->add_option("--b", trace_b, "Baseline trace")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", out_path, "Stats CSV")->required();

  // run-pipeline
  auto* run = app.add_subcommand("run-pipeline", "Run the end-to-end pipeline");
  std::optional<std::uint64_t> run_seed;
  std::optional<std::int64_t> run_n;
  std::optional<std::string> run_out, run_method;
  run->add_option("--seed", run_seed, "Root seed");
  run->add_option("--n", run_n, "Population size");
  run->add_option("--out-dir", run_out, "Output directory");
  run->add_option("--method", run_method, "Solver")->check(CLI::IsMember({"oracle", "bnb", "greedy", "external"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen) {
      if (!rha_weights.empty()) std::copy(rha_weights.begin(), rha_weights.end(), pop.rha_weights.begin());
      const Graph g = generate_population(pop);
      auto edges = open_out(out_prefix + ".edges");
      write_edge_list(g, edges);
      auto attrs = open_out(out_prefix + ".attrs.csv");
      write_attributes(g, attrs);
      std::cout << "n,m,density_percent\n" << g.n() << ',' << g.m() << ',' << (g.n() >= 2 ? density(g) : 0.0) << '\n';
    } else if (*part) {
      const Graph g = load(graph_path, attrs_path);
      const Partition p = partition_graph(g, by_rha, max_size, part_seed);
      auto out = open_out(out_path);
      write_partition_json(g, p, out);
      std::cout << "parts,crossing_edges\n" << p.parts.size() << ',' << p.crossing_edges << '\n';
    } else if (*build) {
      const Graph g = load(graph_path, attrs_path);
      const MipModel model = make_model(g, k, resolve_budget(budget, budget_frac, g.n()), parse_style(style), relax);
      auto out = open_out(out_path);
      write_mps(model, out);
      const auto stats = model_stats(model);
      std::cout << "variables,binary,constraints,aggregated,disaggregated\n"
                << stats.num_vars << ',' << stats.num_binary << ',' << stats.num_constraints << ','
                << stats.num_agg_constraints << ',' << stats.num_disagg_constraints << '\n';
    } else if (*solve) {
      const Graph g = load(graph_path, attrs_path);
      const std::int64_t b = resolve_budget(budget, budget_frac, g.n());
      const NodeSet fixed = preprocess_fix(g, k, {fix, b});
      const NodeMask forbidden = make_mask(g, fixed);
      DcndpSolution s;
      if (method == "oracle") {
        s = solve_oracle(g, k, b, {24, forbidden});
      } else if (method == "bnb") {
        BnbOptions opts;
        opts.time_limit = time_limit;
        if (node_limit > 0) opts.node_limit = node_limit;
        opts.forbidden = forbidden;
        s = solve_bnb(g, k, b, opts);
      } else if (method == "greedy") {
        s = solve_greedy(g, k, b, forbidden);
      } else {
        if (solver_cmd.empty()) throw ConfigError("--method external needs --solver-cmd");
        MipModel model = make_model(g, k, b, parse_style(style), false);
        for (Node v : fixed) model.variables[model.y_offset() + v].upper = 0.0;
        const fs::path mps = fs::temp_directory_path() / ("dcndp-" + std::to_string(::getpid()) + ".mps");
        {
          auto out = open_out(mps.string());
          write_mps(model, out);
        }
        ExternalSolveRequest req{mps.string(), solver_cmd, time_limit, k, b, false, ""};
        try {
          s = external_solve(g, req);
        } catch (...) {
          fs::remove(mps);
          throw;
        }
        fs::remove(mps);
      }
      if (out_path.empty()) {
        write_solution_json(g, s, std::cout);
      } else {
        auto out = open_out(out_path);
        write_solution_json(g, s, out);
      }
    } else if (*verify) {
      const Graph g = load(graph_path, attrs_path);
      const auto reports = verify_proposition(g, budget, proposition);
      auto out = open_out(report_path);
      write_report(reports, out);
      std::int64_t failed = 0;
      for (const auto& r : reports) failed += r.verdict == Verdict::Fail;
      std::cout << "certificates,failed\n" << reports.size() << ',' << failed << '\n';
    } else if (*train) {
      const Graph g = load(graph_path, attrs_path);
      auto in = open_in(solution_path);
      const DcndpSolution s = read_solution_json(g, in);
      const FeatureTable table = feature_table(g);
      const auto labels = labels_from_deleted(g, s.deleted);
      const DecisionTree tree = train_tree(table, labels, max_depth);
      Policy p = tree_to_policy(tree, min_leaf_prob, "dcndp");
      if (realistic) p = realistic_override(p);
      auto out = open_out(out_path);
      write_policy(p, out);
      if (!tree_out.empty()) {
        auto t = open_out(tree_out);
        t << tree_to_json(tree).dump(1) << '\n';
      }
      std::cout << "depth,leaves,phases,training_accuracy\n"
                << tree.depth() << ',' << tree.leaves().size() << ',' << p.phases.size() << ','
                << training_accuracy(tree, table, labels) << '\n';
    } else if (*sim) {
      const Graph g = load(graph_path, attrs_path);
      Policy p;
      if (policy_path == "baseline") {
        p = default_baseline_policy();
      } else {
        auto in = open_in(policy_path);
        p = read_policy(in);
      }
      const RolloutTrace t = simulate(g, p, sim_opts);
      auto out = open_out(out_path);
      export_trace(t, out);
    } else if (*cmp) {
      auto ina = open_in(trace_a);
      auto inb = open_in(trace_b);
      const RolloutTrace a = import_trace(ina), b = import_trace(inb);
      auto out = open_out(out_path);
      write_comparison(compare_all(a, b), out);
    } else if (*run) {
      PipelineConfig config;
      if (!config_path.empty()) {
        auto in = open_in(config_path);
        nlohmann::json j;
        try {
          in >> j;
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(std::string("config JSON: ") + e.what());
        }
        config = pipeline_config_from_json(j);
      }
      if (run_seed) config.seed = *run_seed;
      if (run_n) config.population = *run_n;
      if (run_out) config.output_dir = *run_out;
      if (run_method) config.method = *run_method;
      const PipelineResult r = run_pipeline(config);
      std::cout << "artifacts,output_dir\n" << r.artifacts.size() << ',' << r.output_dir << '\n';
    } else {
      std::cout << app.help();
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case StageError::Kind::Config: return kExitConfig;
      case StageError::Kind::SizeGuard: return kExitSizeGuard;
      case StageError::Kind::Other: return kExitStage;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SizeGuardError& e) {
    std::cerr << "size guard: " << e.what() << '\n';
    return kExitSizeGuard;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
