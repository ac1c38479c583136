#include "dcndp/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <thread>

#include <openssl/evp.h>

#include "dcndp/graph.hpp"
#include "dcndp/policy.hpp"
#include "dcndp/population.hpp"
#include "dcndp/rollout.hpp"
#include "dcndp/solvers.hpp"
#include "text_util.hpp"

#ifndef DCNDP_VERSION
#define DCNDP_VERSION "0.0.0"
#endif
#ifndef DCNDP_BUILD_TYPE
#define DCNDP_BUILD_TYPE "unknown"
#endif

namespace dcndp {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string version_info() {
  std::string compiler;
#if defined(__clang__)
  compiler = "clang " + std::to_string(__clang_major__) + "." + std::to_string(__clang_minor__);
#elif defined(__GNUC__)
  compiler = "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#else
  compiler = "unknown compiler";
#endif
  return std::string("dcndp ") + DCNDP_VERSION + " (" + compiler + ", " + DCNDP_BUILD_TYPE + "; formats " +
         kTraceFormat + ", " + kManifestFormat + ", " + kPolicyFormat + ")";
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

const char* style_name(ConstraintStyle s) { return s == ConstraintStyle::Aggregated ? "agg" : "disagg"; }

bool in_unit(double x) { return x > 0.0 && x <= 1.0; }

}  // namespace

void PipelineConfig::validate() const {
  if (population < 1) throw ConfigError("population must be at least 1");
  if (!in_unit(budget_fraction)) throw ConfigError("budget_fraction must lie in (0, 1]");
  if (!in_unit(sim_budget_frac)) throw ConfigError("sim_budget_frac must lie in (0, 1]");
  if (!(min_leaf_prob >= 0.0 && min_leaf_prob <= 1.0)) throw ConfigError("min_leaf_prob must lie in [0, 1]");
  if (partition_max_size < 2) throw ConfigError("partition_max_size must be at least 2");
  if (k.empty()) throw ConfigError("k lists no variant");
  for (int v : k) {
    if (v != 1 && v != 2) throw ConfigError("k must be 1 or 2");
  }
  if (std::find(k.begin(), k.end(), policy_k) == k.end()) throw ConfigError("policy_k must be one of k");
  if (method != "oracle" && method != "bnb" && method != "greedy" && method != "external") {
    throw ConfigError("method must be oracle, bnb, greedy or external");
  }
  if (method == "external" && solver_cmd.empty()) throw ConfigError("method external needs solver_cmd");
  if (!(time_limit > 0.0)) throw ConfigError("time_limit must be positive");
  if (node_limit < 1) throw ConfigError("node_limit must be positive");
  if (tree_max_depth < 1) throw ConfigError("tree_max_depth must be positive");
  if (days < 0) throw ConfigError("days must be nonnegative");
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
}

ordered_json to_json(const PipelineConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["population"] = c.population;
  j["budget_fraction"] = c.budget_fraction;
  j["by_rha"] = c.by_rha;
  j["partition_max_size"] = c.partition_max_size;
  j["k"] = c.k;
  j["style"] = style_name(c.style);
  j["method"] = c.method;
  j["solver_cmd"] = c.solver_cmd;
  j["time_limit"] = c.time_limit;
  j["node_limit"] = c.node_limit;
  j["fix_simplicial"] = c.fix_simplicial;
  j["tree_max_depth"] = c.tree_max_depth;
  j["min_leaf_prob"] = c.min_leaf_prob;
  j["policy_k"] = c.policy_k;
  j["days"] = c.days;
  j["sim_budget_frac"] = c.sim_budget_frac;
  j["baseline_policy"] = c.baseline_policy;
  j["output_dir"] = c.output_dir;
  return j;
}

PipelineConfig pipeline_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  const std::map<std::string, std::function<void(const json&)>> fields = {
      {"seed", [&](const json& v) { c.seed = v.get<std::uint64_t>(); }},
      {"population", [&](const json& v) { c.population = v.get<std::int64_t>(); }},
      {"budget_fraction", [&](const json& v) { c.budget_fraction = v.get<double>(); }},
      {"by_rha", [&](const json& v) { c.by_rha = v.get<bool>(); }},
      {"partition_max_size", [&](const json& v) { c.partition_max_size = v.get<std::int64_t>(); }},
      {"k",
       [&](const json& v) {
         c.k = v.is_array() ? v.get<std::vector<int>>() : std::vector<int>{v.get<int>()};
       }},
      {"style",
       [&](const json& v) {
         const auto s = v.get<std::string>();
         if (s == "agg") {
           c.style = ConstraintStyle::Aggregated;
         } else if (s == "disagg") {
           c.style = ConstraintStyle::Disaggregated;
         } else {
           throw ConfigError("style must be agg or disagg");
         }
       }},
      {"method", [&](const json& v) { c.method = v.get<std::string>(); }},
      {"solver_cmd", [&](const json& v) { c.solver_cmd = v.get<std::string>(); }},
      {"time_limit", [&](const json& v) { c.time_limit = v.get<double>(); }},
      {"node_limit", [&](const json& v) { c.node_limit = v.get<std::int64_t>(); }},
      {"fix_simplicial", [&](const json& v) { c.fix_simplicial = v.get<bool>(); }},
      {"tree_max_depth", [&](const json& v) { c.tree_max_depth = v.get<int>(); }},
      {"min_leaf_prob", [&](const json& v) { c.min_leaf_prob = v.get<double>(); }},
      {"policy_k", [&](const json& v) { c.policy_k = v.get<int>(); }},
      {"days", [&](const json& v) { c.days = v.get<int>(); }},
      {"sim_budget_frac", [&](const json& v) { c.sim_budget_frac = v.get<double>(); }},
      {"baseline_policy", [&](const json& v) { c.baseline_policy = v.get<std::string>(); }},
      {"output_dir", [&](const json& v) { c.output_dir = v.get<std::string>(); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

std::uint64_t stage_seed(std::uint64_t root, const std::string& stage) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : stage) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t x = root ^ h;
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 initialisation failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

template <typename F>
auto run_stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(name, StageError::Kind::Config, e.what());
  } catch (const SizeGuardError& e) {
    throw StageError(name, StageError::Kind::SizeGuard, e.what());
  } catch (const std::exception& e) {
    throw StageError(name, StageError::Kind::Other, e.what());
  }
}

/// Runs fn(i) for i in [0, count) on up to hardware_concurrency threads. The
/// first exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct PartSolve {
  DcndpSolution solution;  // internal ids of the part subgraph
  std::int64_t n = 0, m = 0, budget = 0, fixed = 0;
};

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

  template <typename F>
  void write(const std::string& rel, F&& fn) {
    const fs::path path = root_ / rel;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    fn(out);
    out.close();
    if (!out) throw Error("failed writing " + path.string());
    written_.push_back(rel);
  }

  std::vector<ManifestEntry> entries() const {
    std::vector<ManifestEntry> out;
    for (const auto& rel : written_) {
      const fs::path path = root_ / rel;
      out.push_back({rel, sha256_file(path.string()), fs::file_size(path)});
    }
    return out;
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::vector<std::string> written_;
};

PartSolve solve_part(const Graph& sub, int k, const PipelineConfig& c, const fs::path& model_dir,
                     const std::string& tag) {
  PartSolve r;
  r.n = sub.n();
  r.m = sub.m();
  r.budget = budget_from_fraction(c.budget_fraction, sub.n());
  const NodeSet fixed = preprocess_fix(sub, k, {c.fix_simplicial, r.budget});
  r.fixed = static_cast<std::int64_t>(fixed.size());
  NodeMask forbidden = make_mask(sub, fixed);

  if (c.method == "oracle") {
    r.solution = solve_oracle(sub, k, r.budget, {24, forbidden});
  } else if (c.method == "bnb") {
    BnbOptions opts;
    opts.node_limit = c.node_limit;
    opts.forbidden = forbidden;
    r.solution = solve_bnb(sub, k, r.budget, opts);
  } else if (c.method == "greedy") {
    r.solution = solve_greedy(sub, k, r.budget, forbidden);
  } else {
    MipModel model = k == 1 ? build_1dcndp(sub, r.budget)
                            : build_2dcndp(sub, edge_squared(sub), r.budget, c.style, false, AggregateForm::Scaled);
    for (Node v : fixed) model.variables[model.y_offset() + v].upper = 0.0;
    fs::create_directories(model_dir);
    const fs::path mps = model_dir / (tag + ".mps");
    {
      std::ofstream out(mps);
      write_mps(model, out);
    }
    ExternalSolveRequest req;
    req.mps_path = mps.string();
    req.solver_cmd = c.solver_cmd;
    req.time_limit = c.time_limit;
    req.k = k;
    req.budget = r.budget;
    r.solution = external_solve(sub, req);
  }
  return r;
}

std::string fmt(double v) { return detail::format_double(v); }

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  run_stage("config", [&] {
    config.validate();
    fs::create_directories(config.output_dir);
    const fs::path probe = fs::path(config.output_dir) / ".write-probe";
    std::ofstream out(probe);
    if (!out) throw ConfigError("output directory '" + config.output_dir + "' is not writable");
    out.close();
    fs::remove(probe);
    return 0;
  });

  ArtifactWriter art(config.output_dir);
  ordered_json summary;
  ordered_json seeds;
  for (const char* s : {"population", "partition", "cross_validation", "simulate"}) {
    seeds[s] = stage_seed(config.seed, s);
  }

  // Population.
  const Graph g = run_stage("gen-population", [&] {
    PopulationConfig pc;
    pc.seed = seeds["population"].get<std::uint64_t>();
    pc.n = config.population;
    Graph out = generate_population(pc);
    art.write("population.edges", [&](std::ostream& o) { write_edge_list(out, o); });
    art.write("population.attrs.csv", [&](std::ostream& o) { write_attributes(out, o); });
    return out;
  });
  summary["population"] = {{"n", g.n()}, {"m", g.m()}};

  // Partition.
  const Partition parts = run_stage("partition", [&] {
    Partition p = partition_graph(g, config.by_rha, config.partition_max_size, seeds["partition"].get<std::uint64_t>());
    art.write("parts.json", [&](std::ostream& o) { write_partition_json(g, p, o); });
    return p;
  });
  summary["parts"] = parts.parts.size();
  summary["crossing_edges_dropped"] = parts.crossing_edges;

  // Per-part solves, merged per k.
  std::map<int, NodeSet> merged;
  run_stage("solve", [&] {
    std::vector<Graph> subgraphs;
    for (const auto& p : parts.parts) subgraphs.push_back(g.induced_subgraph(p));
    for (int k : config.k) {
      std::vector<PartSolve> results(parts.parts.size());
      parallel_for(parts.parts.size(), [&](std::size_t i) {
        results[i] = solve_part(subgraphs[i], k, config, art.root() / "models",
                                "part" + std::to_string(i) + "_k" + std::to_string(k));
      });
      NodeSet deleted;
      std::int64_t obj_sum = 0, budget_sum = 0;
      double bound_sum = 0.0;
      for (std::size_t i = 0; i < results.size(); ++i) {
        for (Node v : results[i].solution.deleted) deleted.push_back(parts.parts[i][v]);
        obj_sum += results[i].solution.objective;
        bound_sum += results[i].solution.lower_bound;
        budget_sum += results[i].budget;
      }
      std::sort(deleted.begin(), deleted.end());

      const std::string ks = std::to_string(k);
      art.write("solve_k" + ks + ".csv", [&](std::ostream& o) {
        o << "part,label,n,m,density,budget,fixed,objective,lower_bound,gap_percent,provenance\n";
        for (std::size_t i = 0; i < results.size(); ++i) {
          const auto& r = results[i];
          o << i << ',' << parts.labels[i] << ',' << r.n << ',' << r.m << ','
            << (r.n >= 2 ? fmt(density(r.n, r.m)) : "0") << ',' << r.budget << ',' << r.fixed << ','
            << r.solution.objective << ',' << fmt(r.solution.lower_bound) << ',' << fmt(r.solution.gap_percent) << ','
            << to_string(r.solution.provenance) << '\n';
        }
      });
      const std::int64_t full_residual = count_khop_residual(g, deleted, k);
      art.write("solution_k" + ks + ".json", [&](std::ostream& o) {
        ordered_json j;
        j["k"] = k;
        j["budget"] = budget_sum;
        j["objective"] = full_residual;
        j["provenance"] = config.method == "bnb" ? "bnb" : config.method;
        j["parts_objective"] = obj_sum;
        j["parts_lower_bound"] = bound_sum;
        j["crossing_edges_dropped"] = parts.crossing_edges;
        nlohmann::json ids = nlohmann::json::array();
        for (Node v : deleted) ids.push_back(g.external_id(v));
        j["deleted"] = std::move(ids);
        o << j.dump(1) << '\n';
      });
      summary["solve_k" + ks] = {{"deleted", deleted.size()},
                                 {"parts_objective", obj_sum},
                                 {"parts_lower_bound", bound_sum},
                                 {"full_graph_residual", full_residual},
                                 {"initial_residual", count_khop_residual(g, NodeSet{}, k)}};
      merged[k] = std::move(deleted);
    }
    return 0;
  });

  // Trees: whole population plus one per RHA, for every k.
  PipelineResult result;
  std::map<int, DecisionTree> whole_trees;
  run_stage("train-trees", [&] {
    const FeatureTable table = feature_table(g);
    struct Job {
      int k;
      std::string scope;
      FeatureTable table;
      std::vector<int> labels;
    };
    std::vector<Job> jobs;
    for (int k : config.k) {
      const auto labels = labels_from_deleted(g, merged[k]);
      jobs.push_back({k, "all", table, labels});
      for (Rha r : kAllRhas) {
        std::vector<Eigen::Index> rows;
        std::vector<int> sub_labels;
        for (Node v = 0; v < g.n(); ++v) {
          if (g.attributes(v).rha == r) {
            rows.push_back(v);
            sub_labels.push_back(labels[v]);
          }
        }
        if (rows.empty()) continue;
        FeatureTable sub{table.features, table.values(rows, Eigen::all)};
        jobs.push_back({k, std::string(to_string(r)), std::move(sub), std::move(sub_labels)});
      }
    }
    std::vector<DecisionTree> trees(jobs.size());
    std::vector<double> cv(jobs.size(), 0.0);
    parallel_for(jobs.size(), [&](std::size_t i) {
      trees[i] = train_tree(jobs[i].table, jobs[i].labels, config.tree_max_depth);
      if (jobs[i].table.rows() >= 5) {
        cv[i] = cross_validate(jobs[i].table, jobs[i].labels, config.tree_max_depth, 5,
                               seeds["cross_validation"].get<std::uint64_t>());
      }
    });
    ordered_json tree_summary = ordered_json::array();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const std::string name = "tree_k" + std::to_string(jobs[i].k) + "_" + jobs[i].scope + ".json";
      art.write(name, [&](std::ostream& o) { o << tree_to_json(trees[i]).dump(1) << '\n'; });
      result.tree_depths.push_back(trees[i].depth());
      tree_summary.push_back({{"tree", name},
                              {"depth", trees[i].depth()},
                              {"leaves", trees[i].leaves().size()},
                              {"training_accuracy", training_accuracy(trees[i], jobs[i].table, jobs[i].labels)},
                              {"cv5_accuracy", cv[i]}});
      if (jobs[i].scope == "all") whole_trees[jobs[i].k] = trees[i];
    }
    summary["trees"] = std::move(tree_summary);
    return 0;
  });

  // Policies.
  std::vector<Policy> policies = run_stage("build-policies", [&] {
    Policy dcndp = tree_to_policy(whole_trees.at(config.policy_k), config.min_leaf_prob, "dcndp");
    Policy realistic = realistic_override(dcndp);
    Policy baseline;
    if (config.baseline_policy.empty()) {
      baseline = default_baseline_policy();
    } else {
      std::ifstream in(config.baseline_policy);
      if (!in) throw ConfigError("cannot read baseline policy " + config.baseline_policy);
      baseline = baseline_policy(json::parse(in));
    }
    std::vector<Policy> out{dcndp, realistic, baseline};
    for (const auto& p : out) {
      art.write("policy_" + p.name + ".json", [&](std::ostream& o) { write_policy(p, o); });
    }
    return out;
  });

  // Rollouts over the whole population, one per policy, concurrently.
  std::vector<RolloutTrace> traces = run_stage("simulate", [&] {
    SimulationOptions opts;
    opts.days = config.days;
    opts.budget_frac = config.sim_budget_frac;
    opts.seed = seeds["simulate"].get<std::uint64_t>();
    std::vector<std::future<RolloutTrace>> futures;
    for (const auto& p : policies) {
      futures.push_back(std::async(std::launch::async, [&g, &p, opts] { return simulate(g, p, opts); }));
    }
    std::vector<RolloutTrace> out;
    for (auto& f : futures) out.push_back(f.get());
    for (const auto& t : out) {
      art.write("trace_" + t.policy + ".csv", [&](std::ostream& o) { export_trace(t, o); });
    }
    return out;
  });

  run_stage("compare", [&] {
    const RolloutTrace& baseline = traces[2];
    for (std::size_t i = 0; i < 2; ++i) {
      const auto stats = compare_all(traces[i], baseline);
      art.write("compare_" + traces[i].policy + "_vs_" + baseline.policy + ".csv",
                [&](std::ostream& o) { write_comparison(stats, o); });
    }
    return 0;
  });

  run_stage("manifest", [&] {
    result.output_dir = config.output_dir;
    result.artifacts = art.entries();
    ordered_json m;
    m["format"] = kManifestFormat;
    m["version"] = DCNDP_VERSION;
    m["version_info"] = version_info();
    m["config"] = to_json(config);
    m["stage_seeds"] = seeds;
    m["notes"] = {"per-part solves drop crossing edges; crossing_edges_dropped counts them",
                  "rollout metrics are computed on the whole population graph"};
    m["summary"] = summary;
    m["artifacts"] = ordered_json::array();
    for (const auto& e : result.artifacts) {
      m["artifacts"].push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
    }
    std::ofstream out(fs::path(config.output_dir) / "manifest.json");
    out << m.dump(1) << '\n';
    if (!out) throw Error("cannot write manifest");
    return 0;
  });
  return result;
}

}  // namespace dcndp
