#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcndp/errors.hpp"
#include "dcndp/model.hpp"

namespace dcndp {

inline constexpr const char* kManifestFormat = "dcndp-manifest/1";
inline constexpr const char* kPolicyFormat = "dcndp-policy/1";

/// One line: toolkit version, compiler, build type and file-format versions.
std::string version_info();

struct PipelineConfig {
  std::uint64_t seed = 7;
  std::int64_t population = 5000;
  double budget_fraction = 0.20;
  bool by_rha = true;
  std::int64_t partition_max_size = 2600;
  std::vector<int> k = {1, 2};
  ConstraintStyle style = ConstraintStyle::Aggregated;
  std::string method = "bnb";  // oracle | bnb | greedy | external
  std::string solver_cmd;
  double time_limit = 3600.0;   // external solver only
  std::int64_t node_limit = 2000;  // branch and bound, per part
  bool fix_simplicial = true;
  int tree_max_depth = 5;
  double min_leaf_prob = 0.5;
  int policy_k = 2;  // which variant's whole-population tree drives the policies
  int days = 100;
  double sim_budget_frac = 0.01;
  std::string baseline_policy;  // path; the shipped default when empty
  std::string output_dir = "dcndp-out";

  /// Throws ConfigError on invalid values.
  void validate() const;
};

nlohmann::ordered_json to_json(const PipelineConfig& c);
/// Unknown keys and wrongly typed values throw ConfigError; missing keys keep defaults.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Seed for a named stage, derived from the root seed.
std::uint64_t stage_seed(std::uint64_t root, const std::string& stage);

/// A pipeline stage failed; the original error is kept as a message and a kind.
class StageError : public Error {
 public:
  enum class Kind { Config, SizeGuard, Other };
  StageError(std::string stage, Kind kind, const std::string& cause)
      : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)), kind_(kind) {}
  const std::string& stage() const noexcept { return stage_; }
  Kind kind() const noexcept { return kind_; }

 private:
  std::string stage_;
  Kind kind_;
};

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct PipelineResult {
  std::string output_dir;
  std::vector<ManifestEntry> artifacts;
  std::vector<int> tree_depths;
};

/// population -> RHA split -> bisection -> per-part solves -> merged labels ->
/// trees -> policies -> rollouts -> comparisons, then manifest.json listing every
/// artifact with its SHA-256. Artifacts written before a failure are kept.
PipelineResult run_pipeline(const PipelineConfig& config);

std::string sha256_file(const std::string& path);

}  // namespace dcndp
