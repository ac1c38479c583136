#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dcndp/graph.hpp"

namespace dcndp {

struct Feature {
  std::string name;
  bool categorical = false;
  std::vector<std::string> categories;  // categorical values are stored as indices into this list
};

/// One row per node, one column per feature.
struct FeatureTable {
  std::vector<Feature> features;
  Eigen::MatrixXd values;

  std::int64_t rows() const noexcept { return values.rows(); }
  /// Column index of a feature, or -1.
  int column(const std::string& name) const;
};

/// age, rha, is_healthcare_worker, is_urgent_care_patient, is_long_term_care,
/// household_size, has_workplace, is_student. Throws SchemaError without attributes.
FeatureTable feature_table(const Graph& g);

std::vector<std::string> default_feature_names();

/// Labels 1 for deleted nodes, 0 otherwise.
std::vector<int> labels_from_deleted(const Graph& g, const NodeSet& deleted);

// ---------------------------------------------------------------------------
// Decision trees

struct TreeNode {
  int feature = -1;        // -1 for a leaf
  double threshold = 0.0;  // numeric split: value > threshold goes left
  int category = -1;       // categorical split: value == category goes left
  double gain = 0.0;
  int left = -1;
  int right = -1;
  std::int64_t count0 = 0;
  std::int64_t count1 = 0;
  int depth = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  std::int64_t samples() const noexcept { return count0 + count1; }
  double probability() const noexcept {
    return samples() == 0 ? 0.0 : static_cast<double>(count1) / static_cast<double>(samples());
  }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<Feature> features;
  int max_depth = 5;
  std::string criterion = "entropy";

  int depth() const;
  /// Leaf indices in left-to-right order.
  std::vector<int> leaves() const;
  int predict_leaf(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

/// Entropy-gain induction. A split is taken when its gain is positive; an
/// impure node with no positive-gain split takes the first zero-gain split that
/// separates its rows. Ties go to the earlier feature, then the smaller threshold
/// or category. max_depth < 0 means unbounded.
DecisionTree train_tree(const FeatureTable& features, const std::vector<int>& labels, int max_depth = 5);

double training_accuracy(const DecisionTree& tree, const FeatureTable& features, const std::vector<int>& labels);

/// Mean held-out accuracy over `folds` seeded folds.
double cross_validate(const FeatureTable& features, const std::vector<int>& labels, int max_depth, int folds,
                      std::uint64_t seed);

nlohmann::ordered_json tree_to_json(const DecisionTree& tree);

// ---------------------------------------------------------------------------
// Policies

enum class Op { Eq, Ne, Gt, Ge, Lt, Le, In };
std::string to_string(Op op);

struct Condition {
  std::string attr;
  Op op = Op::Eq;
  nlohmann::json value;

  bool operator==(const Condition&) const = default;
};

/// Matches when every all_of condition holds and, if any_of is nonempty, at least one of those holds.
struct Phase {
  std::string label;
  std::string group;
  std::vector<Condition> all_of;
  std::vector<Condition> any_of;
  std::optional<int> leaf;

  bool always() const noexcept { return all_of.empty() && any_of.empty(); }
  bool operator==(const Phase&) const = default;
};

struct Policy {
  std::string name;
  std::vector<Phase> phases;
};

inline constexpr const char* kCatchAllLabel = "catch-all";

/// Appends a catch-all phase unless the last phase already matches everything.
void ensure_catch_all(Policy& p);

/// Phases before the trailing catch-all.
std::int64_t stage_count(const Policy& p);

/// Leaves by probability (descending), then samples (descending), then position.
/// Leaves at or above min_leaf_prob become phases; the rest fall to the catch-all.
Policy tree_to_policy(const DecisionTree& tree, double min_leaf_prob = 0.5, const std::string& name = "dcndp");

/// Prepends the priority phase (healthcare worker, urgent-care patient or age > 80).
/// Applying it twice is the same as applying it once. Throws SchemaError when
/// a required attribute is missing from the schema.
Policy realistic_override(const Policy& p, const std::vector<std::string>& schema = default_feature_names());

Phase priority_phase();

/// Parses and validates a policy; a catch-all is appended when needed.
/// Schema violations throw ConfigError.
Policy policy_from_json(const nlohmann::json& j);
nlohmann::ordered_json policy_to_json(const Policy& p);
Policy read_policy(std::istream& in);
void write_policy(const Policy& p, std::ostream& out);

/// Loads the staged baseline (phase groups in the "group" field).
Policy baseline_policy(const nlohmann::json& j);
/// The shipped default baseline.
Policy default_baseline_policy();

/// Phase index of each row (first matching phase). Throws SchemaError for
/// unknown attributes.
std::vector<int> assign_phases(const Policy& p, const FeatureTable& features);

}  // namespace dcndp
