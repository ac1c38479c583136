#include "dcndp/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>

#include "dcndp/errors.hpp"

namespace dcndp {

using nlohmann::json;

int FeatureTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> default_feature_names() {
  return {"age",        "rha",           "is_healthcare_worker", "is_urgent_care_patient", "is_long_term_care",
          "household_size", "has_workplace", "is_student"};
}

FeatureTable feature_table(const Graph& g) {
  if (!g.has_attributes()) throw SchemaError("graph carries no node attributes");
  FeatureTable t;
  for (const auto& name : default_feature_names()) t.features.push_back({name, false, {}});
  t.features[1].categorical = true;
  for (Rha r : kAllRhas) t.features[1].categories.emplace_back(to_string(r));

  std::map<std::int64_t, int> household_size;
  for (const auto& a : g.attributes()) ++household_size[a.household_id];

  t.values.resize(g.n(), static_cast<Eigen::Index>(t.features.size()));
  for (Node v = 0; v < g.n(); ++v) {
    const auto& a = g.attributes(v);
    if (!a.rha) throw SchemaError("node '" + g.external_id(v) + "' has no RHA");
    t.values.row(v) << a.age, static_cast<double>(static_cast<int>(*a.rha)), a.is_healthcare_worker,
        a.is_urgent_care_patient, a.is_long_term_care, household_size[a.household_id], a.workplace_id.has_value(),
        a.school_id.has_value();
  }
  return t;
}

std::vector<int> labels_from_deleted(const Graph& g, const NodeSet& deleted) {
  std::vector<int> labels(g.n(), 0);
  for (Node v : deleted) labels.at(v) = 1;
  return labels;
}

// ---------------------------------------------------------------------------
// Decision trees

namespace {

double entropy(std::int64_t c0, std::int64_t c1) {
  const double n = static_cast<double>(c0 + c1);
  double h = 0.0;
  for (std::int64_t c : {c0, c1}) {
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log2(p);
    }
  }
  return h;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  int category = -1;
  double gain = 0.0;
};

bool goes_left(const Split& s, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  const double x = row(s.feature);
  return s.category >= 0 ? static_cast<int>(x) == s.category : x > s.threshold;
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureTable& t, const std::vector<int>& labels, int max_depth, DecisionTree& tree)
      : t_(t), labels_(labels), max_depth_(max_depth), tree_(tree) {}

  int build(std::vector<std::int64_t> rows, int depth) {
    TreeNode node;
    node.depth = depth;
    for (auto r : rows) (labels_[r] ? node.count1 : node.count0)++;
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(node);
    if (node.count0 == 0 || node.count1 == 0) return index;
    if (max_depth_ >= 0 && depth >= max_depth_) return index;

    const auto split = best_split(rows, node.count0, node.count1);
    if (!split) return index;

    std::vector<std::int64_t> left, right;
    for (auto r : rows) (goes_left(*split, t_.values.row(r)) ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    tree_.nodes[index].feature = split->feature;
    tree_.nodes[index].threshold = split->threshold;
    tree_.nodes[index].category = split->category;
    tree_.nodes[index].gain = split->gain;
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    tree_.nodes[index].left = l;
    tree_.nodes[index].right = r;
    return index;
  }

 private:
  std::optional<Split> best_split(const std::vector<std::int64_t>& rows, std::int64_t c0, std::int64_t c1) const {
    constexpr double kEps = 1e-12;
    const double parent = entropy(c0, c1);
    const double total = static_cast<double>(rows.size());
    std::optional<Split> best, fallback;

    auto consider = [&](Split s, std::int64_t l0, std::int64_t l1) {
      const std::int64_t r0 = c0 - l0, r1 = c1 - l1;
      if (l0 + l1 == 0 || r0 + r1 == 0) return;
      s.gain = parent - (static_cast<double>(l0 + l1) / total) * entropy(l0, l1) -
               (static_cast<double>(r0 + r1) / total) * entropy(r0, r1);
      if (s.gain > kEps) {
        if (!best || s.gain > best->gain + kEps) best = s;
      } else if (!fallback) {
        s.gain = std::max(0.0, s.gain);
        fallback = s;
      }
    };

    std::vector<std::pair<double, int>> column(rows.size());
    for (std::size_t f = 0; f < t_.features.size(); ++f) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        column[i] = {t_.values(rows[i], static_cast<Eigen::Index>(f)), labels_[rows[i]]};
      }
      if (t_.features[f].categorical) {
        std::map<int, std::pair<std::int64_t, std::int64_t>> per_category;
        for (const auto& [x, y] : column) {
          auto& c = per_category[static_cast<int>(x)];
          (y ? c.second : c.first)++;
        }
        for (const auto& [cat, counts] : per_category) {
          consider({static_cast<int>(f), 0.0, cat, 0.0}, counts.first, counts.second);
        }
      } else {
        // Left = value > threshold: scan thresholds ascending, counting rows at or below.
        std::sort(column.begin(), column.end());
        std::int64_t below0 = 0, below1 = 0;
        for (std::size_t i = 0; i + 1 < column.size(); ++i) {
          (column[i].second ? below1 : below0)++;
          if (column[i].first == column[i + 1].first) continue;
          const double threshold = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
          consider({static_cast<int>(f), threshold, -1, 0.0}, c0 - below0, c1 - below1);
        }
      }
    }
    return best ? best : fallback;
  }

  const FeatureTable& t_;
  const std::vector<int>& labels_;
  int max_depth_;
  DecisionTree& tree_;
};

}  // namespace

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& node : nodes) d = std::max(d, node.depth);
  return d;
}

std::vector<int> DecisionTree::leaves() const {
  std::vector<int> out;
  if (nodes.empty()) return out;
  std::function<void(int)> walk = [&](int i) {
    if (nodes[i].is_leaf()) {
      out.push_back(i);
      return;
    }
    walk(nodes[i].left);
    walk(nodes[i].right);
  };
  walk(0);
  return out;
}

int DecisionTree::predict_leaf(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = goes_left({n.feature, n.threshold, n.category, 0.0}, row) ? n.left : n.right;
  }
  return i;
}

int DecisionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  return nodes[predict_leaf(row)].probability() >= 0.5 ? 1 : 0;
}

DecisionTree train_tree(const FeatureTable& features, const std::vector<int>& labels, int max_depth) {
  if (features.rows() == 0) throw DomainError("cannot train on an empty table");
  if (static_cast<std::int64_t>(labels.size()) != features.rows()) {
    throw DomainError("label count does not match feature rows");
  }
  DecisionTree tree;
  tree.features = features.features;
  tree.max_depth = max_depth;
  std::vector<std::int64_t> rows(static_cast<std::size_t>(features.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  TreeBuilder(features, labels, max_depth, tree).build(std::move(rows), 0);
  return tree;
}

double training_accuracy(const DecisionTree& tree, const FeatureTable& features, const std::vector<int>& labels) {
  std::int64_t correct = 0;
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    if (tree.predict(features.values.row(r)) == labels[r]) ++correct;
  }
  return features.rows() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(features.rows());
}

double cross_validate(const FeatureTable& features, const std::vector<int>& labels, int max_depth, int folds,
                      std::uint64_t seed) {
  const auto n = features.rows();
  if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
  folds = static_cast<int>(std::min<std::int64_t>(folds, n));
  if (folds < 2) throw DomainError("too few rows for cross-validation");
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  double sum = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::int64_t> train, test;
    for (std::size_t i = 0; i < order.size(); ++i) {
      (static_cast<int>(i % static_cast<std::size_t>(folds)) == f ? test : train).push_back(order[i]);
    }
    FeatureTable sub{features.features, features.values(train, Eigen::all)};
    std::vector<int> sub_labels;
    for (auto r : train) sub_labels.push_back(labels[r]);
    const auto tree = train_tree(sub, sub_labels, max_depth);
    std::int64_t correct = 0;
    for (auto r : test) correct += tree.predict(features.values.row(r)) == labels[r];
    sum += static_cast<double>(correct) / static_cast<double>(test.size());
  }
  return sum / folds;
}

nlohmann::ordered_json tree_to_json(const DecisionTree& tree) {
  std::function<nlohmann::ordered_json(int)> node_json = [&](int i) {
    const auto& n = tree.nodes[i];
    nlohmann::ordered_json j;
    j["samples"] = n.samples();
    j["counts"] = {n.count0, n.count1};
    j["probability"] = n.probability();
    if (!n.is_leaf()) {
      const auto& f = tree.features[n.feature];
      j["feature"] = f.name;
      if (n.category >= 0) {
        j["category"] = f.categories.at(n.category);
      } else {
        j["threshold"] = n.threshold;
      }
      j["gain"] = n.gain;
      j["left"] = node_json(n.left);
      j["right"] = node_json(n.right);
    }
    return j;
  };
  nlohmann::ordered_json j;
  j["criterion"] = tree.criterion;
  j["max_depth"] = tree.max_depth;
  j["depth"] = tree.depth();
  j["root"] = tree.nodes.empty() ? nlohmann::ordered_json() : node_json(0);
  return j;
}

// ---------------------------------------------------------------------------
// Policies

namespace {

constexpr std::pair<Op, const char*> kOps[] = {{Op::Eq, "=="}, {Op::Ne, "!="}, {Op::Gt, ">"}, {Op::Ge, ">="},
                                                {Op::Lt, "<"},  {Op::Le, "<="}, {Op::In, "in"}};

Op parse_op(const std::string& s) {
  for (const auto& [op, text] : kOps) {
    if (s == text) return op;
  }
  throw ConfigError("unknown operator '" + s + "'");
}

Condition condition_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("condition must be an object");
  if (!j.contains("attr") || !j["attr"].is_string()) throw ConfigError("condition needs a string 'attr'");
  if (!j.contains("op") || !j["op"].is_string()) throw ConfigError("condition needs a string 'op'");
  if (!j.contains("value")) throw ConfigError("condition needs a 'value'");
  Condition c{j["attr"].get<std::string>(), parse_op(j["op"].get<std::string>()), j["value"]};
  auto scalar = [](const json& v) { return v.is_number() || v.is_boolean() || v.is_string(); };
  if (c.op == Op::In) {
    if (!c.value.is_array() || !std::all_of(c.value.begin(), c.value.end(), scalar)) {
      throw ConfigError("'in' needs an array of scalars");
    }
  } else if (!scalar(c.value)) {
    throw ConfigError("condition value must be a number, boolean or string");
  }
  return c;
}

std::vector<Condition> conditions_from_json(const json& phase, const char* key) {
  std::vector<Condition> out;
  if (!phase.contains(key)) return out;
  if (!phase[key].is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  for (const auto& c : phase[key]) out.push_back(condition_from_json(c));
  return out;
}

nlohmann::ordered_json condition_to_json(const Condition& c) {
  nlohmann::ordered_json j;
  j["attr"] = c.attr;
  j["op"] = to_string(c.op);
  j["value"] = c.value;
  return j;
}

std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", p);
  return buf;
}

/// Numeric comparison value; booleans count as 0/1.
double numeric(const json& v, const std::string& attr) {
  if (v.is_boolean()) return v.get<bool>() ? 1.0 : 0.0;
  if (v.is_number()) return v.get<double>();
  throw SchemaError("attribute '" + attr + "' is numeric but the policy compares it with " + v.dump());
}

/// Condition evaluation bound to a feature column.
struct CompiledCondition {
  int column;
  Op op;
  std::vector<double> values;  // categorical values resolved to category indices

  bool operator()(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    const double x = row(column);
    switch (op) {
      case Op::Eq: return x == values[0];
      case Op::Ne: return x != values[0];
      case Op::Gt: return x > values[0];
      case Op::Ge: return x >= values[0];
      case Op::Lt: return x < values[0];
      case Op::Le: return x <= values[0];
      case Op::In: return std::find(values.begin(), values.end(), x) != values.end();
    }
    return false;
  }
};

CompiledCondition compile(const Condition& c, const FeatureTable& t) {
  const int col = t.column(c.attr);
  if (col < 0) throw SchemaError("unknown attribute '" + c.attr + "'");
  const auto& f = t.features[col];
  CompiledCondition out{col, c.op, {}};
  const std::vector<json> raw = c.op == Op::In ? c.value.get<std::vector<json>>() : std::vector<json>{c.value};
  for (const auto& v : raw) {
    if (f.categorical) {
      if (c.op != Op::Eq && c.op != Op::Ne && c.op != Op::In) {
        throw SchemaError("attribute '" + c.attr + "' is categorical; only ==, != and in apply");
      }
      if (!v.is_string()) throw SchemaError("attribute '" + c.attr + "' compares with category names");
      const auto it = std::find(f.categories.begin(), f.categories.end(), v.get<std::string>());
      if (it == f.categories.end()) throw SchemaError("unknown category '" + v.get<std::string>() + "'");
      out.values.push_back(static_cast<double>(it - f.categories.begin()));
    } else {
      out.values.push_back(numeric(v, c.attr));
    }
  }
  return out;
}

}  // namespace

std::string to_string(Op op) {
  for (const auto& [o, text] : kOps) {
    if (o == op) return text;
  }
  return "?";
}

void ensure_catch_all(Policy& p) {
  if (p.phases.empty() || !p.phases.back().always()) p.phases.push_back({kCatchAllLabel, "", {}, {}, std::nullopt});
}

std::int64_t stage_count(const Policy& p) {
  const auto n = static_cast<std::int64_t>(p.phases.size());
  return !p.phases.empty() && p.phases.back().always() ? n - 1 : n;
}

Policy tree_to_policy(const DecisionTree& tree, double min_leaf_prob, const std::string& name) {
  if (tree.nodes.empty()) throw DomainError("empty tree");
  // Root-to-leaf conditions per node.
  std::vector<std::vector<Condition>> path(tree.nodes.size());
  std::vector<int> position(tree.nodes.size(), 0);
  const auto leaves = tree.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) position[leaves[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.is_leaf()) continue;
    const auto& f = tree.features[n.feature];
    Condition yes, no;
    if (n.category >= 0) {
      yes = {f.name, Op::Eq, f.categories.at(n.category)};
      no = {f.name, Op::Ne, f.categories.at(n.category)};
    } else {
      yes = {f.name, Op::Gt, n.threshold};
      no = {f.name, Op::Le, n.threshold};
    }
    path[n.left] = path[i];
    path[n.left].push_back(yes);
    path[n.right] = path[i];
    path[n.right].push_back(no);
  }

  auto order = leaves;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto &na = tree.nodes[a], &nb = tree.nodes[b];
    if (na.probability() != nb.probability()) return na.probability() > nb.probability();
    if (na.samples() != nb.samples()) return na.samples() > nb.samples();
    return position[a] < position[b];
  });

  Policy p;
  p.name = name;
  for (int leaf : order) {
    const auto& n = tree.nodes[leaf];
    if (n.probability() < min_leaf_prob) continue;
    Phase phase;
    phase.label = path[leaf].empty() ? "(always)"
                                     : "leaf " + std::to_string(position[leaf]) + " (p=" +
                                           format_probability(n.probability()) + ", n=" + std::to_string(n.samples()) +
                                           ")";
    phase.all_of = path[leaf];
    phase.leaf = position[leaf];
    p.phases.push_back(std::move(phase));
  }
  p.phases.push_back({kCatchAllLabel, "", {}, {}, std::nullopt});
  return p;
}

Phase priority_phase() {
  Phase p;
  p.label = "priority";
  p.group = "override";
  p.any_of = {{"is_healthcare_worker", Op::Eq, 1}, {"is_urgent_care_patient", Op::Eq, 1}, {"age", Op::Gt, 80}};
  return p;
}

Policy realistic_override(const Policy& p, const std::vector<std::string>& schema) {
  for (const char* attr : {"is_healthcare_worker", "is_urgent_care_patient", "age"}) {
    if (std::find(schema.begin(), schema.end(), attr) == schema.end()) {
      throw SchemaError(std::string("attribute schema lacks '") + attr + "'");
    }
  }
  const Phase priority = priority_phase();
  if (!p.phases.empty() && p.phases.front() == priority) return p;
  Policy out = p;
  out.phases.insert(out.phases.begin(), priority);
  const std::string suffix = "-realistic";
  if (out.name.size() < suffix.size() || out.name.compare(out.name.size() - suffix.size(), suffix.size(), suffix) != 0) {
    out.name += suffix;
  }
  return out;
}

Policy policy_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("policy must be a JSON object");
  if (!j.contains("name") || !j["name"].is_string()) throw ConfigError("policy needs a string 'name'");
  if (!j.contains("phases") || !j["phases"].is_array()) throw ConfigError("policy needs a 'phases' array");
  if (j["phases"].empty()) throw ConfigError("policy has no phases");
  Policy p;
  p.name = j["name"].get<std::string>();
  for (const auto& ph : j["phases"]) {
    if (!ph.is_object()) throw ConfigError("phase must be an object");
    if (!ph.contains("label") || !ph["label"].is_string()) throw ConfigError("phase needs a string 'label'");
    Phase phase;
    phase.label = ph["label"].get<std::string>();
    if (ph.contains("group")) {
      if (!ph["group"].is_string()) throw ConfigError("phase 'group' must be a string");
      phase.group = ph["group"].get<std::string>();
    }
    if (ph.contains("leaf")) {
      if (!ph["leaf"].is_number_integer()) throw ConfigError("phase 'leaf' must be an integer");
      phase.leaf = ph["leaf"].get<int>();
    }
    phase.all_of = conditions_from_json(ph, "all_of");
    phase.any_of = conditions_from_json(ph, "any_of");
    p.phases.push_back(std::move(phase));
  }
  ensure_catch_all(p);
  return p;
}

nlohmann::ordered_json policy_to_json(const Policy& p) {
  nlohmann::ordered_json j;
  j["name"] = p.name;
  j["phases"] = nlohmann::ordered_json::array();
  for (const auto& ph : p.phases) {
    nlohmann::ordered_json o;
    o["label"] = ph.label;
    if (!ph.group.empty()) o["group"] = ph.group;
    if (ph.leaf) o["leaf"] = *ph.leaf;
    o["all_of"] = nlohmann::ordered_json::array();
    for (const auto& c : ph.all_of) o["all_of"].push_back(condition_to_json(c));
    if (!ph.any_of.empty()) {
      o["any_of"] = nlohmann::ordered_json::array();
      for (const auto& c : ph.any_of) o["any_of"].push_back(condition_to_json(c));
    }
    j["phases"].push_back(std::move(o));
  }
  return j;
}

Policy read_policy(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("policy JSON: ") + e.what());
  }
  return policy_from_json(j);
}

void write_policy(const Policy& p, std::ostream& out) { out << policy_to_json(p).dump(1) << '\n'; }

Policy baseline_policy(const json& j) { return policy_from_json(j); }

Policy default_baseline_policy() {
  static const char* const kBaseline = R"json({
 "name": "baseline",
 "editable": true,
 "note": "Approximate staged priority groups (1 + 2 + 10 stages). Edit freely; this is configuration, not ground truth.",
 "phases": [
  {"label": "1", "group": "1", "any_of": [
   {"attr": "is_long_term_care", "op": "==", "value": 1},
   {"attr": "is_healthcare_worker", "op": "==", "value": 1},
   {"attr": "age", "op": ">=", "value": 85}]},
  {"label": "2a", "group": "2", "all_of": [{"attr": "age", "op": ">=", "value": 70}]},
  {"label": "2b", "group": "2", "any_of": [
   {"attr": "age", "op": ">=", "value": 60},
   {"attr": "is_urgent_care_patient", "op": "==", "value": 1}]},
  {"label": "3a", "group": "3", "all_of": [{"attr": "age", "op": ">=", "value": 55}]},
  {"label": "3b", "group": "3", "all_of": [{"attr": "age", "op": ">=", "value": 50}]},
  {"label": "3c", "group": "3", "all_of": [{"attr": "age", "op": ">=", "value": 45}]},
  {"label": "3d", "group": "3", "all_of": [{"attr": "age", "op": ">=", "value": 40}]},
  {"label": "3e", "group": "3", "all_of": [{"attr": "age", "op": ">=", "value": 35}]},
  {"label": "3f", "group": "3", "all_of": [{"attr": "age", "op": ">=", "value": 30}]},
  {"label": "3g", "group": "3", "all_of": [{"attr": "age", "op": ">=", "value": 25}]},
  {"label": "3h", "group": "3", "all_of": [{"attr": "age", "op": ">=", "value": 18}]},
  {"label": "3i", "group": "3", "all_of": [{"attr": "age", "op": ">=", "value": 12}]},
  {"label": "3j", "group": "3", "all_of": [{"attr": "age", "op": ">=", "value": 5}]}
 ]
}
)json";
  return baseline_policy(json::parse(kBaseline));
}

std::vector<int> assign_phases(const Policy& p, const FeatureTable& features) {
  struct CompiledPhase {
    std::vector<CompiledCondition> all_of, any_of;
  };
  std::vector<CompiledPhase> phases;
  for (const auto& ph : p.phases) {
    CompiledPhase c;
    for (const auto& cond : ph.all_of) c.all_of.push_back(compile(cond, features));
    for (const auto& cond : ph.any_of) c.any_of.push_back(compile(cond, features));
    phases.push_back(std::move(c));
  }
  std::vector<int> out(static_cast<std::size_t>(features.rows()), -1);
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    const auto row = features.values.row(r);
    for (std::size_t i = 0; i < phases.size(); ++i) {
      const auto& ph = phases[i];
      const bool all = std::all_of(ph.all_of.begin(), ph.all_of.end(), [&](const auto& c) { return c(row); });
      const bool any =
          ph.any_of.empty() || std::any_of(ph.any_of.begin(), ph.any_of.end(), [&](const auto& c) { return c(row); });
      if (all && any) {
        out[r] = static_cast<int>(i);
        break;
      }
    }
    if (out[r] < 0) throw SchemaError("policy '" + p.name + "' has no phase for row " + std::to_string(r));
  }
  return out;
}

}  // namespace dcndp
