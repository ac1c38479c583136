#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "dcndp/graph.hpp"

namespace dcndp {

/// Contact-structure knobs of the synthetic population.
struct MixingConfig {
  /// Probability of household sizes 1, 2, ... (normalised on use).
  std::vector<double> household_size_weights = {0.28, 0.34, 0.15, 0.13, 0.06, 0.04};
  int workplace_cap = 12;
  int school_cap = 25;
  double employment_rate = 0.70;   // ages 23..65
  double enrollment_rate = 0.95;   // ages 4..22
  double community_degree = 2.0;   // mean inter-household edges per person
  double community_within_rha = 0.95;
  double healthcare_share = 0.04;
  double urgent_care_share = 0.02;
  double long_term_care_share = 0.01;
};

struct PopulationConfig {
  std::uint64_t seed = 1;
  std::int64_t n = 1000;
  /// East, Central, West, LaGr; must sum to 1.
  std::array<double, 4> rha_weights = {0.60, 0.18, 0.15, 0.07};
  MixingConfig mixing;
};

/// Household, workplace and school cliques plus sparse community edges, mostly
/// within an RHA. Deterministic for a given config.
Graph generate_population(const PopulationConfig& config);

struct Partition {
  std::vector<NodeSet> parts;
  std::vector<std::string> labels;  // one per part
  std::int64_t crossing_edges = 0;
  /// Part index per node of the graph; -1 for nodes outside the partitioned set.
  std::vector<int> part_of;
};

/// Number of edges of g with both endpoints assigned and in different parts.
std::int64_t count_crossing(const Graph& g, const std::vector<int>& part_of);

/// One part per RHA present (East, Central, West, LaGr order); inter-RHA edges
/// are crossing. Throws DomainError when a node lacks an RHA.
Partition split_by_rha(const Graph& g);

/// Recursive BFS-grown bisection with boundary-swap refinement until every part
/// holds at most max_size nodes.
Partition bisect_partition(const Graph& g, const NodeSet& part, std::int64_t max_size, std::uint64_t seed);

/// Boundary-swap refinement of a two-way split of `side` (0/1 per listed node).
/// A swap is applied only if it strictly lowers the crossing count; at most
/// max_passes passes. Crossing counts after each pass are appended to history.
void refine_bisection(const Graph& g, const NodeSet& nodes, std::vector<std::uint8_t>& side, int max_passes = 10,
                      std::vector<std::int64_t>* history = nullptr);

/// split_by_rha (optional) followed by bisection of parts larger than max_size.
Partition partition_graph(const Graph& g, bool by_rha, std::int64_t max_size, std::uint64_t seed);

/// {"parts": [[ids...], ...], "labels": [...], "crossing_edges": c} with external ids.
void write_partition_json(const Graph& g, const Partition& p, std::ostream& out);
Partition read_partition_json(const Graph& g, std::istream& in);

}  // namespace dcndp
