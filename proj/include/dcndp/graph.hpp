#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dcndp/attributes.hpp"

namespace dcndp {

using Node = std::int32_t;
using NodeSet = std::vector<Node>;  // sorted, unique

/// Per-node deletion flags (1 = removed). Indexed by internal node id; an empty
/// mask means nothing is removed.
using NodeMask = std::vector<std::uint8_t>;

struct Edge {
  Node u;
  Node v;  // u < v
  auto operator<=>(const Edge&) const = default;
};

/// Immutable undirected simple graph with dense internal ids 0..n-1.
///
/// Adjacency is stored in CSR form with sorted neighbour lists. External ids are
/// arbitrary strings; edge weights and node attributes are optional side data.
class Graph {
 public:
  Graph() = default;

  /// Builds from internal-id edges. Duplicates (in either orientation) collapse;
  /// self-loops and out-of-range endpoints throw RejectedInputError.
  static Graph from_edges(Node n, std::span<const Edge> edges);
  static Graph from_edges(Node n, std::span<const std::pair<Node, Node>> edges);

  Node n() const noexcept { return static_cast<Node>(ids_.size()); }
  std::int64_t m() const noexcept { return static_cast<std::int64_t>(edges_.size()); }

  std::span<const Node> neighbors(Node v) const {
    return {adj_.data() + offsets_[v], adj_.data() + offsets_[v + 1]};
  }
  std::int64_t degree(Node v) const { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(Node u, Node v) const;

  /// Edges sorted lexicographically, u < v.
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Index of edge {u,v} in edges(), or -1.
  std::int64_t edge_index(Node u, Node v) const;

  const std::string& external_id(Node v) const { return ids_[v]; }
  std::optional<Node> find(const std::string& external_id) const;

  bool has_weights() const noexcept { return !weights_.empty(); }
  /// Parallel to edges(); empty when no weights were supplied.
  const std::vector<double>& weights() const noexcept { return weights_; }

  bool has_attributes() const noexcept { return !attributes_.empty(); }
  const std::vector<NodeAttributes>& attributes() const noexcept { return attributes_; }
  const NodeAttributes& attributes(Node v) const { return attributes_.at(v); }

  Graph with_external_ids(std::vector<std::string> ids) const;
  Graph with_weights(std::vector<double> weights) const;
  Graph with_attributes(std::vector<NodeAttributes> attributes) const;

  /// G[nodes]; the i-th node of the result is nodes[i] (ids and attributes carried over).
  Graph induced_subgraph(std::span<const Node> nodes) const;

  bool operator==(const Graph&) const = default;

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, Node> index_;
  std::vector<std::int64_t> offsets_{0};
  std::vector<Node> adj_;
  std::vector<Edge> edges_;
  std::vector<double> weights_;
  std::vector<NodeAttributes> attributes_;
};

/// Parses an edge list and an optional attribute CSV.
///
/// Edge lines: "u<sep>v[<sep>w]" with sep one of tab, comma, space; a line
/// holding a single id declares an isolated node; '#' starts a comment line.
/// When every id is an integer the dense ids follow numeric order, otherwise
/// first-appearance order.
Graph load_graph(std::istream& edge_list, std::istream* attributes = nullptr);
Graph load_graph_file(const std::string& edge_path, const std::string& attr_path = "");

/// Writes the edge-list format read by load_graph (isolated nodes as single ids).
void write_edge_list(const Graph& g, std::ostream& out);
/// Writes the attribute CSV (first column node_id). Requires attributes.
void write_attributes(const Graph& g, std::ostream& out);

/// Joins attribute CSV rows onto g by external id.
std::vector<NodeAttributes> read_attributes(const Graph& g, std::istream& in);

/// Unordered pair within hop distance k. For k=2 pairs not in E, `common` lists
/// N(u) ∩ N(v).
struct HopPair {
  Node u;
  Node v;
  bool is_edge;
  std::vector<Node> common;
};

struct HopPairs {
  int k = 1;
  std::vector<HopPair> pairs;  // sorted by (u, v)

  std::size_t size() const noexcept { return pairs.size(); }
  std::size_t num_non_edges() const;
};

/// E for k=1.
HopPairs edge_pairs(const Graph& g);
/// E² = pairs at distance <= 2, with common neighbours of non-adjacent pairs.
HopPairs edge_squared(const Graph& g);

NodeMask make_mask(const Graph& g, std::span<const Node> deleted);

/// Number of pairs at distance <= k in G[V - deleted]. Throws DomainError for an
/// unknown node or k outside {1, 2}.
std::int64_t count_khop_residual(const Graph& g, std::span<const Node> deleted, int k);
std::int64_t count_khop_residual(const Graph& g, const NodeMask& deleted, int k);

/// Edge density in percent, 100 m / (n(n-1)/2). Throws DomainError for n < 2.
double density(const Graph& g);
double density(std::int64_t n, std::int64_t m);

struct DegreeStats {
  double mean_degree = 0.0;
  double mean_squared_degree = 0.0;
  std::map<std::int64_t, double> histogram;  // degree -> fraction of nodes
};

/// Degree statistics over every node, degree 0 included. Throws DomainError when empty.
DegreeStats degree_stats(const Graph& g);

/// Residual degrees of the surviving nodes of G - deleted.
Eigen::VectorXd residual_degrees(const Graph& g, const NodeMask& deleted);

/// T (<d^2>/<d> - 1) over the surviving nodes, isolated ones included; 0 when <d> = 0.
double r0(const Graph& g, double transmissibility = 1.0);
double r0(const Graph& g, const NodeMask& deleted, double transmissibility = 1.0);

}  // namespace dcndp
