#include "dcndp/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dcndp/errors.hpp"
#include "text_util.hpp"

namespace dcndp {

namespace {

constexpr std::string_view kRhaNames[] = {"East", "Central", "West", "LaGr"};

}  // namespace

std::string_view to_string(Rha rha) { return kRhaNames[static_cast<int>(rha)]; }

std::optional<Rha> parse_rha(std::string_view text) {
  for (Rha r : kAllRhas) {
    if (text == to_string(r)) return r;
  }
  return std::nullopt;
}

bool satisfies_invariants(const NodeAttributes& a) {
  if (a.age < 0 || a.household_id < 0) return false;
  if (a.school_id && (a.age < 4 || a.age > 22)) return false;
  if (a.school_id && a.workplace_id) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Graph

Graph Graph::from_edges(Node n, std::span<const std::pair<Node, Node>> edges) {
  std::vector<Edge> es;
  es.reserve(edges.size());
  for (auto [u, v] : edges) es.push_back({u, v});
  return from_edges(n, es);
}

Graph Graph::from_edges(Node n, std::span<const Edge> edges) {
  if (n < 0) throw DomainError("negative node count");
  Graph g;
  g.ids_.resize(n);
  for (Node v = 0; v < n; ++v) {
    g.ids_[v] = std::to_string(v);
    g.index_.emplace(g.ids_[v], v);
  }
  g.edges_.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
      throw RejectedInputError("edge endpoint out of range");
    }
    if (e.u == e.v) {
      throw RejectedInputError("self-loop on node " + std::to_string(e.u));
    }
    g.edges_.push_back({std::min(e.u, e.v), std::max(e.u, e.v)});
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());

  std::vector<std::int64_t> deg(n, 0);
  for (const Edge& e : g.edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  g.offsets_.assign(n + 1, 0);
  for (Node v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + deg[v];
  g.adj_.resize(g.offsets_[n]);
  std::vector<std::int64_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const Edge& e : g.edges_) {
    g.adj_[fill[e.u]++] = e.v;
    g.adj_[fill[e.v]++] = e.u;
  }
  for (Node v = 0; v < n; ++v) {
    std::sort(g.adj_.begin() + g.offsets_[v], g.adj_.begin() + g.offsets_[v + 1]);
  }
  return g;
}

bool Graph::has_edge(Node u, Node v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::int64_t Graph::edge_index(Node u, Node v) const {
  Edge key{std::min(u, v), std::max(u, v)};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return -1;
  return it - edges_.begin();
}

std::optional<Node> Graph::find(const std::string& external_id) const {
  auto it = index_.find(external_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Graph Graph::with_external_ids(std::vector<std::string> ids) const {
  if (ids.size() != ids_.size()) throw DomainError("external id count does not match n");
  Graph g = *this;
  g.index_.clear();
  for (Node v = 0; v < n(); ++v) {
    if (!g.index_.emplace(ids[v], v).second) {
      throw RejectedInputError("duplicate external id '" + ids[v] + "'");
    }
  }
  g.ids_ = std::move(ids);
  return g;
}

Graph Graph::with_weights(std::vector<double> weights) const {
  if (!weights.empty() && weights.size() != edges_.size()) {
    throw DomainError("weight count does not match m");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw RejectedInputError("negative edge weight");
  }
  Graph g = *this;
  g.weights_ = std::move(weights);
  return g;
}

Graph Graph::with_attributes(std::vector<NodeAttributes> attributes) const {
  if (!attributes.empty() && attributes.size() != ids_.size()) {
    throw DomainError("attribute count does not match n");
  }
  Graph g = *this;
  g.attributes_ = std::move(attributes);
  return g;
}

Graph Graph::induced_subgraph(std::span<const Node> nodes) const {
  std::vector<Node> local(n(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 0 || nodes[i] >= n()) throw DomainError("unknown node in subgraph");
    if (local[nodes[i]] != -1) throw DomainError("duplicate node in subgraph");
    local[nodes[i]] = static_cast<Node>(i);
  }
  std::vector<Edge> es;
  std::vector<double> ws;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    Node a = local[e.u], b = local[e.v];
    if (a >= 0 && b >= 0) {
      es.push_back({std::min(a, b), std::max(a, b)});
      if (has_weights()) ws.push_back(weights_[i]);
    }
  }
  Graph sub = from_edges(static_cast<Node>(nodes.size()), es);
  if (has_weights()) {
    // from_edges sorts; re-associate weights by edge key.
    std::vector<std::pair<Edge, double>> keyed;
    for (std::size_t i = 0; i < es.size(); ++i) keyed.emplace_back(es[i], ws[i]);
    std::sort(keyed.begin(), keyed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> sorted;
    for (auto& [e, w] : keyed) sorted.push_back(w);
    sub.weights_ = std::move(sorted);
  }
  std::vector<std::string> ids;
  ids.reserve(nodes.size());
  for (Node v : nodes) ids.push_back(ids_[v]);
  sub = sub.with_external_ids(std::move(ids));
  if (has_attributes()) {
    std::vector<NodeAttributes> attrs;
    attrs.reserve(nodes.size());
    for (Node v : nodes) attrs.push_back(attributes_[v]);
    sub.attributes_ = std::move(attrs);
  }
  return sub;
}

// ---------------------------------------------------------------------------
// I/O

Graph load_graph(std::istream& edge_list, std::istream* attributes) {
  std::vector<std::string> order;
  std::unordered_map<std::string, Node> seen;
  struct RawEdge {
    Node u, v;
    double w;
    std::size_t line;
  };
  std::vector<RawEdge> raw;
  int weighted = -1;  // unknown until the first edge line

  auto intern = [&](const std::string& id) {
    auto [it, inserted] = seen.emplace(id, static_cast<Node>(order.size()));
    if (inserted) order.push_back(id);
    return it->second;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(edge_list, line)) {
    ++lineno;
    std::string_view text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto tokens = detail::split_edge_line(text);
    if (tokens.empty() || tokens.size() > 3) {
      throw ParseError("expected 'u v' or 'u v weight'", lineno);
    }
    for (const auto& t : tokens) {
      if (t.empty()) throw ParseError("empty node id", lineno);
    }
    if (tokens.size() == 1) {
      intern(tokens[0]);
      continue;
    }
    double w = 0.0;
    bool has_w = tokens.size() == 3;
    if (has_w) {
      auto parsed = detail::parse_double(tokens[2]);
      if (!parsed || *parsed < 0.0) throw ParseError("invalid edge weight '" + tokens[2] + "'", lineno);
      w = *parsed;
    }
    if (weighted == -1) weighted = has_w ? 1 : 0;
    if ((weighted == 1) != has_w) throw ParseError("inconsistent weight column", lineno);
    if (tokens[0] == tokens[1]) {
      throw RejectedInputError("line " + std::to_string(lineno) + ": self-loop on '" + tokens[0] + "'");
    }
    Node u = intern(tokens[0]);
    Node v = intern(tokens[1]);
    raw.push_back({u, v, w, lineno});
  }

  // Densify: numeric order when every id is an integer.
  const Node n = static_cast<Node>(order.size());
  std::vector<Node> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  bool all_int = std::all_of(order.begin(), order.end(),
                             [](const std::string& s) { return detail::parse_int(s).has_value(); });
  if (all_int) {
    std::stable_sort(perm.begin(), perm.end(), [&](Node a, Node b) {
      return *detail::parse_int(order[a]) < *detail::parse_int(order[b]);
    });
  }
  std::vector<Node> dense(n);
  std::vector<std::string> ids(n);
  for (Node i = 0; i < n; ++i) {
    dense[perm[i]] = i;
    ids[i] = order[perm[i]];
  }

  std::vector<Edge> edges;
  std::map<Edge, double> weight_of;
  edges.reserve(raw.size());
  for (const RawEdge& r : raw) {
    Node a = dense[r.u], b = dense[r.v];
    Edge e{std::min(a, b), std::max(a, b)};
    edges.push_back(e);
    if (weighted == 1) weight_of.emplace(e, r.w);  // first occurrence wins
  }
  Graph g = Graph::from_edges(n, edges).with_external_ids(std::move(ids));
  if (weighted == 1) {
    std::vector<double> ws;
    ws.reserve(g.edges().size());
    for (const Edge& e : g.edges()) ws.push_back(weight_of.at(e));
    g = g.with_weights(std::move(ws));
  }
  if (attributes != nullptr) {
    g = g.with_attributes(read_attributes(g, *attributes));
  }
  return g;
}

Graph load_graph_file(const std::string& edge_path, const std::string& attr_path) {
  std::ifstream edges(edge_path);
  if (!edges) throw Error("cannot open edge list '" + edge_path + "'");
  if (attr_path.empty()) return load_graph(edges);
  std::ifstream attrs(attr_path);
  if (!attrs) throw Error("cannot open attribute file '" + attr_path + "'");
  return load_graph(edges, &attrs);
}

void write_edge_list(const Graph& g, std::ostream& out) {
  for (Node v = 0; v < g.n(); ++v) {
    if (g.degree(v) == 0) out << g.external_id(v) << '\n';
  }
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    const Edge& e = g.edges()[i];
    out << g.external_id(e.u) << '\t' << g.external_id(e.v);
    if (g.has_weights()) out << '\t' << detail::format_double(g.weights()[i]);
    out << '\n';
  }
}

namespace {

constexpr std::string_view kAttrColumns[] = {
    "node_id",        "age",          "rha",       "is_healthcare_worker", "is_urgent_care_patient",
    "is_long_term_care", "household_id", "workplace_id", "school_id"};

std::string opt_int(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : ""; }

}  // namespace

void write_attributes(const Graph& g, std::ostream& out) {
  if (!g.has_attributes()) throw DomainError("graph carries no attributes");
  for (std::size_t i = 0; i < std::size(kAttrColumns); ++i) {
    out << (i ? "," : "") << kAttrColumns[i];
  }
  out << '\n';
  for (Node v = 0; v < g.n(); ++v) {
    const NodeAttributes& a = g.attributes(v);
    out << g.external_id(v) << ',' << a.age << ',' << (a.rha ? to_string(*a.rha) : "") << ','
        << int(a.is_healthcare_worker) << ',' << int(a.is_urgent_care_patient) << ','
        << int(a.is_long_term_care) << ',' << a.household_id << ',' << opt_int(a.workplace_id) << ','
        << opt_int(a.school_id) << '\n';
  }
}

std::vector<NodeAttributes> read_attributes(const Graph& g, std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    header = detail::split(t, ',');
    break;
  }
  if (header.empty() || detail::trim(header[0]) != "node_id") {
    throw ParseError("attribute CSV must start with a node_id column", lineno);
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(detail::trim(header[i]))] = i;

  auto parse_bool = [&](const std::string& s) {
    if (s == "1" || s == "true" || s == "True") return true;
    if (s == "0" || s == "false" || s == "False" || s.empty()) return false;
    throw ParseError("invalid boolean '" + s + "'", lineno);
  };
  auto parse_i64 = [&](const std::string& s) -> std::int64_t {
    auto v = detail::parse_int(s);
    if (!v) throw ParseError("invalid integer '" + s + "'", lineno);
    return *v;
  };

  std::vector<NodeAttributes> out(g.n());
  std::vector<std::uint8_t> filled(g.n(), 0);
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = detail::split(t, ',');
    if (fields.size() != header.size()) throw ParseError("column count mismatch", lineno);
    for (auto& f : fields) f = std::string(detail::trim(f));
    auto node = g.find(fields[0]);
    if (!node) throw JoinError("line " + std::to_string(lineno) + ": unknown node '" + fields[0] + "'");
    if (filled[*node]) throw ParseError("duplicate attribute row for '" + fields[0] + "'", lineno);
    filled[*node] = 1;
    NodeAttributes& a = out[*node];
    auto get = [&](std::string_view name) -> const std::string* {
      auto it = col.find(std::string(name));
      return it == col.end() ? nullptr : &fields[it->second];
    };
    if (auto* s = get("age")) a.age = static_cast<int>(parse_i64(*s));
    if (auto* s = get("rha"); s && !s->empty()) {
      a.rha = parse_rha(*s);
      if (!a.rha) throw ParseError("unknown RHA '" + *s + "'", lineno);
    }
    if (auto* s = get("is_healthcare_worker")) a.is_healthcare_worker = parse_bool(*s);
    if (auto* s = get("is_urgent_care_patient")) a.is_urgent_care_patient = parse_bool(*s);
    if (auto* s = get("is_long_term_care")) a.is_long_term_care = parse_bool(*s);
    if (auto* s = get("household_id"); s && !s->empty()) a.household_id = parse_i64(*s);
    if (auto* s = get("workplace_id"); s && !s->empty()) a.workplace_id = parse_i64(*s);
    if (auto* s = get("school_id"); s && !s->empty()) a.school_id = parse_i64(*s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-hop structure

std::size_t HopPairs::num_non_edges() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const HopPair& p) { return !p.is_edge; }));
}

HopPairs edge_pairs(const Graph& g) {
  HopPairs hp;
  hp.k = 1;
  hp.pairs.reserve(g.edges().size());
  for (const Edge& e : g.edges()) hp.pairs.push_back({e.u, e.v, true, {}});
  return hp;
}

HopPairs edge_squared(const Graph& g) {
  HopPairs hp;
  hp.k = 2;
  const Node n = g.n();
  std::vector<Node> mark(n, -1);
  std::vector<std::vector<Node>> common(n);
  std::vector<Node> touched;
  for (Node u = 0; u < n; ++u) {
    for (Node w : g.neighbors(u)) mark[w] = u;
    touched.clear();
    for (Node w : g.neighbors(u)) {
      for (Node x : g.neighbors(w)) {
        if (x <= u || mark[x] == u) continue;
        if (common[x].empty()) touched.push_back(x);
        common[x].push_back(w);
      }
    }
    std::sort(touched.begin(), touched.end());
    // Merge adjacent (v > u) with two-hop candidates in v order.
    auto nb = g.neighbors(u);
    auto it = std::upper_bound(nb.begin(), nb.end(), u);
    std::size_t t = 0;
    while (it != nb.end() || t < touched.size()) {
      if (t == touched.size() || (it != nb.end() && *it < touched[t])) {
        hp.pairs.push_back({u, *it, true, {}});
        ++it;
      } else {
        Node x = touched[t++];
        hp.pairs.push_back({u, x, false, std::move(common[x])});
        common[x].clear();
      }
    }
  }
  return hp;
}

NodeMask make_mask(const Graph& g, std::span<const Node> deleted) {
  NodeMask mask(g.n(), 0);
  for (Node v : deleted) {
    if (v < 0 || v >= g.n()) throw DomainError("unknown node " + std::to_string(v) + " in deleted set");
    mask[v] = 1;
  }
  return mask;
}

std::int64_t count_khop_residual(const Graph& g, std::span<const Node> deleted, int k) {
  return count_khop_residual(g, make_mask(g, deleted), k);
}

std::int64_t count_khop_residual(const Graph& g, const NodeMask& deleted, int k) {
  if (k != 1 && k != 2) throw DomainError("hop parameter must be 1 or 2");
  if (deleted.empty() && g.n() > 0) return count_khop_residual(g, NodeMask(g.n(), 0), k);
  if (deleted.size() != static_cast<std::size_t>(g.n())) throw DomainError("mask size does not match n");
  const Node n = g.n();
  std::int64_t count = 0;
  if (k == 1) {
    for (const Edge& e : g.edges()) {
      if (!deleted[e.u] && !deleted[e.v]) ++count;
    }
    return count;
  }
  std::vector<Node> mark(n, -1);
  for (Node u = 0; u < n; ++u) {
    if (deleted[u]) continue;
    for (Node w : g.neighbors(u)) {
      if (deleted[w]) continue;
      if (w > u && mark[w] != u) {
        mark[w] = u;
        ++count;
      }
      for (Node x : g.neighbors(w)) {
        if (x > u && !deleted[x] && mark[x] != u) {
          mark[x] = u;
          ++count;
        }
      }
    }
  }
  return count;
}

// ---------------------------------------------------------------------------
// Metrics

double density(std::int64_t n, std::int64_t m) {
  if (n < 2) throw DomainError("density needs at least two nodes");
  return 100.0 * static_cast<double>(m) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double density(const Graph& g) { return density(g.n(), g.m()); }

DegreeStats degree_stats(const Graph& g) {
  if (g.n() == 0) throw DomainError("degree statistics of an empty graph");
  Eigen::VectorXd deg = residual_degrees(g, NodeMask(g.n(), 0));
  DegreeStats s;
  s.mean_degree = deg.mean();
  s.mean_squared_degree = deg.squaredNorm() / static_cast<double>(deg.size());
  std::map<std::int64_t, std::int64_t> counts;
  for (Node v = 0; v < g.n(); ++v) ++counts[g.degree(v)];
  for (auto [d, c] : counts) s.histogram[d] = static_cast<double>(c) / g.n();
  return s;
}

Eigen::VectorXd residual_degrees(const Graph& g, const NodeMask& deleted) {
  if (deleted.empty() && g.n() > 0) return residual_degrees(g, NodeMask(g.n(), 0));
  if (deleted.size() != static_cast<std::size_t>(g.n())) throw DomainError("mask size does not match n");
  std::vector<double> degs;
  degs.reserve(g.n());
  for (Node v = 0; v < g.n(); ++v) {
    if (deleted[v]) continue;
    std::int64_t d = 0;
    for (Node w : g.neighbors(v)) d += deleted[w] ? 0 : 1;
    degs.push_back(static_cast<double>(d));
  }
  return Eigen::Map<Eigen::VectorXd>(degs.data(), static_cast<Eigen::Index>(degs.size()));
}

double r0(const Graph& g, double transmissibility) { return r0(g, NodeMask(g.n(), 0), transmissibility); }

double r0(const Graph& g, const NodeMask& deleted, double transmissibility) {
  if (!(transmissibility >= 0.0)) throw DomainError("transmissibility must be nonnegative");
  Eigen::VectorXd deg = residual_degrees(g, deleted);
  if (deg.size() == 0) return 0.0;
  // The 1/n factors of <d^2> and <d> cancel.
  const double sum = deg.sum();
  if (sum == 0.0) return 0.0;
  return transmissibility * (deg.squaredNorm() / sum - 1.0);
}

}  // namespace dcndp
