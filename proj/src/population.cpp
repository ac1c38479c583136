#include "dcndp/population.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "dcndp/errors.hpp"

namespace dcndp {

namespace {

using Rng = std::mt19937_64;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void validate(const PopulationConfig& c) {
  if (c.n < 1) throw ConfigError("population size must be at least 1");
  double sum = 0.0;
  for (double w : c.rha_weights) {
    if (!(w >= 0.0)) throw ConfigError("RHA weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("RHA weights must sum to 1");
  const auto& mx = c.mixing;
  if (mx.household_size_weights.empty() ||
      std::any_of(mx.household_size_weights.begin(), mx.household_size_weights.end(),
                  [](double w) { return !(w >= 0.0); }) ||
      std::accumulate(mx.household_size_weights.begin(), mx.household_size_weights.end(), 0.0) <= 0.0) {
    throw ConfigError("household size weights must be nonnegative with positive sum");
  }
  if (mx.workplace_cap < 1 || mx.school_cap < 1) throw ConfigError("clique caps must be positive");
  for (double share : {mx.employment_rate, mx.enrollment_rate, mx.community_within_rha, mx.healthcare_share,
                       mx.urgent_care_share, mx.long_term_care_share}) {
    if (!(share >= 0.0 && share <= 1.0)) throw ConfigError("rates and shares must lie in [0, 1]");
  }
  if (!(mx.community_degree >= 0.0)) throw ConfigError("community degree must be nonnegative");
}

void add_clique(std::vector<Edge>& edges, const std::vector<Node>& members) {
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      edges.push_back({std::min(members[a], members[b]), std::max(members[a], members[b])});
    }
  }
}

/// Splits `pool` into consecutive groups of size uniform in [2, cap] (cap 1 gives singletons).
template <typename F>
void chunk_groups(const std::vector<Node>& pool, int cap, Rng& rng, F&& on_group) {
  std::size_t i = 0;
  std::uniform_int_distribution<int> size_dist(std::min(2, cap), cap);
  while (i < pool.size()) {
    std::size_t size = static_cast<std::size_t>(size_dist(rng));
    std::vector<Node> group(pool.begin() + static_cast<std::ptrdiff_t>(i),
                            pool.begin() + static_cast<std::ptrdiff_t>(std::min(pool.size(), i + size)));
    on_group(group);
    i += size;
  }
}

/// Picks round(share * n) nodes, preferring the `preferred` pool.
void assign_flag(std::vector<NodeAttributes>& attrs, const std::vector<Node>& preferred, double share, Rng& rng,
                 bool NodeAttributes::*flag) {
  const auto n = static_cast<std::int64_t>(attrs.size());
  std::int64_t want = static_cast<std::int64_t>(std::llround(share * static_cast<double>(n)));
  std::vector<Node> order = preferred;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Node> rest;
  std::vector<std::uint8_t> in_pref(n, 0);
  for (Node v : preferred) in_pref[v] = 1;
  for (Node v = 0; v < n; ++v) {
    if (!in_pref[v]) rest.push_back(v);
  }
  std::shuffle(rest.begin(), rest.end(), rng);
  order.insert(order.end(), rest.begin(), rest.end());
  for (Node v : order) {
    if (want <= 0) break;
    attrs[v].*flag = true;
    --want;
  }
}

}  // namespace

Graph generate_population(const PopulationConfig& config) {
  validate(config);
  const auto& mx = config.mixing;
  Rng rng(splitmix(config.seed));
  const Node n = static_cast<Node>(config.n);

  std::vector<NodeAttributes> attrs(n);
  std::vector<Edge> edges;
  std::discrete_distribution<int> rha_dist(config.rha_weights.begin(), config.rha_weights.end());
  std::discrete_distribution<int> size_dist(mx.household_size_weights.begin(), mx.household_size_weights.end());
  std::uniform_int_distribution<int> head_age(20, 89);
  std::uniform_int_distribution<int> child_age(0, 22);
  std::uniform_int_distribution<int> spouse_shift(-5, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Households.
  Node next = 0;
  std::int64_t household = 0;
  while (next < n) {
    const int size = std::min<int>(size_dist(rng) + 1, n - next);
    const Rha rha = kAllRhas[rha_dist(rng)];
    std::vector<Node> members;
    int head = 0;
    for (int i = 0; i < size; ++i) {
      NodeAttributes& a = attrs[next];
      a.household_id = household;
      a.rha = rha;
      if (i == 0) {
        a.age = head = head_age(rng);
      } else if (i == 1) {
        a.age = std::clamp(head + spouse_shift(rng), 18, 99);
      } else {
        a.age = child_age(rng);
      }
      members.push_back(next++);
    }
    add_clique(edges, members);
    ++household;
  }

  // Workplaces and schools, formed within each RHA.
  std::int64_t workplace = 0, school = 0;
  for (Rha rha : kAllRhas) {
    std::vector<Node> workers;
    std::vector<std::vector<Node>> students(8);
    for (Node v = 0; v < n; ++v) {
      NodeAttributes& a = attrs[v];
      if (a.rha != rha) continue;
      if (a.age >= 4 && a.age <= 22) {
        if (unit(rng) < mx.enrollment_rate) students[(a.age - 4) / 3].push_back(v);
      } else if (a.age >= 23 && a.age <= 65) {
        if (unit(rng) < mx.employment_rate) workers.push_back(v);
      }
    }
    std::shuffle(workers.begin(), workers.end(), rng);
    chunk_groups(workers, mx.workplace_cap, rng, [&](const std::vector<Node>& g) {
      for (Node v : g) attrs[v].workplace_id = workplace;
      ++workplace;
      add_clique(edges, g);
    });
    for (auto& band : students) {
      std::shuffle(band.begin(), band.end(), rng);
      chunk_groups(band, mx.school_cap, rng, [&](const std::vector<Node>& g) {
        for (Node v : g) attrs[v].school_id = school;
        ++school;
        add_clique(edges, g);
      });
    }
  }

  // Community edges between households, mostly within the same RHA.
  std::array<std::vector<Node>, 4> by_rha;
  for (Node v = 0; v < n; ++v) by_rha[static_cast<int>(*attrs[v].rha)].push_back(v);
  const auto community = static_cast<std::int64_t>(std::llround(mx.community_degree * n / 2.0));
  std::uniform_int_distribution<Node> any(0, n - 1);
  for (std::int64_t i = 0; i < community && n > 1; ++i) {
    const Node a = any(rng);
    Node b;
    const auto& local = by_rha[static_cast<int>(*attrs[a].rha)];
    if (unit(rng) < mx.community_within_rha && local.size() > 1) {
      b = local[std::uniform_int_distribution<std::size_t>(0, local.size() - 1)(rng)];
    } else {
      b = any(rng);
    }
    if (a == b || attrs[a].household_id == attrs[b].household_id) continue;
    edges.push_back({std::min(a, b), std::max(a, b)});
  }

  // Flags.
  std::vector<Node> working, elderly, older;
  for (Node v = 0; v < n; ++v) {
    if (attrs[v].workplace_id) working.push_back(v);
    if (attrs[v].age >= 75) elderly.push_back(v);
    if (attrs[v].age >= 60) older.push_back(v);
  }
  assign_flag(attrs, working, mx.healthcare_share, rng, &NodeAttributes::is_healthcare_worker);
  assign_flag(attrs, older, mx.urgent_care_share, rng, &NodeAttributes::is_urgent_care_patient);
  assign_flag(attrs, elderly, mx.long_term_care_share, rng, &NodeAttributes::is_long_term_care);

  return Graph::from_edges(n, edges).with_attributes(std::move(attrs));
}

// ---------------------------------------------------------------------------
// Partitioning

std::int64_t count_crossing(const Graph& g, const std::vector<int>& part_of) {
  std::int64_t c = 0;
  for (const Edge& e : g.edges()) {
    if (part_of[e.u] >= 0 && part_of[e.v] >= 0 && part_of[e.u] != part_of[e.v]) ++c;
  }
  return c;
}

Partition split_by_rha(const Graph& g) {
  if (!g.has_attributes()) throw DomainError("graph carries no attributes");
  std::array<NodeSet, 4> buckets;
  for (Node v = 0; v < g.n(); ++v) {
    const auto& rha = g.attributes(v).rha;
    if (!rha) throw DomainError("node '" + g.external_id(v) + "' has no RHA");
    buckets[static_cast<int>(*rha)].push_back(v);
  }
  Partition p;
  p.part_of.assign(g.n(), -1);
  for (Rha rha : kAllRhas) {
    auto& nodes = buckets[static_cast<int>(rha)];
    if (nodes.empty()) continue;
    for (Node v : nodes) p.part_of[v] = static_cast<int>(p.parts.size());
    p.parts.push_back(std::move(nodes));
    p.labels.emplace_back(to_string(rha));
  }
  p.crossing_edges = count_crossing(g, p.part_of);
  return p;
}

void refine_bisection(const Graph& g, const NodeSet& nodes, std::vector<std::uint8_t>& side, int max_passes,
                      std::vector<std::int64_t>* history) {
  const std::size_t s = nodes.size();
  std::vector<int> local(g.n(), -1);
  for (std::size_t i = 0; i < s; ++i) local[nodes[i]] = static_cast<int>(i);

  auto crossing = [&]() {
    std::int64_t c = 0;
    for (std::size_t i = 0; i < s; ++i) {
      for (Node w : g.neighbors(nodes[i])) {
        const int j = local[w];
        if (j > static_cast<int>(i) && side[j] != side[i]) ++c;
      }
    }
    return c;
  };
  // gain[i] = external - internal edges of node i within `nodes`.
  std::vector<std::int64_t> gain(s, 0);
  auto compute_gain = [&](std::size_t i) {
    std::int64_t d = 0;
    for (Node w : g.neighbors(nodes[i])) {
      const int j = local[w];
      if (j >= 0) d += side[j] != side[i] ? 1 : -1;
    }
    gain[i] = d;
  };

  std::int64_t current = crossing();
  for (int pass = 0; pass < max_passes; ++pass) {
    for (std::size_t i = 0; i < s; ++i) compute_gain(i);
    std::vector<std::uint8_t> locked(s, 0);
    bool improved = false;
    while (true) {
      // Best unlocked boundary candidates on each side.
      constexpr std::size_t kTop = 16;
      std::vector<std::size_t> top[2];
      for (std::size_t i = 0; i < s; ++i) {
        if (!locked[i] && gain[i] > -static_cast<std::int64_t>(g.degree(nodes[i]))) top[side[i]].push_back(i);
      }
      for (auto& t : top) {
        const std::size_t keep = std::min(kTop, t.size());
        std::partial_sort(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(keep), t.end(),
                          [&](std::size_t a, std::size_t b) { return gain[a] != gain[b] ? gain[a] > gain[b] : a < b; });
        t.resize(keep);
      }
      std::int64_t best = 0;
      std::size_t ba = 0, bb = 0;
      for (std::size_t a : top[0]) {
        for (std::size_t b : top[1]) {
          const std::int64_t delta = gain[a] + gain[b] - (g.has_edge(nodes[a], nodes[b]) ? 2 : 0);
          if (delta > best) {
            best = delta;
            ba = a;
            bb = b;
          }
        }
      }
      if (best <= 0) break;
      side[ba] ^= 1;
      side[bb] ^= 1;
      locked[ba] = locked[bb] = 1;
      current -= best;
      improved = true;
      for (std::size_t i : {ba, bb}) {
        compute_gain(i);
        for (Node w : g.neighbors(nodes[i])) {
          if (local[w] >= 0) compute_gain(static_cast<std::size_t>(local[w]));
        }
      }
    }
    if (history) history->push_back(current);
    if (!improved) break;
  }
}

namespace {

/// BFS from a pseudo-peripheral node grows the first half; unreached nodes are
/// taken in index order when a component runs out.
std::vector<std::uint8_t> grow_half(const Graph& g, const NodeSet& nodes, std::vector<int>& local, Rng& rng) {
  const std::size_t s = nodes.size();
  for (std::size_t i = 0; i < s; ++i) local[nodes[i]] = static_cast<int>(i);

  auto bfs_order = [&](std::size_t start) {
    std::vector<std::size_t> order;
    std::vector<std::uint8_t> seen(s, 0);
    std::deque<std::size_t> queue;
    std::size_t scan = 0;
    auto push = [&](std::size_t i) {
      seen[i] = 1;
      queue.push_back(i);
    };
    push(start);
    while (order.size() < s) {
      if (queue.empty()) {
        while (seen[scan]) ++scan;
        push(scan);
      }
      const std::size_t i = queue.front();
      queue.pop_front();
      order.push_back(i);
      for (Node w : g.neighbors(nodes[i])) {
        const int j = local[w];
        if (j >= 0 && !seen[j]) push(static_cast<std::size_t>(j));
      }
    }
    return order;
  };

  // Last node reached by a BFS within the random start's component.
  const std::size_t first = std::uniform_int_distribution<std::size_t>(0, s - 1)(rng);
  std::vector<std::uint8_t> seen(s, 0);
  std::deque<std::size_t> q{first};
  seen[first] = 1;
  std::size_t far = first;
  while (!q.empty()) {
    far = q.front();
    q.pop_front();
    for (Node w : g.neighbors(nodes[far])) {
      const int j = local[w];
      if (j >= 0 && !seen[j]) {
        seen[j] = 1;
        q.push_back(static_cast<std::size_t>(j));
      }
    }
  }
  const auto order = bfs_order(far);
  std::vector<std::uint8_t> side(s, 1);
  const std::size_t half = (s + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) side[order[i]] = 0;
  return side;
}

void bisect_into(const Graph& g, const NodeSet& nodes, std::int64_t max_size, std::uint64_t seed,
                 const std::string& label, std::vector<int>& local, Partition& out) {
  if (static_cast<std::int64_t>(nodes.size()) <= max_size) {
    for (Node v : nodes) out.part_of[v] = static_cast<int>(out.parts.size());
    out.parts.push_back(nodes);
    out.labels.push_back(label);
    return;
  }
  Rng rng(splitmix(seed));
  auto side = grow_half(g, nodes, local, rng);
  refine_bisection(g, nodes, side);
  for (Node v : nodes) local[v] = -1;
  NodeSet halves[2];
  for (std::size_t i = 0; i < nodes.size(); ++i) halves[side[i]].push_back(nodes[i]);
  bisect_into(g, halves[0], max_size, splitmix(seed ^ 0x1), label + "0", local, out);
  bisect_into(g, halves[1], max_size, splitmix(seed ^ 0x2), label + "1", local, out);
}

}  // namespace

Partition bisect_partition(const Graph& g, const NodeSet& part, std::int64_t max_size, std::uint64_t seed) {
  if (max_size < 2) throw DomainError("max_size must be at least 2");
  for (Node v : part) {
    if (v < 0 || v >= g.n()) throw DomainError("unknown node in part");
  }
  NodeSet nodes = part;
  std::sort(nodes.begin(), nodes.end());
  Partition out;
  out.part_of.assign(g.n(), -1);
  std::vector<int> local(g.n(), -1);
  bisect_into(g, nodes, max_size, seed, "", local, out);
  for (auto& l : out.labels) {
    if (l.empty()) l = "0";
  }
  out.crossing_edges = count_crossing(g, out.part_of);
  return out;
}

Partition partition_graph(const Graph& g, bool by_rha, std::int64_t max_size, std::uint64_t seed) {
  Partition top;
  if (by_rha) {
    top = split_by_rha(g);
  } else {
    NodeSet all(g.n());
    std::iota(all.begin(), all.end(), 0);
    top.parts.push_back(std::move(all));
    top.labels.push_back("all");
  }
  Partition out;
  out.part_of.assign(g.n(), -1);
  for (std::size_t i = 0; i < top.parts.size(); ++i) {
    Partition sub = bisect_partition(g, top.parts[i], max_size, splitmix(seed + i));
    for (std::size_t j = 0; j < sub.parts.size(); ++j) {
      for (Node v : sub.parts[j]) out.part_of[v] = static_cast<int>(out.parts.size());
      out.parts.push_back(std::move(sub.parts[j]));
      out.labels.push_back(sub.parts.size() == 1 ? top.labels[i] : top.labels[i] + "/" + std::to_string(j));
    }
  }
  out.crossing_edges = count_crossing(g, out.part_of);
  return out;
}

void write_partition_json(const Graph& g, const Partition& p, std::ostream& out) {
  nlohmann::json j;
  j["parts"] = nlohmann::json::array();
  for (const auto& part : p.parts) {
    nlohmann::json ids = nlohmann::json::array();
    for (Node v : part) ids.push_back(g.external_id(v));
    j["parts"].push_back(std::move(ids));
  }
  j["labels"] = p.labels;
  j["crossing_edges"] = p.crossing_edges;
  out << j.dump(1) << '\n';
}

Partition read_partition_json(const Graph& g, std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("partition JSON: ") + e.what());
  }
  Partition p;
  p.part_of.assign(g.n(), -1);
  try {
    for (const auto& ids : j.at("parts")) {
      NodeSet part;
      for (const auto& id : ids) {
        auto v = g.find(id.is_string() ? id.get<std::string>() : id.dump());
        if (!v) throw JoinError("partition references unknown node " + id.dump());
        if (p.part_of[*v] != -1) throw DomainError("node appears in two parts");
        p.part_of[*v] = static_cast<int>(p.parts.size());
        part.push_back(*v);
      }
      std::sort(part.begin(), part.end());
      p.parts.push_back(std::move(part));
    }
    if (j.contains("labels")) p.labels = j["labels"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("partition JSON: ") + e.what());
  }
  p.labels.resize(p.parts.size());
  p.crossing_edges = count_crossing(g, p.part_of);
  return p;
}

}  // namespace dcndp
