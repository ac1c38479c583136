#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "dcndp/errors.hpp"
#include "dcndp/population.hpp"
#include "support.hpp"

using namespace dcndp;
namespace t = dcndp::test;

namespace {

std::string edges_text(const Graph& g) {
  std::ostringstream out;
  write_edge_list(g, out);
  return out.str();
}

std::string attrs_text(const Graph& g) {
  std::ostringstream out;
  write_attributes(g, out);
  return out.str();
}

NodeSet all_nodes(const Graph& g) {
  NodeSet s(g.n());
  std::iota(s.begin(), s.end(), 0);
  return s;
}

void check_partition_laws(const Graph& g, const NodeSet& domain, const Partition& p, std::int64_t max_size) {
  std::vector<int> seen(g.n(), 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < p.parts.size(); ++i) {
    CHECK(static_cast<std::int64_t>(p.parts[i].size()) <= max_size);
    total += p.parts[i].size();
    for (Node v : p.parts[i]) {
      ++seen[v];
      CHECK(p.part_of[v] == static_cast<int>(i));
    }
  }
  CHECK(total == domain.size());
  for (Node v : domain) CHECK(seen[v] == 1);
  CHECK(p.crossing_edges == count_crossing(g, p.part_of));
  CHECK(p.labels.size() == p.parts.size());
}

Graph two_k10() {
  std::vector<std::pair<Node, Node>> e;
  for (Node base : {0, 10}) {
    for (Node i = 0; i < 10; ++i) {
      for (Node j = i + 1; j < 10; ++j) e.emplace_back(base + i, base + j);
    }
  }
  return t::make_graph(20, e);
}

}  // namespace

TEST_CASE("generate_population: deterministic for a seed") {
  PopulationConfig cfg;
  cfg.seed = 42;
  cfg.n = 1000;
  const Graph a = generate_population(cfg);
  const Graph b = generate_population(cfg);
  CHECK(a.n() == 1000);
  CHECK(edges_text(a) == edges_text(b));
  CHECK(attrs_text(a) == attrs_text(b));
  cfg.seed = 43;
  CHECK(edges_text(generate_population(cfg)) != edges_text(a));
}

TEST_CASE("generate_population: without community, work or school contacts the graph is a union of cliques") {
  PopulationConfig cfg;
  cfg.seed = 3;
  cfg.n = 800;
  cfg.mixing.community_degree = 0.0;
  cfg.mixing.employment_rate = 0.0;
  cfg.mixing.enrollment_rate = 0.0;
  const Graph g = generate_population(cfg);
  std::vector<int> comp(g.n(), -1);
  int c = 0;
  for (Node s = 0; s < g.n(); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<Node> members{s};
    comp[s] = c;
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (Node w : g.neighbors(members[i])) {
        if (comp[w] < 0) {
          comp[w] = c;
          members.push_back(w);
        }
      }
    }
    for (Node v : members) CHECK(g.degree(v) == static_cast<std::int64_t>(members.size()) - 1);
    ++c;
  }
  for (const Edge& e : g.edges()) CHECK(g.attributes(e.u).household_id == g.attributes(e.v).household_id);
}

TEST_CASE("generate_population: attribute invariants and default shares") {
  PopulationConfig cfg;
  cfg.seed = 9;
  cfg.n = 5000;
  const Graph g = generate_population(cfg);
  REQUIRE(g.has_attributes());
  std::int64_t hcw = 0, urgent = 0, ltc = 0;
  std::array<std::int64_t, 4> per_rha{};
  for (Node v = 0; v < g.n(); ++v) {
    const NodeAttributes& a = g.attributes(v);
    CHECK(satisfies_invariants(a));
    REQUIRE(a.rha.has_value());
    ++per_rha[static_cast<int>(*a.rha)];
    hcw += a.is_healthcare_worker;
    urgent += a.is_urgent_care_patient;
    ltc += a.is_long_term_care;
  }
  CHECK(hcw == 200);
  CHECK(urgent == 100);
  CHECK(ltc == 50);
  CHECK(per_rha[0] > per_rha[1]);
  CHECK(per_rha[3] > 0);
  std::int64_t cross = 0;
  for (const Edge& e : g.edges()) cross += g.attributes(e.u).rha != g.attributes(e.v).rha;
  CHECK(static_cast<double>(cross) < 0.2 * static_cast<double>(g.m()));
}

TEST_CASE("generate_population: household sizes stay within the configured range") {
  PopulationConfig cfg;
  cfg.n = 3000;
  const Graph g = generate_population(cfg);
  std::map<std::int64_t, int> size;
  for (Node v = 0; v < g.n(); ++v) ++size[g.attributes(v).household_id];
  for (const auto& [id, s] : size) {
    CHECK(s >= 1);
    CHECK(s <= 6);
  }
}

TEST_CASE("generate_population: invalid weights") {
  PopulationConfig cfg;
  cfg.rha_weights = {0.5, 0.5, 0.5, 0.0};
  CHECK_THROWS_AS(generate_population(cfg), ConfigError);
  PopulationConfig neg;
  neg.rha_weights = {1.2, -0.2, 0.0, 0.0};
  CHECK_THROWS_AS(generate_population(neg), ConfigError);
  PopulationConfig hh;
  hh.mixing.household_size_weights = {};
  CHECK_THROWS_AS(generate_population(hh), ConfigError);
  PopulationConfig zero;
  zero.n = 0;
  CHECK_THROWS_AS(generate_population(zero), ConfigError);
}

TEST_CASE("generate_population: full-scale density band") {
  PopulationConfig cfg;
  cfg.seed = 1;
  cfg.n = 507555;
  const Graph g = generate_population(cfg);
  const double d = density(g);
  MESSAGE("density at n=507555: " << d << "%");
  CHECK(d >= 0.001);
  CHECK(d <= 0.01);
}

TEST_CASE("split_by_rha examples") {
  SUBCASE("single RHA") {
    std::vector<NodeAttributes> attrs(3);
    for (auto& a : attrs) a.rha = Rha::East, a.household_id = 0;
    const Graph g = t::path(3).with_attributes(attrs);
    const Partition p = split_by_rha(g);
    CHECK(p.parts.size() == 1);
    CHECK(p.crossing_edges == 0);
    CHECK(p.labels[0] == "East");
  }
  SUBCASE("two RHAs joined by one edge") {
    std::vector<NodeAttributes> attrs(2);
    attrs[0].rha = Rha::West;
    attrs[1].rha = Rha::LaGr;
    const Graph g = t::path(2).with_attributes(attrs);
    CHECK(split_by_rha(g).crossing_edges == 1);
  }
  SUBCASE("generated population") {
    PopulationConfig cfg;
    const Graph g = generate_population(cfg);
    const Partition p = split_by_rha(g);
    check_partition_laws(g, all_nodes(g), p, g.n());
  }
  SUBCASE("missing attribute") {
    std::vector<NodeAttributes> attrs(2);
    attrs[0].rha = Rha::West;
    CHECK_THROWS_AS(split_by_rha(t::path(2).with_attributes(attrs)), DomainError);
    CHECK_THROWS_AS(split_by_rha(t::path(2)), DomainError);
  }
}

TEST_CASE("bisect_partition examples") {
  SUBCASE("two disjoint K10") {
    const Graph g = two_k10();
    const Partition p = bisect_partition(g, all_nodes(g), 10, 1);
    CHECK(p.parts.size() == 2);
    CHECK(p.crossing_edges == 0);
    check_partition_laws(g, all_nodes(g), p, 10);
  }
  SUBCASE("C12") {
    const Graph g = t::cycle(12);
    const Partition p = bisect_partition(g, all_nodes(g), 6, 1);
    CHECK(p.parts.size() == 2);
    CHECK(p.crossing_edges == 2);
  }
  SUBCASE("already small enough") {
    const Graph g = t::gnp(2000, 0.002, 5);
    const Partition p = bisect_partition(g, all_nodes(g), 2500, 1);
    CHECK(p.parts.size() == 1);
    CHECK(p.crossing_edges == 0);
  }
  SUBCASE("max_size below two") { CHECK_THROWS_AS(bisect_partition(t::path(4), all_nodes(t::path(4)), 1, 1), DomainError); }
}

TEST_CASE("property: bisection laws, determinism and refinement monotonicity") {
  for (int s = 0; s < 12; ++s) {
    const Graph g = t::gnp(150 + 20 * s, 0.03, 2000 + s);
    const std::int64_t max_size = 20 + 7 * s;
    const Partition a = bisect_partition(g, all_nodes(g), max_size, s);
    const Partition b = bisect_partition(g, all_nodes(g), max_size, s);
    check_partition_laws(g, all_nodes(g), a, max_size);
    CHECK(a.parts == b.parts);
    CHECK(a.crossing_edges == b.crossing_edges);

    const NodeSet nodes = all_nodes(g);
    std::vector<std::uint8_t> side(nodes.size());
    std::mt19937_64 rng(s);
    for (auto& x : side) x = rng() & 1u;
    std::vector<int> before(g.n());
    for (Node v = 0; v < g.n(); ++v) before[v] = side[v];
    const std::int64_t start = count_crossing(g, before);
    std::vector<std::int64_t> history;
    refine_bisection(g, nodes, side, 10, &history);
    CHECK(history.size() <= 10);
    std::int64_t prev = start;
    for (std::int64_t h : history) {
      CHECK(h <= prev);
      prev = h;
    }
    CHECK(std::count(side.begin(), side.end(), 1) == std::count(before.begin(), before.end(), 1));
  }
}

TEST_CASE("bisect_partition over a subset") {
  const Graph g = t::cycle(20);
  NodeSet sub;
  for (Node v = 0; v < 20; v += 2) sub.push_back(v);
  const Partition p = bisect_partition(g, sub, 4, 3);
  check_partition_laws(g, sub, p, 4);
  for (Node v = 1; v < 20; v += 2) CHECK(p.part_of[v] == -1);
}

TEST_CASE("partition_graph and JSON round trip") {
  PopulationConfig cfg;
  cfg.n = 2000;
  const Graph g = generate_population(cfg);
  const Partition p = partition_graph(g, true, 600, 4);
  check_partition_laws(g, all_nodes(g), p, 600);
  CHECK(p.crossing_edges >= split_by_rha(g).crossing_edges);
  std::stringstream ss;
  write_partition_json(g, p, ss);
  const Partition back = read_partition_json(g, ss);
  CHECK(back.parts == p.parts);
  CHECK(back.labels == p.labels);
  CHECK(back.crossing_edges == p.crossing_edges);
  const Partition plain = partition_graph(g, false, 2000, 4);
  CHECK(plain.parts.size() == 1);
}
