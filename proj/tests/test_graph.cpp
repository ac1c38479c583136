#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "dcndp/errors.hpp"
#include "dcndp/graph.hpp"
#include "support.hpp"

using namespace dcndp;
namespace t = dcndp::test;

namespace {

std::string two_dp(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

Node id(const Graph& g, const std::string& ext) { return g.find(ext).value(); }

}  // namespace

TEST_CASE("load_graph: path from comma lines") {
  const Graph g = t::from_text("1,2\n2,3\n");
  CHECK(g.n() == 3);
  CHECK(g.m() == 2);
}

TEST_CASE("load_graph: reversed duplicate collapses") {
  const Graph g = t::from_text("1,2\n2,1\n");
  CHECK(g.n() == 2);
  CHECK(g.m() == 1);
}

TEST_CASE("load_graph: grid") {
  const Graph g = t::grid3();
  CHECK(g.n() == 9);
  CHECK(g.m() == 12);
  CHECK(g.external_id(4) == "5");
  CHECK(g.degree(id(g, "5")) == 4);
}

TEST_CASE("load_graph: tabs, comments, weights and isolated nodes") {
  const Graph g = t::from_text("# header\na\tb\t0.5\nb c 2\nz\n");
  CHECK(g.n() == 4);
  CHECK(g.m() == 2);
  REQUIRE(g.has_weights());
  CHECK(g.weights()[0] == doctest::Approx(0.5));
  CHECK(g.degree(id(g, "z")) == 0);
}

TEST_CASE("load_graph: errors") {
  SUBCASE("self-loop") { CHECK_THROWS_AS(t::from_text("1,2\n3,3\n"), RejectedInputError); }
  SUBCASE("malformed line carries its number") {
    try {
      t::from_text("1,2\n2,3,4,5\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("attribute row for an unknown node") {
    std::istringstream edges("1,2\n");
    std::istringstream attrs("node_id,age\n9,30\n");
    CHECK_THROWS_AS(load_graph(edges, &attrs), JoinError);
  }
}

TEST_CASE("load_graph: attributes joined by id") {
  std::istringstream edges("p1,p2\n");
  std::istringstream attrs("node_id,age,rha,household_id\np2,41,West,7\np1,12,East,7\n");
  const Graph g = load_graph(edges, &attrs);
  REQUIRE(g.has_attributes());
  CHECK(g.attributes(id(g, "p2")).age == 41);
  CHECK(g.attributes(id(g, "p2")).rha == Rha::West);
  CHECK(g.attributes(id(g, "p1")).household_id == 7);
}

TEST_CASE("write_edge_list round trip") {
  const Graph g = t::from_text("a b\nb c\nq\n");
  std::stringstream ss;
  write_edge_list(g, ss);
  const Graph back = load_graph(ss);
  CHECK(back.n() == g.n());
  CHECK(back.m() == g.m());
  for (const Edge& e : g.edges()) {
    CHECK(back.has_edge(id(back, g.external_id(e.u)), id(back, g.external_id(e.v))));
  }
}

TEST_CASE("edge_squared examples") {
  SUBCASE("P3") {
    const Graph g = t::from_text("1 2\n2 3\n");
    const HopPairs hp = edge_squared(g);
    REQUIRE(hp.size() == 3);
    CHECK(hp.num_non_edges() == 1);
    for (const HopPair& p : hp.pairs) {
      if (!p.is_edge) {
        CHECK(g.external_id(p.u) == "1");
        CHECK(g.external_id(p.v) == "3");
        CHECK(p.common == std::vector<Node>{id(g, "2")});
      }
    }
  }
  SUBCASE("grid") {
    const HopPairs hp = edge_squared(t::grid3());
    CHECK(hp.size() == 26);
    CHECK(hp.num_non_edges() == 14);
  }
  SUBCASE("K4") {
    const HopPairs hp = edge_squared(t::complete(4));
    CHECK(hp.size() == 6);
    CHECK(hp.num_non_edges() == 0);
  }
}

TEST_CASE("count_khop_residual examples") {
  const Graph g = t::grid3();
  const std::vector<Node> centre{id(g, "5")};
  CHECK(count_khop_residual(g, centre, 1) == 8);
  CHECK(count_khop_residual(g, centre, 2) == 16);
  std::vector<Node> all(g.n());
  for (Node v = 0; v < g.n(); ++v) all[v] = v;
  CHECK(count_khop_residual(g, all, 1) == 0);
  CHECK(count_khop_residual(g, all, 2) == 0);
  const std::vector<Node> bad{42};
  CHECK_THROWS_AS(count_khop_residual(g, bad, 1), DomainError);
  CHECK_THROWS_AS(count_khop_residual(g, centre, 3), DomainError);
}

TEST_CASE("density examples") {
  CHECK(two_dp(density(2456, 15137)) == "0.50");
  CHECK(two_dp(density(2457, 74868)) == "2.48");
  CHECK(density(t::complete(4)) == doctest::Approx(100.0));
  CHECK_THROWS_AS(density(t::make_graph(1, {})), DomainError);
}

TEST_CASE("density: regional table") {
  struct Row {
    std::int64_t n, m;
    const char* expected;
  };
  const Row rows[] = {
      {2456, 15137, "0.50"}, {2550, 16476, "0.51"}, {2420, 16501, "0.56"}, {2476, 17116, "0.56"},
      {2502, 18799, "0.60"}, {2420, 19387, "0.66"}, {2432, 19478, "0.66"}, {2508, 22103, "0.70"},
      {2539, 22497, "0.70"}, {2513, 22460, "0.71"}, {2350, 21749, "0.79"}, {2567, 33030, "1.00"},
      {2504, 31833, "1.02"}, {2547, 37497, "1.16"}, {2457, 74868, "2.48"},
  };
  for (const Row& r : rows) {
    CAPTURE(r.n);
    CAPTURE(r.m);
    CHECK(two_dp(density(r.n, r.m)) == r.expected);
  }
}

TEST_CASE("r0 examples") {
  CHECK(r0(t::cycle(5)) == doctest::Approx(1.0));
  CHECK(r0(t::star(3)) == doctest::Approx(1.0));
  CHECK(r0(t::make_graph(4, {{0, 1}})) == doctest::Approx(0.0));
  CHECK(r0(t::make_graph(3, {})) == 0.0);
  CHECK(r0(t::cycle(5), 0.4) == doctest::Approx(0.4));
}

TEST_CASE("r0 on regular graphs is T(k-1) exactly") {
  struct Case {
    Graph g;
    int k;
  };
  const Case cases[] = {{t::cycle(5), 2}, {t::cycle(6), 2}, {t::complete(4), 3}, {t::petersen(), 3}};
  for (const Case& c : cases) {
    for (double T : {1.0, 0.5, 0.25}) CHECK(r0(c.g, T) == T * (c.k - 1));
  }
}

TEST_CASE("r0 removal counts isolated survivors as degree zero") {
  // Frozen witness: removing node 1 leaves node 2 isolated and raises r0 from 1/3 to 1/2.
  const Graph g = t::make_graph(5, {{0, 3}, {0, 4}, {1, 2}});
  NodeMask mask(5, 0);
  mask[1] = 1;
  CHECK(r0(g) == doctest::Approx(1.0 / 3.0));
  CHECK(r0(g, mask) == doctest::Approx(0.5));
  const Eigen::VectorXd d = residual_degrees(g, mask);
  CHECK(d.size() == 4);
  CHECK(d.sum() == doctest::Approx(4.0));
}

TEST_CASE("r0 non-monotonicity witness search over small graphs") {
  // Exhaustive over edge subsets for n <= 5, then seeded samples up to n = 8.
  auto search = [](const Graph& g) {
    for (Node v = 0; v < g.n(); ++v) {
      NodeMask mask(g.n(), 0);
      mask[v] = 1;
      bool isolates = false;
      for (Node w : g.neighbors(v)) isolates = isolates || g.degree(w) == 1;
      if (isolates && r0(g, mask) > r0(g) + 1e-12) return true;
    }
    return false;
  };
  int found = 0;
  for (Node n = 2; n <= 5; ++n) {
    std::vector<std::pair<Node, Node>> all;
    for (Node i = 0; i < n; ++i) {
      for (Node j = i + 1; j < n; ++j) all.emplace_back(i, j);
    }
    for (std::uint32_t bits = 0; bits < (1u << all.size()); ++bits) {
      std::vector<std::pair<Node, Node>> e;
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (bits >> i & 1u) e.emplace_back(all[i]);
      }
      found += search(t::make_graph(n, e));
    }
  }
  for (int s = 0; s < 200; ++s) found += search(t::gnp(6 + s % 3, 0.3, 77 + s));
  CHECK(found > 0);
}

TEST_CASE("degree_stats examples") {
  SUBCASE("K3") {
    const DegreeStats s = degree_stats(t::complete(3));
    CHECK(s.mean_degree == doctest::Approx(2.0));
    CHECK(s.mean_squared_degree == doctest::Approx(4.0));
    CHECK(s.histogram.size() == 1);
    CHECK(s.histogram.at(2) == doctest::Approx(1.0));
  }
  SUBCASE("P3") {
    const DegreeStats s = degree_stats(t::path(3));
    CHECK(s.mean_degree == doctest::Approx(4.0 / 3.0));
    CHECK(s.mean_squared_degree == doctest::Approx(2.0));
    CHECK(s.histogram.at(1) == doctest::Approx(2.0 / 3.0));
    CHECK(s.histogram.at(2) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("K1,4") {
    const DegreeStats s = degree_stats(t::star(4));
    CHECK(s.mean_degree == doctest::Approx(1.6));
    CHECK(s.mean_squared_degree == doctest::Approx(4.0));
    CHECK(s.histogram.at(1) == doctest::Approx(0.8));
    CHECK(s.histogram.at(4) == doctest::Approx(0.2));
  }
  SUBCASE("empty") { CHECK_THROWS_AS(degree_stats(Graph{}), DomainError); }
}

TEST_CASE("property: hop sets and residual counts") {
  for (int s = 0; s < 60; ++s) {
    const Graph g = t::gnp(3 + s % 10, 0.15 + 0.05 * (s % 8), 300 + s);
    CAPTURE(s);
    const HopPairs e2 = edge_squared(g);
    const std::int64_t n = g.n();
    CHECK(static_cast<std::int64_t>(e2.size()) <= n * (n - 1) / 2);
    for (const Edge& e : g.edges()) {
      const bool present = std::any_of(e2.pairs.begin(), e2.pairs.end(),
                                       [&](const HopPair& p) { return p.u == e.u && p.v == e.v && p.is_edge; });
      CHECK(present);
    }
    for (const HopPair& p : e2.pairs) {
      if (!p.is_edge) CHECK_FALSE(p.common.empty());
    }
    CHECK(count_khop_residual(g, NodeMask{}, 1) == g.m());
    CHECK(count_khop_residual(g, NodeMask{}, 2) == static_cast<std::int64_t>(e2.size()));

    std::mt19937_64 rng(s);
    NodeMask a(g.n(), 0), b(g.n(), 0);
    for (Node v = 0; v < g.n(); ++v) {
      a[v] = rng() % 4 == 0;
      b[v] = a[v] || rng() % 3 == 0;
    }
    for (int k : {1, 2}) {
      CHECK(count_khop_residual(g, a, k) == t::naive_residual(g, a, k));
      CHECK(count_khop_residual(g, b, k) == t::naive_residual(g, b, k));
      CHECK(count_khop_residual(g, b, k) <= count_khop_residual(g, a, k));
    }
  }
}

TEST_CASE("property: density invariant under relabelling") {
  for (int s = 0; s < 20; ++s) {
    const Graph g = t::gnp(10, 0.3, 900 + s);
    std::vector<Node> perm(g.n());
    for (Node v = 0; v < g.n(); ++v) perm[v] = v;
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(s));
    std::vector<std::pair<Node, Node>> e;
    for (const Edge& x : g.edges()) e.emplace_back(perm[x.u], perm[x.v]);
    const Graph h = t::make_graph(g.n(), e);
    CHECK(density(h) == density(g));
    CHECK(r0(h) == doctest::Approx(r0(g)));
  }
}

TEST_CASE("induced_subgraph keeps ids") {
  const Graph g = t::grid3();
  const std::vector<Node> nodes{id(g, "1"), id(g, "2"), id(g, "5")};
  const Graph h = g.induced_subgraph(nodes);
  CHECK(h.n() == 3);
  CHECK(h.m() == 2);
  CHECK(h.external_id(2) == "5");
}
