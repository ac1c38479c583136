#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

namespace dcndp::test {

namespace fs = std::filesystem;

Graph from_text(std::string_view edge_list) {
  std::istringstream in{std::string(edge_list)};
  return load_graph(in);
}

Graph make_graph(Node n, const std::vector<std::pair<Node, Node>>& edges) {
  return Graph::from_edges(n, std::span<const std::pair<Node, Node>>(edges));
}

Graph grid3() {
  return from_text("1 2\n2 3\n4 5\n5 6\n7 8\n8 9\n1 4\n4 7\n2 5\n5 8\n3 6\n6 9\n");
}

Graph path(Node n) {
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return make_graph(n, e);
}

Graph cycle(Node n) {
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return make_graph(n, e);
}

Graph complete(Node n) {
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 0; i < n; ++i) {
    for (Node j = i + 1; j < n; ++j) e.emplace_back(i, j);
  }
  return make_graph(n, e);
}

Graph star(Node leaves) {
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return make_graph(leaves + 1, e);
}

Graph petersen() {
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 0; i < 5; ++i) {
    e.emplace_back(i, (i + 1) % 5);
    e.emplace_back(i, i + 5);
    e.emplace_back(5 + i, 5 + (i + 2) % 5);
  }
  return make_graph(10, e);
}

Graph gnp(Node n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 0; i < n; ++i) {
    for (Node j = i + 1; j < n; ++j) {
      if (coin(rng)) e.emplace_back(i, j);
    }
  }
  return make_graph(n, e);
}

Graph connected_gnp(Node n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<std::pair<Node, Node>> e;
  for (Node i = 1; i < n; ++i) {
    e.emplace_back(std::uniform_int_distribution<Node>(0, i - 1)(rng), i);
  }
  for (Node i = 0; i < n; ++i) {
    for (Node j = i + 1; j < n; ++j) {
      if (coin(rng)) e.emplace_back(i, j);
    }
  }
  return make_graph(n, e);
}

std::int64_t naive_residual(const Graph& g, const NodeMask& deleted, int k) {
  const Node n = g.n();
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (const Edge& e : g.edges()) adj[e.u][e.v] = adj[e.v][e.u] = 1;
  auto alive = [&](Node v) { return deleted.empty() || !deleted[v]; };
  std::int64_t count = 0;
  for (Node u = 0; u < n; ++u) {
    if (!alive(u)) continue;
    for (Node v = u + 1; v < n; ++v) {
      if (!alive(v)) continue;
      bool close = adj[u][v];
      for (Node w = 0; !close && k == 2 && w < n; ++w) close = alive(w) && adj[u][w] && adj[w][v];
      count += close;
    }
  }
  return count;
}

std::int64_t brute_force_optimum(const Graph& g, int k, std::int64_t budget, const NodeMask& forbidden) {
  const Node n = g.n();
  std::int64_t best = naive_residual(g, {}, k);
  for (std::uint32_t bits = 1; bits < (1u << n); ++bits) {
    if (std::popcount(bits) > budget) continue;
    NodeMask mask(n, 0);
    bool ok = true;
    for (Node v = 0; v < n; ++v) {
      if (bits >> v & 1u) {
        mask[v] = 1;
        if (!forbidden.empty() && forbidden[v]) ok = false;
      }
    }
    if (ok) best = std::min(best, naive_residual(g, mask, k));
  }
  return best;
}

std::vector<CorpusCase> theorem_corpus() {
  std::vector<CorpusCase> out;
  const double densities[] = {0.2, 0.3, 0.45, 0.6};
  for (int i = 0; i < 200; ++i) {
    const Node n = 4 + i % 9;
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(i);
    const Graph g = gnp(n, densities[i % 4], seed);
    out.push_back({g, 1, seed});
    out.push_back({g, (n + 4) / 5, seed});
  }
  return out;
}

std::vector<Graph> connected_corpus() {
  std::vector<Graph> out;
  const double densities[] = {0.0, 0.25, 0.5, 0.8};
  for (int i = 0; i < 60; ++i) {
    const Node n = 2 + i % 7;
    out.push_back(connected_gnp(n, densities[i % 4], 500 + static_cast<std::uint64_t>(i)));
  }
  out.push_back(complete(4));
  out.push_back(cycle(8));
  out.push_back(star(7));
  return out;
}

std::optional<std::string> solver_cmd() {
  const std::string cmd = DCNDP_TEST_SOLVER_CMD;
  if (cmd.empty()) return std::nullopt;
  return cmd;
}

std::string source_path(std::string_view rel) { return (fs::path(DCNDP_SOURCE_DIR) / rel).string(); }

std::string cli_path() { return DCNDP_CLI_PATH; }

std::string temp_dir(std::string_view tag) {
  static std::atomic<int> counter{0};
  const fs::path dir = fs::temp_directory_path() / ("dcndp-test-" + std::string(tag) + "-" +
                                                    std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun run_cli(const std::string& args) {
  const std::string dir = temp_dir("cli");
  const std::string out = dir + "/stdout", err = dir + "/stderr";
  const std::string cmd = cli_path() + " " + args + " > " + out + " 2> " + err;
  const int status = std::system(cmd.c_str());
  CliRun r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  fs::remove_all(dir);
  return r;
}

}  // namespace dcndp::test
