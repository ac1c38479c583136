#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dcndp/graph.hpp"

namespace dcndp::test {

Graph from_text(std::string_view edge_list);
Graph make_graph(Node n, const std::vector<std::pair<Node, Node>>& edges);

/// 3x3 grid with external ids 1..9 in row-major order (5 is the centre).
Graph grid3();
Graph path(Node n);
Graph cycle(Node n);
Graph complete(Node n);
Graph star(Node leaves);  // hub is node 0
Graph petersen();
Graph gnp(Node n, double p, std::uint64_t seed);
/// G(n, p) plus a random spanning tree, so the result is connected.
Graph connected_gnp(Node n, double p, std::uint64_t seed);

/// Residual pair count from an adjacency matrix; shares no code with the library.
std::int64_t naive_residual(const Graph& g, const NodeMask& deleted, int k);
/// Minimum residual over all D with |D| <= budget avoiding `forbidden`, by bitmask enumeration.
std::int64_t brute_force_optimum(const Graph& g, int k, std::int64_t budget, const NodeMask& forbidden = {});

struct CorpusCase {
  Graph g;
  std::int64_t budget;
  std::uint64_t seed;
};

/// 200 seeded random graphs with 4 <= n <= 12, each with b = 1 and b = ceil(n/5).
std::vector<CorpusCase> theorem_corpus();
/// Seeded connected graphs with 2 <= n <= 8.
std::vector<Graph> connected_corpus();

/// External solver command template, or nullopt when none was configured.
std::optional<std::string> solver_cmd();
std::string source_path(std::string_view rel);
std::string cli_path();
/// Fresh empty directory under the system temp dir.
std::string temp_dir(std::string_view tag);
std::string slurp(const std::string& path);

struct CliRun {
  int exit_code;
  std::string out;
  std::string err;
};
CliRun run_cli(const std::string& args);

}  // namespace dcndp::test
