#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dcndp/graph.hpp"

namespace dcndp {

enum class Provenance { Oracle, BranchAndBound, Greedy, External };

std::string to_string(Provenance p);

struct DcndpSolution {
  NodeSet deleted;
  std::int64_t objective = 0;  // residual <=k-hop pair count
  double lower_bound = 0.0;
  double gap_percent = 0.0;
  Provenance provenance = Provenance::Oracle;
  double wall_time = 0.0;  // seconds
  int k = 1;
  std::int64_t budget = 0;
  /// LP solves carry a bound but no deletion set.
  bool bound_only = false;
  std::optional<double> reported_objective;
};

/// Optimality gap in percent; 0 when objective is 0, 100 when bound <= 0 < objective.
/// Throws ConsistencyError when bound exceeds objective by more than tol.
double opt_gap(double objective, double bound, double tol = 1e-6);

/// b = floor(fraction * n).
std::int64_t budget_from_fraction(double fraction, std::int64_t n);

struct OracleOptions {
  int max_nodes = 24;
  /// Nodes that may not be deleted (mask over internal ids); empty = none.
  NodeMask forbidden;
};

/// Exhaustive enumeration of every D with |D| <= budget; returns the
/// lexicographically smallest optimal D.
DcndpSolution solve_oracle(const Graph& g, int k, std::int64_t budget, const OracleOptions& opts = {});

struct BnbOptions {
  double time_limit = std::numeric_limits<double>::infinity();  // seconds
  std::int64_t node_limit = std::numeric_limits<std::int64_t>::max();
  NodeMask forbidden;
};

/// Depth-first branch and bound on y_v in descending-degree order, seeded with
/// the greedy incumbent. Exact (gap 0) when the search completes.
DcndpSolution solve_bnb(const Graph& g, int k, std::int64_t budget, const BnbOptions& opts = {});

/// Repeatedly deletes the node with largest marginal decrease (ties: smaller id)
/// until the budget is spent or no deletion helps.
DcndpSolution solve_greedy(const Graph& g, int k, std::int64_t budget, const NodeMask& forbidden = {});

/// Marginal decrease in residual <=k-hop pairs for deleting each node of G - deleted
/// (0 for deleted nodes).
std::vector<std::int64_t> marginal_gains(const Graph& g, const NodeMask& deleted, int k);

struct FixOptions {
  bool fix_simplicial = false;
  /// When fixing would leave fewer than `budget` free nodes, the simplicial part is skipped.
  std::int64_t budget = 0;
};

/// Nodes that some optimal D avoids: isolated nodes always; with fix_simplicial
/// also simplicial nodes that have no twin (another node with the same closed
/// neighbourhood).
NodeSet preprocess_fix(const Graph& g, int k, const FixOptions& opts = {});

bool is_simplicial(const Graph& g, Node v);

struct ExternalSolveRequest {
  std::string mps_path;
  /// Command template with {mps}, {sol} and {timelimit} placeholders.
  std::string solver_cmd;
  double time_limit = 3600.0;
  int k = 1;
  std::int64_t budget = 0;
  bool relaxed = false;
  /// Where the solver writes its solution; a temporary path when empty.
  std::string solution_path;
};

/// Parsed "name value" solution file. Comment lines "# Objective value = v" and
/// "# Bound = v" populate the optional fields.
struct SolutionFile {
  std::vector<std::pair<std::string, double>> values;
  std::optional<double> objective;
  std::optional<double> bound;
};

SolutionFile parse_solution_file(std::istream& in);

/// Runs an external MIP/LP solver on an MPS file built from g and reads back D.
DcndpSolution external_solve(const Graph& g, const ExternalSolveRequest& req);

/// Recomputes objective from the deleted set and checks |D| <= budget.
bool audit(const Graph& g, const DcndpSolution& s);

/// {"k", "budget", "objective", "lower_bound", "gap_percent", "provenance",
/// "bound_only", "deleted": [external ids], "wall_time"?}. Timing is optional
/// so that reproducible artifacts can omit it.
void write_solution_json(const Graph& g, const DcndpSolution& s, std::ostream& out, bool include_timing = true);
DcndpSolution read_solution_json(const Graph& g, std::istream& in);

}  // namespace dcndp
