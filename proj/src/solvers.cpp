#include "dcndp/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "dcndp/errors.hpp"
#include "text_util.hpp"

namespace dcndp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_k(int k) {
  if (k != 1 && k != 2) throw DomainError("hop parameter must be 1 or 2");
}

void check_budget(std::int64_t budget) {
  if (budget < 0) throw DomainError("budget must be nonnegative");
}

NodeMask normalized(const Graph& g, const NodeMask& forbidden) {
  if (forbidden.empty()) return NodeMask(g.n(), 0);
  if (forbidden.size() != static_cast<std::size_t>(g.n())) throw DomainError("forbidden mask size does not match n");
  return forbidden;
}

NodeSet mask_to_set(const NodeMask& mask) {
  NodeSet s;
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (mask[v]) s.push_back(static_cast<Node>(v));
  }
  return s;
}

/// Upper bound on the pairs destroyed by deleting v from G - deleted: pairs
/// containing v plus non-adjacent neighbour pairs that route through v.
std::vector<std::int64_t> cover_counts(const Graph& g, const NodeMask& deleted, int k) {
  const Node n = g.n();
  std::vector<std::int64_t> cover(n, 0);
  if (k == 1) {
    for (const Edge& e : g.edges()) {
      if (!deleted[e.u] && !deleted[e.v]) {
        ++cover[e.u];
        ++cover[e.v];
      }
    }
    return cover;
  }
  std::vector<Node> mark(n, -1);
  for (Node u = 0; u < n; ++u) {
    if (deleted[u]) continue;
    std::int64_t alive_deg = 0;
    std::int64_t nbr_edges = 0;  // edges among alive neighbours, counted twice
    for (Node w : g.neighbors(u)) {
      if (!deleted[w]) {
        mark[w] = u;
        ++alive_deg;
      }
    }
    for (Node w : g.neighbors(u)) {
      if (deleted[w]) continue;
      for (Node x : g.neighbors(w)) {
        if (!deleted[x] && mark[x] == u) ++nbr_edges;
      }
    }
    cover[u] += alive_deg * (alive_deg - 1) / 2 - nbr_edges / 2;
  }
  // Ball sizes: every pair {u, x} at distance <= 2 credits both ends.
  std::fill(mark.begin(), mark.end(), -1);
  for (Node u = 0; u < n; ++u) {
    if (deleted[u]) continue;
    for (Node w : g.neighbors(u)) {
      if (deleted[w]) continue;
      if (w > u && mark[w] != u) {
        mark[w] = u;
        ++cover[u];
        ++cover[w];
      }
      for (Node x : g.neighbors(w)) {
        if (x > u && !deleted[x] && mark[x] != u) {
          mark[x] = u;
          ++cover[u];
          ++cover[x];
        }
      }
    }
  }
  return cover;
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Oracle: return "oracle";
    case Provenance::BranchAndBound: return "bnb";
    case Provenance::Greedy: return "greedy";
    case Provenance::External: return "external";
  }
  return "?";
}

double opt_gap(double objective, double bound, double tol) {
  if (bound > objective + tol) {
    throw ConsistencyError("bound " + std::to_string(bound) + " exceeds objective " + std::to_string(objective));
  }
  if (objective <= 0.0) return 0.0;
  if (bound <= 0.0) return 100.0;
  return std::max(0.0, 100.0 * (objective - bound) / objective);
}

std::int64_t budget_from_fraction(double fraction, std::int64_t n) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("budget fraction must lie in (0, 1]");
  // Guard against 0.2 * 10 = 1.9999999999999998-style truncation.
  return static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

bool audit(const Graph& g, const DcndpSolution& s) {
  if (s.bound_only) return true;
  if (static_cast<std::int64_t>(s.deleted.size()) > s.budget) return false;
  return count_khop_residual(g, s.deleted, s.k) == s.objective;
}

// ---------------------------------------------------------------------------
// Oracle

DcndpSolution solve_oracle(const Graph& g, int k, std::int64_t budget, const OracleOptions& opts) {
  check_k(k);
  check_budget(budget);
  if (g.n() > opts.max_nodes) {
    throw SizeGuardError("oracle refuses n=" + std::to_string(g.n()) + " (limit " + std::to_string(opts.max_nodes) +
                         ")");
  }
  const auto start = Clock::now();
  const NodeMask forbidden = normalized(g, opts.forbidden);
  const Node n = g.n();
  const int b = static_cast<int>(std::min<std::int64_t>(budget, n));

  NodeMask mask(n, 0);
  NodeSet current;
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  NodeSet best_set;
  auto visit = [&](auto&& self, Node from) -> void {
    const std::int64_t obj = count_khop_residual(g, mask, k);
    if (obj < best) {
      best = obj;
      best_set = current;
    }
    if (static_cast<int>(current.size()) == b || best == 0) return;
    for (Node v = from; v < n; ++v) {
      if (forbidden[v]) continue;
      mask[v] = 1;
      current.push_back(v);
      self(self, v + 1);
      current.pop_back();
      mask[v] = 0;
    }
  };
  visit(visit, 0);

  DcndpSolution s;
  s.deleted = std::move(best_set);
  s.objective = best;
  s.lower_bound = static_cast<double>(best);
  s.gap_percent = 0.0;
  s.provenance = Provenance::Oracle;
  s.k = k;
  s.budget = budget;
  s.wall_time = seconds_since(start);
  return s;
}

// ---------------------------------------------------------------------------
// Greedy

std::vector<std::int64_t> marginal_gains(const Graph& g, const NodeMask& deleted, int k) {
  check_k(k);
  const Node n = g.n();
  std::vector<std::int64_t> gain(n, 0);
  if (k == 1) {
    for (const Edge& e : g.edges()) {
      if (!deleted[e.u] && !deleted[e.v]) {
        ++gain[e.u];
        ++gain[e.v];
      }
    }
    return gain;
  }
  std::vector<Node> adj_mark(n, -1);
  std::vector<Node> seen(n, -1);
  std::vector<int> mids(n, 0);
  std::vector<Node> last_mid(n, -1);
  std::vector<Node> touched;
  for (Node u = 0; u < n; ++u) {
    if (deleted[u]) continue;
    for (Node w : g.neighbors(u)) {
      if (!deleted[w]) adj_mark[w] = u;
    }
    touched.clear();
    for (Node w : g.neighbors(u)) {
      if (deleted[w]) continue;
      if (w > u) {
        ++gain[u];
        ++gain[w];
      }
      for (Node x : g.neighbors(w)) {
        if (x <= u || deleted[x] || adj_mark[x] == u) continue;
        if (seen[x] != u) {
          seen[x] = u;
          mids[x] = 0;
          touched.push_back(x);
        }
        ++mids[x];
        last_mid[x] = w;
      }
    }
    for (Node x : touched) {
      ++gain[u];
      ++gain[x];
      if (mids[x] == 1) ++gain[last_mid[x]];
    }
  }
  return gain;
}

DcndpSolution solve_greedy(const Graph& g, int k, std::int64_t budget, const NodeMask& forbidden_in) {
  check_k(k);
  check_budget(budget);
  const auto start = Clock::now();
  const NodeMask forbidden = normalized(g, forbidden_in);
  NodeMask mask(g.n(), 0);
  for (std::int64_t round = 0; round < budget; ++round) {
    auto gain = marginal_gains(g, mask, k);
    Node pick = -1;
    std::int64_t best = 0;
    for (Node v = 0; v < g.n(); ++v) {
      if (mask[v] || forbidden[v]) continue;
      if (gain[v] > best) {
        best = gain[v];
        pick = v;
      }
    }
    if (pick < 0) break;
    mask[pick] = 1;
  }
  DcndpSolution s;
  s.deleted = mask_to_set(mask);
  s.objective = count_khop_residual(g, mask, k);
  s.lower_bound = 0.0;
  s.gap_percent = opt_gap(static_cast<double>(s.objective), 0.0);
  s.provenance = Provenance::Greedy;
  s.k = k;
  s.budget = budget;
  s.wall_time = seconds_since(start);
  return s;
}

// ---------------------------------------------------------------------------
// Branch and bound

DcndpSolution solve_bnb(const Graph& g, int k, std::int64_t budget, const BnbOptions& opts) {
  check_k(k);
  check_budget(budget);
  const auto start = Clock::now();
  const NodeMask forbidden = normalized(g, opts.forbidden);

  DcndpSolution incumbent = solve_greedy(g, k, budget, forbidden);
  std::int64_t best = incumbent.objective;
  NodeSet best_set = incumbent.deleted;

  std::vector<Node> order;
  for (Node v = 0; v < g.n(); ++v) {
    if (!forbidden[v] && g.degree(v) > 0) order.push_back(v);
  }
  std::stable_sort(order.begin(), order.end(), [&](Node a, Node b) { return g.degree(a) > g.degree(b); });

  NodeMask mask(g.n(), 0);
  std::int64_t nodes = 0;
  bool aborted = false;
  double open_bound = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> top;

  // Returns after exploring (or abandoning) the subtree rooted at position i.
  auto search = [&](auto&& self, std::size_t i, std::int64_t remaining) -> void {
    if (aborted) return;
    ++nodes;
    if (nodes > opts.node_limit || ((nodes & 63) == 0 && seconds_since(start) > opts.time_limit)) {
      aborted = true;
    }
    const std::int64_t residual = count_khop_residual(g, mask, k);
    if (residual < best) {
      best = residual;
      best_set = mask_to_set(mask);
    }
    if (remaining == 0 || i == order.size() || best == 0) return;

    auto cover = cover_counts(g, mask, k);
    top.clear();
    for (std::size_t j = i; j < order.size(); ++j) top.push_back(cover[order[j]]);
    const auto r = std::min<std::size_t>(static_cast<std::size_t>(remaining), top.size());
    std::partial_sort(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(r), top.end(), std::greater<>());
    const std::int64_t reach = std::accumulate(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(r),
                                               std::int64_t{0});
    const std::int64_t lb = std::max<std::int64_t>(0, residual - reach);
    if (aborted) {
      open_bound = std::min(open_bound, static_cast<double>(lb));
      return;
    }
    if (lb >= best) return;

    const Node v = order[i];
    mask[v] = 1;
    self(self, i + 1, remaining - 1);
    mask[v] = 0;
    if (aborted) {
      open_bound = std::min(open_bound, static_cast<double>(lb));
      return;
    }
    self(self, i + 1, remaining);
    if (aborted) open_bound = std::min(open_bound, static_cast<double>(lb));
  };
  search(search, 0, std::min<std::int64_t>(budget, static_cast<std::int64_t>(order.size())));

  DcndpSolution s;
  s.deleted = std::move(best_set);
  s.objective = best;
  s.lower_bound = aborted ? std::min(open_bound, static_cast<double>(best)) : static_cast<double>(best);
  s.gap_percent = opt_gap(static_cast<double>(s.objective), s.lower_bound);
  s.provenance = Provenance::BranchAndBound;
  s.k = k;
  s.budget = budget;
  s.wall_time = seconds_since(start);
  return s;
}

// ---------------------------------------------------------------------------
// Preprocessing

bool is_simplicial(const Graph& g, Node v) {
  auto nb = g.neighbors(v);
  for (std::size_t a = 0; a < nb.size(); ++a) {
    for (std::size_t b = a + 1; b < nb.size(); ++b) {
      if (!g.has_edge(nb[a], nb[b])) return false;
    }
  }
  return true;
}

namespace {

bool same_closed_neighborhood(const Graph& g, Node a, Node b) {
  if (g.degree(a) != g.degree(b)) return false;
  // N[a] = N(a) + a, both sorted; compare as merged sets.
  std::vector<Node> na(g.neighbors(a).begin(), g.neighbors(a).end());
  std::vector<Node> nb(g.neighbors(b).begin(), g.neighbors(b).end());
  na.insert(std::lower_bound(na.begin(), na.end(), a), a);
  nb.insert(std::lower_bound(nb.begin(), nb.end(), b), b);
  return na == nb;
}

}  // namespace

NodeSet preprocess_fix(const Graph& g, int k, const FixOptions& opts) {
  check_k(k);
  NodeSet isolated;
  for (Node v = 0; v < g.n(); ++v) {
    if (g.degree(v) == 0) isolated.push_back(v);
  }
  if (!opts.fix_simplicial) return isolated;

  NodeMask fixed(g.n(), 0);
  for (Node v : isolated) fixed[v] = 1;
  for (Node v = 0; v < g.n(); ++v) {
    if (g.degree(v) == 0 || !is_simplicial(g, v)) continue;
    // Twins of a simplicial node are necessarily adjacent to it.
    bool has_twin = false;
    for (Node w : g.neighbors(v)) {
      if (same_closed_neighborhood(g, v, w)) {
        has_twin = true;
        break;
      }
    }
    if (!has_twin) fixed[v] = 1;
  }
  const auto free_nodes = std::count(fixed.begin(), fixed.end(), std::uint8_t{0});
  if (free_nodes < opts.budget) return isolated;
  return mask_to_set(fixed);
}

// ---------------------------------------------------------------------------
// External solvers

SolutionFile parse_solution_file(std::istream& in) {
  SolutionFile sol;
  std::string line;
  std::size_t lineno = 0;
  auto after_equals = [](std::string_view text) -> std::optional<double> {
    auto pos = text.find('=');
    if (pos == std::string_view::npos) return std::nullopt;
    return detail::parse_double(detail::trim(text.substr(pos + 1)));
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      std::string lower(t);
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      if (lower.find("objective") != std::string::npos) {
        if (auto v = after_equals(t)) sol.objective = *v;
      } else if (lower.find("bound") != std::string::npos) {
        if (auto v = after_equals(t)) sol.bound = *v;
      }
      continue;
    }
    auto tokens = detail::split_edge_line(t);
    if (tokens.size() != 2) throw FormatError("solution line " + std::to_string(lineno) + ": expected 'name value'");
    auto value = detail::parse_double(tokens[1]);
    if (!value) throw FormatError("solution line " + std::to_string(lineno) + ": bad value '" + tokens[1] + "'");
    sol.values.emplace_back(tokens[0], *value);
  }
  return sol;
}

namespace {

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = text.find(from, pos)) != std::string::npos; pos += to.size()) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

std::filesystem::path unique_temp(const std::string& stem) {
  static std::atomic<int> counter{0};
  auto name = stem + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

DcndpSolution external_solve(const Graph& g, const ExternalSolveRequest& req) {
  check_k(req.k);
  for (const char* ph : {"{mps}", "{sol}"}) {
    if (req.solver_cmd.find(ph) == std::string::npos) {
      throw ConfigError(std::string("solver command lacks placeholder ") + ph);
    }
  }
  const auto start = Clock::now();
  const std::filesystem::path sol_path =
      req.solution_path.empty() ? unique_temp("dcndp-sol") : std::filesystem::path(req.solution_path);
  const std::filesystem::path log_path = unique_temp("dcndp-log");
  std::string cmd = replace_all(req.solver_cmd, "{mps}", req.mps_path);
  cmd = replace_all(cmd, "{sol}", sol_path.string());
  cmd = replace_all(cmd, "{timelimit}", detail::format_double(req.time_limit));
  const int status = std::system((cmd + " > " + log_path.string() + " 2>&1").c_str());

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  if (status != 0) {
    std::string log = slurp(log_path);
    std::filesystem::remove(log_path);
    throw SolverError("solver exited with status " + std::to_string(status) + ": " + log);
  }
  std::filesystem::remove(log_path);

  std::ifstream in(sol_path);
  if (!in) throw FormatError("solver wrote no solution file at " + sol_path.string());
  SolutionFile file = parse_solution_file(in);
  in.close();
  if (req.solution_path.empty()) std::filesystem::remove(sol_path);

  std::vector<double> y(g.n(), -1.0);
  double x_sum = 0.0;
  for (const auto& [name, value] : file.values) {
    if (name.rfind("y_", 0) == 0) {
      auto id = detail::parse_int(std::string_view(name).substr(2));
      if (!id || *id < 0 || *id >= g.n()) throw FormatError("unknown variable " + name);
      y[*id] = value;
    } else if (name.rfind("x_", 0) == 0) {
      x_sum += value;
    }
  }

  DcndpSolution s;
  s.provenance = Provenance::External;
  s.k = req.k;
  s.budget = req.budget;
  s.reported_objective = file.objective;
  if (req.relaxed) {
    s.bound_only = true;
    s.lower_bound = file.objective.value_or(x_sum);
    s.objective = 0;
    s.gap_percent = 0.0;
    s.wall_time = seconds_since(start);
    return s;
  }
  NodeMask mask(g.n(), 0);
  for (Node v = 0; v < g.n(); ++v) {
    if (y[v] < 0.0) throw FormatError("solution lacks y_" + std::to_string(v));
    mask[v] = y[v] >= 0.5 ? 1 : 0;
  }
  s.deleted = mask_to_set(mask);
  if (static_cast<std::int64_t>(s.deleted.size()) > req.budget) {
    throw FormatError("solution deletes more nodes than the budget allows");
  }
  s.objective = count_khop_residual(g, mask, req.k);
  const double obj = static_cast<double>(s.objective);
  const double bound = file.bound ? *file.bound : file.objective ? *file.objective : 0.0;
  s.gap_percent = opt_gap(obj, bound);
  // MIP bounds on integer objectives may carry tiny float error.
  s.lower_bound = std::clamp(bound, 0.0, obj);
  s.wall_time = seconds_since(start);
  return s;
}

void write_solution_json(const Graph& g, const DcndpSolution& s, std::ostream& out, bool include_timing) {
  nlohmann::ordered_json j;
  j["k"] = s.k;
  j["budget"] = s.budget;
  j["objective"] = s.objective;
  j["lower_bound"] = s.lower_bound;
  j["gap_percent"] = s.gap_percent;
  j["provenance"] = to_string(s.provenance);
  j["bound_only"] = s.bound_only;
  if (s.reported_objective) j["reported_objective"] = *s.reported_objective;
  nlohmann::json ids = nlohmann::json::array();
  for (Node v : s.deleted) ids.push_back(g.external_id(v));
  j["deleted"] = std::move(ids);
  if (include_timing) j["wall_time"] = s.wall_time;
  out << j.dump(1) << '\n';
}

DcndpSolution read_solution_json(const Graph& g, std::istream& in) {
  DcndpSolution s;
  try {
    nlohmann::json j;
    in >> j;
    s.k = j.at("k").get<int>();
    s.budget = j.at("budget").get<std::int64_t>();
    s.objective = j.value("objective", std::int64_t{0});
    s.lower_bound = j.value("lower_bound", 0.0);
    s.gap_percent = j.value("gap_percent", 0.0);
    s.bound_only = j.value("bound_only", false);
    s.wall_time = j.value("wall_time", 0.0);
    const std::string prov = j.value("provenance", std::string("oracle"));
    bool known = false;
    for (Provenance p : {Provenance::Oracle, Provenance::BranchAndBound, Provenance::Greedy, Provenance::External}) {
      if (to_string(p) == prov) {
        s.provenance = p;
        known = true;
      }
    }
    if (!known) throw FormatError("unknown provenance '" + prov + "'");
    if (j.contains("reported_objective")) s.reported_objective = j["reported_objective"].get<double>();
    for (const auto& id : j.at("deleted")) {
      const auto v = g.find(id.is_string() ? id.get<std::string>() : id.dump());
      if (!v) throw JoinError("solution references unknown node " + id.dump());
      s.deleted.push_back(*v);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("solution JSON: ") + e.what());
  }
  std::sort(s.deleted.begin(), s.deleted.end());
  s.deleted.erase(std::unique(s.deleted.begin(), s.deleted.end()), s.deleted.end());
  return s;
}

}  // namespace dcndp
