#include "dcndp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <unordered_set>

#include "dcndp/errors.hpp"

namespace dcndp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string x_name(Node u, Node v) { return "x_" + std::to_string(u) + "_" + std::to_string(v); }
std::string y_name(Node v) { return "y_" + std::to_string(v); }

void declare_variables(MipModel& model, const Graph& g, const HopPairs& hp, bool relax_y) {
  model.variables.reserve(hp.size() + g.n());
  for (const HopPair& p : hp.pairs) {
    model.variables.push_back({x_name(p.u, p.v), VarKind::Continuous, 1.0, kInf});
  }
  model.num_x = static_cast<int>(hp.size());
  for (Node v = 0; v < g.n(); ++v) {
    model.variables.push_back({y_name(v), relax_y ? VarKind::Continuous : VarKind::Binary, 0.0, 1.0});
  }
}

void add_budget_row(MipModel& model, const Graph& g) {
  Constraint row{"budget", {}, Sense::LessEqual, static_cast<double>(model.budget), RowFamily::Budget};
  row.terms.reserve(g.n());
  for (Node v = 0; v < g.n(); ++v) row.terms.push_back({model.y_offset() + v, 1.0});
  model.constraints.push_back(std::move(row));
}

void check_budget(const Graph& g, std::int64_t budget) {
  if (budget < 0 || budget > g.n()) {
    throw DomainError("budget " + std::to_string(budget) + " outside [0, n=" + std::to_string(g.n()) + "]");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::OneHop: return "1dcndp";
    case Variant::TwoHopDisaggregated: return "2dcndp-disagg";
    case Variant::TwoHopAggregated: return "2dcndp-agg";
  }
  return "?";
}

MipModel build_1dcndp(const Graph& g, std::int64_t budget, bool relax_y) {
  check_budget(g, budget);
  MipModel model;
  model.variant = Variant::OneHop;
  model.relaxed = relax_y;
  model.budget = budget;
  const HopPairs hp = edge_pairs(g);
  declare_variables(model, g, hp, relax_y);
  const int y0 = model.y_offset();
  for (std::size_t i = 0; i < hp.size(); ++i) {
    const HopPair& p = hp.pairs[i];
    model.constraints.push_back({"edge_" + std::to_string(p.u) + "_" + std::to_string(p.v),
                                 {{static_cast<int>(i), 1.0}, {y0 + p.u, 1.0}, {y0 + p.v, 1.0}},
                                 Sense::GreaterEqual,
                                 1.0,
                                 RowFamily::Edge});
  }
  add_budget_row(model, g);
  return model;
}

MipModel build_2dcndp(const Graph& g, const HopPairs& hp, std::int64_t budget, ConstraintStyle style,
                      bool relax_y, AggregateForm form) {
  if (hp.k != 2) throw DomainError("2-DCNDP needs HopPairs with k = 2");
  check_budget(g, budget);
  MipModel model;
  model.variant = style == ConstraintStyle::Aggregated ? Variant::TwoHopAggregated : Variant::TwoHopDisaggregated;
  model.relaxed = relax_y;
  model.budget = budget;
  declare_variables(model, g, hp, relax_y);
  const int y0 = model.y_offset();

  for (std::size_t i = 0; i < hp.size(); ++i) {
    const HopPair& p = hp.pairs[i];
    const int x = static_cast<int>(i);
    const std::string tag = std::to_string(p.u) + "_" + std::to_string(p.v);
    if (p.is_edge) {
      model.constraints.push_back(
          {"edge_" + tag, {{x, 1.0}, {y0 + p.u, 1.0}, {y0 + p.v, 1.0}}, Sense::GreaterEqual, 1.0, RowFamily::Edge});
      continue;
    }
    if (p.common.empty()) throw DomainError("two-hop pair without a common neighbour");
    if (style == ConstraintStyle::Disaggregated) {
      for (Node i_mid : p.common) {
        model.constraints.push_back({"nbr_" + tag + "_" + std::to_string(i_mid),
                                     {{x, 1.0}, {y0 + p.u, 1.0}, {y0 + p.v, 1.0}, {y0 + i_mid, 1.0}},
                                     Sense::GreaterEqual,
                                     1.0,
                                     RowFamily::Neighborhood});
      }
      continue;
    }
    // sum_i (1 - y_i)/c - y_u - y_v <= x_uv  <=>  c x + c y_u + c y_v + sum_i y_i >= c
    const double c = static_cast<double>(p.common.size());
    const double scale = form == AggregateForm::Scaled ? c : 1.0;
    const double mid = form == AggregateForm::Scaled ? 1.0 : 1.0 / c;
    if (!relax_y) {
      model.variables[x].kind = VarKind::Integer;
      model.variables[x].upper = 1.0;
    }
    Constraint row{"agg_" + tag, {}, Sense::GreaterEqual, scale, RowFamily::AggregatedNeighborhood};
    row.terms.push_back({x, scale});
    row.terms.push_back({y0 + p.u, scale});
    row.terms.push_back({y0 + p.v, scale});
    for (Node i_mid : p.common) row.terms.push_back({y0 + i_mid, mid});
    model.constraints.push_back(std::move(row));
  }
  add_budget_row(model, g);
  return model;
}

ModelStats model_stats(const MipModel& model) {
  ModelStats s;
  s.num_vars = static_cast<std::int64_t>(model.variables.size());
  s.num_binary = std::count_if(model.variables.begin(), model.variables.end(),
                               [](const Variable& v) { return v.kind == VarKind::Binary; });
  s.num_constraints = static_cast<std::int64_t>(model.constraints.size());
  for (const Constraint& c : model.constraints) {
    if (c.family == RowFamily::AggregatedNeighborhood) ++s.num_agg_constraints;
    if (c.family == RowFamily::Neighborhood) ++s.num_disagg_constraints;
  }
  return s;
}

void validate(const MipModel& model) {
  std::unordered_set<std::string> names;
  for (const Variable& v : model.variables) {
    if (!names.insert(v.name).second) throw DomainError("duplicate variable name " + v.name);
  }
  names.clear();
  const int nvars = static_cast<int>(model.variables.size());
  for (const Constraint& c : model.constraints) {
    if (!names.insert(c.name).second) throw DomainError("duplicate constraint name " + c.name);
    for (const Term& t : c.terms) {
      if (t.var < 0 || t.var >= nvars) throw DomainError("constraint " + c.name + " references unknown variable");
    }
  }
}

void write_mps(const MipModel& model, std::ostream& out) {
  validate(model);
  out << "NAME " << to_string(model.variant) << (model.relaxed ? "-lp" : "") << '\n';
  out << "ROWS\n";
  out << " N OBJ\n";
  for (const Constraint& c : model.constraints) {
    const char* s = c.sense == Sense::LessEqual ? "L" : c.sense == Sense::Equal ? "E" : "G";
    out << ' ' << s << ' ' << c.name << '\n';
  }

  // Column-major view of the rows, in declaration order.
  std::vector<std::vector<std::pair<int, double>>> columns(model.variables.size());
  for (std::size_t r = 0; r < model.constraints.size(); ++r) {
    for (const Term& t : model.constraints[r].terms) columns[t.var].emplace_back(static_cast<int>(r), t.coef);
  }

  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (std::size_t j = 0; j < model.variables.size(); ++j) {
    const Variable& var = model.variables[j];
    const bool is_int = var.kind != VarKind::Continuous;
    if (is_int != in_int) {
      out << " MARKER" << marker++ << " 'MARKER' " << (is_int ? "'INTORG'" : "'INTEND'") << '\n';
      in_int = is_int;
    }
    if (var.objective != 0.0) out << ' ' << var.name << " OBJ " << fmt(var.objective) << '\n';
    for (auto [row, coef] : columns[j]) {
      out << ' ' << var.name << ' ' << model.constraints[row].name << ' ' << fmt(coef) << '\n';
    }
    if (var.objective == 0.0 && columns[j].empty()) out << ' ' << var.name << " OBJ 0\n";
  }
  if (in_int) out << " MARKER" << marker++ << " 'MARKER' 'INTEND'\n";

  out << "RHS\n";
  for (const Constraint& c : model.constraints) {
    if (c.rhs != 0.0) out << " RHS " << c.name << ' ' << fmt(c.rhs) << '\n';
  }
  out << "BOUNDS\n";
  for (const Variable& var : model.variables) {
    if (std::isfinite(var.upper)) out << " UP BND " << var.name << ' ' << fmt(var.upper) << '\n';
  }
  out << "ENDATA\n";
  if (!out) throw Error("failed writing MPS output");
}

Eigen::SparseMatrix<double> constraint_matrix(const MipModel& model) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < model.constraints.size(); ++r) {
    for (const Term& t : model.constraints[r].terms) triplets.emplace_back(static_cast<int>(r), t.var, t.coef);
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(model.constraints.size()),
                                static_cast<Eigen::Index>(model.variables.size()));
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Eigen::VectorXd objective_vector(const MipModel& model) {
  Eigen::VectorXd c(model.variables.size());
  for (std::size_t j = 0; j < model.variables.size(); ++j) c[j] = model.variables[j].objective;
  return c;
}

bool is_feasible(const MipModel& model, const Eigen::Ref<const Eigen::VectorXd>& point, double tol,
                 bool require_integral) {
  if (point.size() != static_cast<Eigen::Index>(model.variables.size())) return false;
  for (std::size_t j = 0; j < model.variables.size(); ++j) {
    const double v = point[j];
    if (v < -tol || v > model.variables[j].upper + tol) return false;
    if (require_integral && model.variables[j].kind != VarKind::Continuous && std::abs(v - std::round(v)) > tol) {
      return false;
    }
  }
  const Eigen::VectorXd lhs = constraint_matrix(model) * point;
  for (std::size_t r = 0; r < model.constraints.size(); ++r) {
    const Constraint& c = model.constraints[r];
    const double slack = lhs[r] - c.rhs;
    if (c.sense == Sense::GreaterEqual && slack < -tol) return false;
    if (c.sense == Sense::LessEqual && slack > tol) return false;
    if (c.sense == Sense::Equal && std::abs(slack) > tol) return false;
  }
  return true;
}

Eigen::VectorXd induced_point(const Graph& g, const HopPairs& hp, std::span<const Node> deleted) {
  const NodeMask mask = make_mask(g, deleted);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hp.size()) + g.n());
  for (std::size_t i = 0; i < hp.size(); ++i) {
    const HopPair& p = hp.pairs[i];
    bool alive = !mask[p.u] && !mask[p.v];
    if (alive && !p.is_edge) {
      alive = std::any_of(p.common.begin(), p.common.end(), [&](Node w) { return !mask[w]; });
    }
    z[static_cast<Eigen::Index>(i)] = alive ? 1.0 : 0.0;
  }
  for (Node v = 0; v < g.n(); ++v) z[static_cast<Eigen::Index>(hp.size()) + v] = mask[v] ? 1.0 : 0.0;
  return z;
}

ModelOptimum solve_model_by_enumeration(const MipModel& model, int max_nodes) {
  const int ny = model.num_nodes();
  if (ny > max_nodes) throw SizeGuardError("model enumeration refused: " + std::to_string(ny) + " nodes");
  const int y0 = model.y_offset();

  // Budget row read from the model itself.
  double budget = kInf;
  for (const Constraint& c : model.constraints) {
    if (c.family == RowFamily::Budget) budget = std::min(budget, c.rhs);
  }
  const int b = static_cast<int>(std::min<double>(std::floor(budget + 1e-9), ny));

  // Each covering row has exactly one x column; x_j >= (rhs - y part) / coef_x.
  struct Row {
    int x;
    double coef_x;
    double rhs;
    std::vector<Term> y_terms;
  };
  std::vector<Row> rows;
  for (const Constraint& c : model.constraints) {
    if (c.family == RowFamily::Budget) continue;
    if (c.sense != Sense::GreaterEqual) throw DomainError("unexpected row sense in " + c.name);
    Row row{-1, 0.0, c.rhs, {}};
    for (const Term& t : c.terms) {
      if (t.var < y0) {
        if (row.x != -1) throw DomainError("row " + c.name + " has two x columns");
        row.x = t.var;
        row.coef_x = t.coef;
      } else {
        row.y_terms.push_back({t.var - y0, t.coef});
      }
    }
    if (row.x == -1 || row.coef_x <= 0.0) throw DomainError("row " + c.name + " has no x column");
    rows.push_back(std::move(row));
  }

  std::vector<double> y(ny, 0.0);
  std::vector<double> x(model.num_x, 0.0);
  auto evaluate = [&]() {
    std::fill(x.begin(), x.end(), 0.0);
    for (const Row& r : rows) {
      double rest = r.rhs;
      for (const Term& t : r.y_terms) rest -= t.coef * y[t.var];
      double need = rest / r.coef_x;
      if (model.variables[r.x].kind == VarKind::Integer) need = std::ceil(need - 1e-9);
      if (need > 1e-9) x[r.x] = std::max(x[r.x], need);
    }
    double obj = 0.0;
    for (int j = 0; j < model.num_x; ++j) obj += model.variables[j].objective * x[j];
    return obj;
  };

  ModelOptimum best{kInf, {}};
  NodeSet current;
  // Lexicographic DFS over sorted subsets of size <= b.
  auto visit = [&](auto&& self, int start) -> void {
    const double obj = evaluate();
    if (obj < best.objective - 1e-9) best = {obj, current};
    if (static_cast<int>(current.size()) == b) return;
    for (int v = start; v < ny; ++v) {
      current.push_back(v);
      y[v] = 1.0;
      self(self, v + 1);
      y[v] = 0.0;
      current.pop_back();
    }
  };
  visit(visit, 0);
  return best;
}

}  // namespace dcndp
