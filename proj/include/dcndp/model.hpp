#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dcndp/graph.hpp"

namespace dcndp {

/// Integer marks the aggregated model's non-edge x columns: with fractional
/// right-hand sides their integrality is no longer implied by the rows.
enum class VarKind { Binary, Integer, Continuous };
enum class Sense { LessEqual, Equal, GreaterEqual };
enum class Variant { OneHop, TwoHopDisaggregated, TwoHopAggregated };
enum class ConstraintStyle { Disaggregated, Aggregated };

/// How an aggregated neighbourhood row is written: multiplied through by
/// |N(u) ∩ N(v)| (integer data) or with 1/|N(u) ∩ N(v)| coefficients.
enum class AggregateForm { Scaled, Fractional };

/// Which family a row belongs to; used for statistics only.
enum class RowFamily { Edge, Neighborhood, AggregatedNeighborhood, Budget };

std::string to_string(Variant v);

struct Variable {
  std::string name;
  VarKind kind;
  double objective;
  double upper;  // +inf for x
};

struct Term {
  int var;
  double coef;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense;
  double rhs;
  RowFamily family;
};

/// Solver-agnostic minimisation model for 1-DCNDP or 2-DCNDP.
///
/// Variables are declared x-block first (one per pair, in HopPairs order), then
/// y-block (one per node, in id order). x_u_v and y_v use internal ids.
struct MipModel {
  std::vector<Variable> variables;
  std::vector<Constraint> constraints;
  Variant variant = Variant::OneHop;
  bool relaxed = false;
  std::int64_t budget = 0;
  double deletion_cost = 1.0;  // a_v, constant
  double connection_cost = 1.0;  // c_uv, constant

  int num_x = 0;
  int y_offset() const { return num_x; }
  int num_nodes() const { return static_cast<int>(variables.size()) - num_x; }
};

struct ModelStats {
  std::int64_t num_vars = 0;
  std::int64_t num_binary = 0;
  std::int64_t num_constraints = 0;
  std::int64_t num_agg_constraints = 0;
  std::int64_t num_disagg_constraints = 0;
};

/// Edge rows x_uv + y_u + y_v >= 1, budget row sum y <= b, objective sum x.
MipModel build_1dcndp(const Graph& g, std::int64_t budget, bool relax_y = false);

/// hp must come from edge_squared(g). In the aggregated style (unless relaxed)
/// the x of each non-edge pair is an integer in [0, 1].
MipModel build_2dcndp(const Graph& g, const HopPairs& hp, std::int64_t budget, ConstraintStyle style,
                      bool relax_y = false, AggregateForm form = AggregateForm::Scaled);

ModelStats model_stats(const MipModel& model);

/// Throws DomainError when a term references an undeclared variable or names repeat.
void validate(const MipModel& model);

/// Free-format MPS. Binaries are wrapped in INTORG/INTEND markers; rows and
/// columns appear in declaration order.
void write_mps(const MipModel& model, std::ostream& out);

/// Constraint matrix A (rows = constraints, cols = variables).
Eigen::SparseMatrix<double> constraint_matrix(const MipModel& model);

/// Objective coefficient vector.
Eigen::VectorXd objective_vector(const MipModel& model);

/// Bounds, constraints and (optionally) integrality of non-continuous columns within tolerance.
bool is_feasible(const MipModel& model, const Eigen::Ref<const Eigen::VectorXd>& point, double tol = 1e-9,
                 bool require_integral = false);

/// Point (x, y) induced by deleting D: y = 1_D, x_e = 1 iff pair e survives in G - D.
Eigen::VectorXd induced_point(const Graph& g, const HopPairs& hp, std::span<const Node> deleted);

/// Integer optimum of the model by enumerating every y with sum y <= budget and
/// setting each x to the least value its rows allow. Guarded by max_nodes.
struct ModelOptimum {
  double objective;
  NodeSet deleted;
};
ModelOptimum solve_model_by_enumeration(const MipModel& model, int max_nodes = 24);

}  // namespace dcndp
