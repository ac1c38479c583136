#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dcndp/graph.hpp"
#include "dcndp/rational.hpp"

namespace dcndp {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Rank by Gaussian elimination with the first nonzero entry as pivot. Exact for
/// exact scalars; no tolerance is applied.
template <typename Scalar>
Eigen::Index exact_rank(DenseMatrix<Scalar> a) {
  const Eigen::Index rows = a.rows(), cols = a.cols();
  Eigen::Index rank = 0;
  for (Eigen::Index c = 0; c < cols && rank < rows; ++c) {
    Eigen::Index pivot = -1;
    for (Eigen::Index r = rank; r < rows; ++r) {
      if (a(r, c) != Scalar(0)) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) continue;
    a.row(pivot).swap(a.row(rank));
    for (Eigen::Index r = rank + 1; r < rows; ++r) {
      if (a(r, c) == Scalar(0)) continue;
      const Scalar factor = a(r, c) / a(rank, c);
      a.row(r) -= factor * a.row(rank);
    }
    ++rank;
  }
  return rank;
}

/// Inequality a point family certifies (or full dimension).
struct FamilyTarget {
  enum class Kind { FullDimension, XNonnegative, YNonnegative, YAtMostOne, EdgeCover };
  Kind kind = Kind::FullDimension;
  /// Edge index into g.edges() for XNonnegative / EdgeCover, node for the y kinds.
  std::int64_t index = 0;

  static FamilyTarget full_dimension() { return {Kind::FullDimension, 0}; }
  static FamilyTarget x_nonnegative(std::int64_t edge) { return {Kind::XNonnegative, edge}; }
  static FamilyTarget y_nonnegative(Node v) { return {Kind::YNonnegative, v}; }
  static FamilyTarget y_at_most_one(Node v) { return {Kind::YAtMostOne, v}; }
  static FamilyTarget edge_cover(std::int64_t edge) { return {Kind::EdgeCover, edge}; }
};

std::string describe(const Graph& g, const FamilyTarget& t);

/// Points in R^{m+n} stored as columns; rows are the x-block (edges() order)
/// followed by the y-block (node order).
struct PointFamily {
  DenseMatrix<Rational> points;
  FamilyTarget target;
  std::int64_t required_budget = 1;
  Eigen::Index anchor = 0;  // column subtracted for the rank check
  std::int64_t m = 0;
  std::int64_t n = 0;
};

/// Instantiates the affinely independent point recipes for the 1-DCNDP polytope.
/// Where a recipe sets one y-indicator per remaining edge f, the indicator sits
/// on an endpoint of f outside the studied edge/vertex (smallest id), so that
/// x_f = 0 stays feasible.
PointFamily build_family(const Graph& g, const FamilyTarget& target);

/// Every point lies in {x >= 0, 0 <= y <= 1, x_uv + y_u + y_v >= 1, sum y <= budget}.
bool check_membership(const Graph& g, std::int64_t budget, const PointFamily& family);

/// Every point satisfies the target inequality at equality. Throws DomainError
/// for a full-dimension family.
bool check_tightness(const Graph& g, const PointFamily& family);

/// Rank of the differences between each point and the anchor column.
std::int64_t affine_rank(const PointFamily& family);
std::int64_t affine_rank(const PointFamily& family, Eigen::Index anchor);

enum class Verdict { Pass, Fail, ConditionUnmet };
std::string to_string(Verdict v);

struct CertificateReport {
  std::string target;
  std::int64_t required_budget = 0;
  bool membership_ok = false;
  bool tightness_ok = false;
  std::int64_t rank = 0;
  std::int64_t required_rank = 0;
  Verdict verdict = Verdict::Fail;
};

CertificateReport certify(const Graph& g, std::int64_t budget, const FamilyTarget& target);

/// Certificate groups: 1 = full dimension (b >= 1); 2 = trivial bounds x_uv >= 0
/// (b >= 2), y_v >= 0 (b >= 1), y_v <= 1 (b >= 2); 3 = edge rows (b >= 1).
std::vector<CertificateReport> verify_proposition(const Graph& g, std::int64_t budget, int proposition);

/// CSV with columns target,required_budget,membership,tightness,rank,required_rank,verdict.
void write_report(const std::vector<CertificateReport>& reports, std::ostream& out);

}  // namespace dcndp
