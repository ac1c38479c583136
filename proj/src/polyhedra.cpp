#include "dcndp/polyhedra.hpp"

#include <algorithm>

#include "dcndp/errors.hpp"

namespace dcndp {

namespace {

using Kind = FamilyTarget::Kind;

/// Builder for one column at a time, starting from (x = 1, y = 0).
class ColumnBuilder {
 public:
  ColumnBuilder(const Graph& g) : m_(g.m()), n_(g.n()) {}

  DenseMatrix<Rational> finish() {
    DenseMatrix<Rational> out(m_ + n_, static_cast<Eigen::Index>(cols_.size()));
    for (std::size_t c = 0; c < cols_.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = cols_[c];
    return out;
  }

  Eigen::Matrix<Rational, Eigen::Dynamic, 1>& add() {
    Eigen::Matrix<Rational, Eigen::Dynamic, 1> col(m_ + n_);
    col.head(m_).setConstant(Rational(1));
    col.tail(n_).setConstant(Rational(0));
    cols_.push_back(std::move(col));
    return cols_.back();
  }

  Eigen::Index x(std::int64_t edge) const { return edge; }
  Eigen::Index y(Node v) const { return m_ + v; }

 private:
  Eigen::Index m_, n_;
  std::vector<Eigen::Matrix<Rational, Eigen::Dynamic, 1>> cols_;
};

/// Endpoint of f that is not in `studied`, smallest id first.
Node indicator_for(const Edge& f, std::initializer_list<Node> studied) {
  auto outside = [&](Node w) { return std::find(studied.begin(), studied.end(), w) == studied.end(); };
  if (outside(f.u)) return f.u;
  if (outside(f.v)) return f.v;
  throw DomainError("edge has no endpoint outside the studied set");
}

void check_target(const Graph& g, const FamilyTarget& t) {
  switch (t.kind) {
    case Kind::FullDimension:
      if (g.n() == 0) throw DomainError("empty graph");
      return;
    case Kind::XNonnegative:
    case Kind::EdgeCover:
      if (t.index < 0 || t.index >= g.m()) throw DomainError("unknown edge index " + std::to_string(t.index));
      return;
    case Kind::YNonnegative:
    case Kind::YAtMostOne:
      if (t.index < 0 || t.index >= g.n()) throw DomainError("unknown node " + std::to_string(t.index));
      return;
  }
}

PointFamily full_dimension_family(const Graph& g) {
  ColumnBuilder b(g);
  b.add();  // (1, 0)
  for (std::int64_t f = 0; f < g.m(); ++f) {
    auto& col = b.add();
    col[b.x(f)] = 0;
    col[b.y(g.edges()[f].u)] = 1;
  }
  for (Node v = 0; v < g.n(); ++v) b.add()[b.y(v)] = 1;
  return {b.finish(), FamilyTarget::full_dimension(), 1, 0, g.m(), g.n()};
}

PointFamily x_nonnegative_family(const Graph& g, std::int64_t e) {
  const Node u = g.edges()[e].u, v = g.edges()[e].v;
  ColumnBuilder b(g);
  // Three points over (y_u, y_v): (0,1), (1,1), (1,0); the third is the anchor.
  const int yu[3] = {0, 1, 1}, yv[3] = {1, 1, 0};
  for (int i = 0; i < 3; ++i) {
    auto& col = b.add();
    col[b.x(e)] = 0;
    col[b.y(u)] = yu[i];
    col[b.y(v)] = yv[i];
  }
  for (Node w = 0; w < g.n(); ++w) {
    if (w == u || w == v) continue;
    auto& col = b.add();
    col[b.x(e)] = 0;
    col[b.y(u)] = 1;
    col[b.y(w)] = 1;
  }
  for (std::int64_t f = 0; f < g.m(); ++f) {
    if (f == e) continue;
    auto& col = b.add();
    col[b.x(e)] = 0;
    col[b.x(f)] = 0;
    col[b.y(u)] = 1;
    col[b.y(indicator_for(g.edges()[f], {u, v}))] = 1;
  }
  return {b.finish(), FamilyTarget::x_nonnegative(e), 2, 2, g.m(), g.n()};
}

/// Shared shape for y_v >= 0 (y_v = 0, b >= 1) and y_v <= 1 (y_v = 1, b >= 2).
PointFamily y_bound_family(const Graph& g, Node v, int y_value) {
  ColumnBuilder b(g);
  for (std::int64_t f = 0; f < g.m(); ++f) {
    auto& col = b.add();
    col[b.x(f)] = 0;
    col[b.y(v)] = y_value;
    col[b.y(indicator_for(g.edges()[f], {v}))] = 1;
  }
  for (Node w = 0; w < g.n(); ++w) {
    if (w == v) continue;
    auto& col = b.add();
    col[b.y(v)] = y_value;
    col[b.y(w)] = 1;
  }
  b.add()[b.y(v)] = y_value;  // anchor
  const auto target = y_value == 0 ? FamilyTarget::y_nonnegative(v) : FamilyTarget::y_at_most_one(v);
  DenseMatrix<Rational> pts = b.finish();
  const Eigen::Index anchor = pts.cols() - 1;
  return {std::move(pts), target, y_value == 0 ? 1 : 2, anchor, g.m(), g.n()};
}

PointFamily edge_cover_family(const Graph& g, std::int64_t e) {
  const Node u = g.edges()[e].u, v = g.edges()[e].v;
  ColumnBuilder b(g);
  // (y_u, y_v, x_uv): (0,0,1) anchor, (1,0,0), (0,1,0).
  const int yu[3] = {0, 1, 0}, yv[3] = {0, 0, 1}, xe[3] = {1, 0, 0};
  for (int i = 0; i < 3; ++i) {
    auto& col = b.add();
    col[b.y(u)] = yu[i];
    col[b.y(v)] = yv[i];
    col[b.x(e)] = xe[i];
  }
  for (std::int64_t f = 0; f < g.m(); ++f) {
    if (f == e) continue;
    auto& col = b.add();
    col[b.x(f)] = 0;
    col[b.y(indicator_for(g.edges()[f], {u, v}))] = 1;
  }
  for (Node w = 0; w < g.n(); ++w) {
    if (w == u || w == v) continue;
    b.add()[b.y(w)] = 1;
  }
  return {b.finish(), FamilyTarget::edge_cover(e), 1, 0, g.m(), g.n()};
}

}  // namespace

std::string describe(const Graph& g, const FamilyTarget& t) {
  auto xname = [&](std::int64_t e) {
    return "x_" + std::to_string(g.edges()[e].u) + "_" + std::to_string(g.edges()[e].v);
  };
  switch (t.kind) {
    case Kind::FullDimension: return "full-dim";
    case Kind::XNonnegative: return xname(t.index) + ">=0";
    case Kind::YNonnegative: return "y_" + std::to_string(t.index) + ">=0";
    case Kind::YAtMostOne: return "y_" + std::to_string(t.index) + "<=1";
    case Kind::EdgeCover: {
      const Edge& e = g.edges()[t.index];
      return "1-y_" + std::to_string(e.u) + "-y_" + std::to_string(e.v) + "<=" + xname(t.index);
    }
  }
  return "?";
}

PointFamily build_family(const Graph& g, const FamilyTarget& target) {
  check_target(g, target);
  switch (target.kind) {
    case Kind::FullDimension: return full_dimension_family(g);
    case Kind::XNonnegative: return x_nonnegative_family(g, target.index);
    case Kind::YNonnegative: return y_bound_family(g, static_cast<Node>(target.index), 0);
    case Kind::YAtMostOne: return y_bound_family(g, static_cast<Node>(target.index), 1);
    case Kind::EdgeCover: return edge_cover_family(g, target.index);
  }
  throw DomainError("unknown family target");
}

bool check_membership(const Graph& g, std::int64_t budget, const PointFamily& family) {
  const auto m = g.m();
  const auto n = g.n();
  const auto& pts = family.points;
  if (pts.rows() != m + n) return false;
  const Rational zero(0), one(1);
  for (Eigen::Index c = 0; c < pts.cols(); ++c) {
    auto x = pts.col(c).head(m);
    auto y = pts.col(c).tail(n);
    if ((x.array() < zero).any()) return false;
    if ((y.array() < zero).any() || (y.array() > one).any()) return false;
    if (y.sum() > Rational(budget)) return false;
    for (std::int64_t f = 0; f < m; ++f) {
      const Edge& e = g.edges()[f];
      if (x[f] + y[e.u] + y[e.v] < one) return false;
    }
  }
  return true;
}

bool check_tightness(const Graph& g, const PointFamily& family) {
  const auto& t = family.target;
  if (t.kind == Kind::FullDimension) throw DomainError("a full-dimension family has no target inequality");
  const auto m = g.m();
  for (Eigen::Index c = 0; c < family.points.cols(); ++c) {
    auto p = family.points.col(c);
    switch (t.kind) {
      case Kind::XNonnegative:
        if (p[t.index] != 0) return false;
        break;
      case Kind::YNonnegative:
        if (p[m + t.index] != 0) return false;
        break;
      case Kind::YAtMostOne:
        if (p[m + t.index] != 1) return false;
        break;
      case Kind::EdgeCover: {
        const Edge& e = g.edges()[t.index];
        if (Rational(1) - p[m + e.u] - p[m + e.v] != p[t.index]) return false;
        break;
      }
      case Kind::FullDimension: break;
    }
  }
  return true;
}

std::int64_t affine_rank(const PointFamily& family) { return affine_rank(family, family.anchor); }

std::int64_t affine_rank(const PointFamily& family, Eigen::Index anchor) {
  const auto& pts = family.points;
  if (pts.cols() == 0) throw DomainError("empty point family");
  if (anchor < 0 || anchor >= pts.cols()) throw DomainError("anchor out of range");
  DenseMatrix<Rational> diffs(pts.rows(), pts.cols() - 1);
  for (Eigen::Index c = 0, k = 0; c < pts.cols(); ++c) {
    if (c == anchor) continue;
    diffs.col(k++) = pts.col(c) - pts.col(anchor);
  }
  return static_cast<std::int64_t>(exact_rank(std::move(diffs)));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::ConditionUnmet: return "condition-unmet";
  }
  return "?";
}

CertificateReport certify(const Graph& g, std::int64_t budget, const FamilyTarget& target) {
  const PointFamily family = build_family(g, target);
  CertificateReport r;
  r.target = describe(g, target);
  r.required_budget = family.required_budget;
  r.membership_ok = check_membership(g, budget, family);
  const bool full = target.kind == Kind::FullDimension;
  r.tightness_ok = full ? true : check_tightness(g, family);
  r.rank = affine_rank(family);
  r.required_rank = full ? g.m() + g.n() : g.m() + g.n() - 1;
  if (budget < family.required_budget) {
    r.verdict = Verdict::ConditionUnmet;
  } else {
    r.verdict = r.membership_ok && r.tightness_ok && r.rank == r.required_rank ? Verdict::Pass : Verdict::Fail;
  }
  return r;
}

std::vector<CertificateReport> verify_proposition(const Graph& g, std::int64_t budget, int proposition) {
  std::vector<CertificateReport> out;
  switch (proposition) {
    case 1:
      out.push_back(certify(g, budget, FamilyTarget::full_dimension()));
      break;
    case 2:
      for (std::int64_t e = 0; e < g.m(); ++e) out.push_back(certify(g, budget, FamilyTarget::x_nonnegative(e)));
      for (Node v = 0; v < g.n(); ++v) out.push_back(certify(g, budget, FamilyTarget::y_nonnegative(v)));
      for (Node v = 0; v < g.n(); ++v) out.push_back(certify(g, budget, FamilyTarget::y_at_most_one(v)));
      break;
    case 3:
      for (std::int64_t e = 0; e < g.m(); ++e) out.push_back(certify(g, budget, FamilyTarget::edge_cover(e)));
      break;
    default:
      throw DomainError("proposition must be 1, 2 or 3");
  }
  return out;
}

void write_report(const std::vector<CertificateReport>& reports, std::ostream& out) {
  out << "target,required_budget,membership,tightness,rank,required_rank,verdict\n";
  for (const auto& r : reports) {
    out << r.target << ',' << r.required_budget << ',' << (r.membership_ok ? "true" : "false") << ','
        << (r.tightness_ok ? "true" : "false") << ',' << r.rank << ',' << r.required_rank << ','
        << to_string(r.verdict) << '\n';
  }
}

}  // namespace dcndp
