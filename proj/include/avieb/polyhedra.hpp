#ifndef AVIEB_POLYHEDRA_HPP
#define AVIEB_POLYHEDRA_HPP

#include "avieb/core.hpp"
#include "avieb/optkernel.hpp"

#include <span>
#include <vector>

namespace avieb {

/// {x in R^n : eq_lhs x = eq_rhs, ineq_lhs x <= ineq_rhs}.
///
/// Rows of ineq_lhs are the normals x*_i, ineq_rhs the bounds alpha_i. The
/// equality block encodes the affine subspace of a generalized polyhedral
/// convex set and is kept separate from the inequalities. Immutable.
class PolyhedralSet {
 public:
  PolyhedralSet(Matrix ineq_lhs, Vector ineq_rhs, Matrix eq_lhs, Vector eq_rhs);
  PolyhedralSet(Matrix ineq_lhs, Vector ineq_rhs);

  static PolyhedralSet whole_space(Index n);
  static PolyhedralSet nonnegative_orthant(Index n);
  static PolyhedralSet box(const Vector& lower, const Vector& upper);
  static PolyhedralSet singleton(const Vector& point);

  Index dim() const { return dim_; }
  Index num_ineq() const { return ineq_lhs_.rows(); }
  Index num_eq() const { return eq_lhs_.rows(); }
  const Matrix& ineq_lhs() const { return ineq_lhs_; }
  const Vector& ineq_rhs() const { return ineq_rhs_; }
  const Matrix& eq_lhs() const { return eq_lhs_; }
  const Vector& eq_rhs() const { return eq_rhs_; }

  /// Largest constraint violation at x (0 for members).
  double violation(const Vector& x) const;

  /// Same set with every pair of opposite inequality rows
  /// (a.x <= b, -a.x <= -b) replaced by the equality a.x = b.
  PolyhedralSet with_paired_rows_as_equalities(double tol = 1e-12) const;

  /// Section obtained by fixing the first `fixed.size()` coordinates.
  PolyhedralSet fix_leading(const Vector& fixed) const;

  bool operator==(const PolyhedralSet& other) const;

 private:
  Index dim_;
  Matrix ineq_lhs_;
  Vector ineq_rhs_;
  Matrix eq_lhs_;
  Vector eq_rhs_;
};

/// Generators of a polyhedron: conv(vertices) + cone(rays) + span(lineality).
struct VertexSet {
  std::vector<Vector> vertices;
  std::vector<Vector> recession_rays;
  std::vector<Vector> lineality;
  bool is_bounded = true;
};

struct EnumerationCaps {
  Index dim_cap = 10;  // dimension of the set after removing equalities
  Index row_cap = 24;  // inequality rows
};

struct DistanceResult {
  double value = 0.0;
  Vector nearest;
};

struct HausdorffResult {
  double value = 0.0;
  /// False only when the recession cones differ (value is then +inf).
  bool exact = true;
  bool finite() const { return value < kInf; }
};

bool contains(const PolyhedralSet& set, const Vector& x, double tol);
bool is_empty(const PolyhedralSet& set, const Tolerances& tol = {});

VertexSet enumerate_vertices(const PolyhedralSet& set, const EnumerationCaps& caps = {},
                             const Tolerances& tol = {});

DistanceResult distance(const PolyhedralSet& set, const Vector& x, const Tolerances& tol = {},
                        const QpOptions& opt = {});

/// Hausdorff distance via the vertex formula. Sets whose recession cones
/// differ are at infinite distance.
HausdorffResult hausdorff(const PolyhedralSet& a, const PolyhedralSet& b,
                          const EnumerationCaps& caps = {}, const Tolerances& tol = {});
HausdorffResult hausdorff(const PolyhedralSet& a, const VertexSet& va, const PolyhedralSet& b,
                          const VertexSet& vb, const Tolerances& tol = {});

/// min over the pieces of distance(piece, x). Empty pieces are skipped;
/// throws EmptySet if every piece is empty.
double union_distance(std::span<const PolyhedralSet> pieces, const Vector& x,
                      const Tolerances& tol = {});

/// Whether direction d lies in the recession cone of the set.
bool in_recession_cone(const PolyhedralSet& set, const Vector& d, double tol);

}  // namespace avieb

#endif  // AVIEB_POLYHEDRA_HPP
