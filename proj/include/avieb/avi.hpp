#ifndef AVIEB_AVI_HPP
#define AVIEB_AVI_HPP

#include "avieb/core.hpp"
#include "avieb/optkernel.hpp"
#include "avieb/polyhedra.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace avieb {

/// Affine variational inequality: find x in C with <Mx + q, y - x> >= 0 for
/// all y in C. C must be given by inequalities only and be nonempty.
class AviInstance {
 public:
  AviInstance(Matrix m_op, Vector q, PolyhedralSet c_set, const Tolerances& tol = {});

  Index dim() const { return q_.size(); }
  Index num_constraints() const { return c_set_.num_ineq(); }
  const Matrix& m_op() const { return m_op_; }
  const Vector& q() const { return q_; }
  const PolyhedralSet& c_set() const { return c_set_; }

  bool operator==(const AviInstance& other) const;

 private:
  Matrix m_op_;
  Vector q_;
  PolyhedralSet c_set_;
};

/// Subset of constraint indices (0-based, sorted).
struct ActiveSet {
  std::vector<Index> rows;

  bool contains(Index i) const;
  std::string to_string() const;  // 1-based, e.g. "{1,3}"
  auto operator<=>(const ActiveSet&) const = default;
};

ActiveSet active_set_from_mask(std::uint64_t mask, Index m);

struct ResidualValue {
  Vector r;                // R(x) = x - P_C(x - Mx - q)
  Vector projected_point;  // P_C(x - Mx - q)
  double norm = 0.0;
};

ResidualValue residual(const AviInstance& inst, const Vector& x, const Tolerances& tol = {},
                       const QpOptions& opt = {});

/// x in C and min_{y in C} <Mx+q, y> >= <Mx+q, x> - tol (scaled by 1 + |<Mx+q, x>|).
bool is_solution(const AviInstance& inst, const Vector& x, double tol = 1e-6, const Tolerances& ktol = {});

/// The set M_{I0} in (y, x, lambda)-space:
///   y - M x - sum_i lambda_i x*_i = q                      (n equality rows)
///   for i in I0:   <x*_i, x - y> <= alpha_i, -<x*_i, x - y> <= -alpha_i, -lambda_i <= 0
///   for i not in I0: <x*_i, x - y> <= alpha_i, lambda_i <= 0, -lambda_i <= 0
/// i.e. 3m inequality rows, three per constraint in index order.
struct KktPiece {
  ActiveSet active;
  PolyhedralSet polyhedron_yxl;
};

KktPiece build_kkt_piece(const AviInstance& inst, const ActiveSet& active);

/// Direct check of the KKT system for a given triple.
bool satisfies_kkt_system(const AviInstance& inst, const ActiveSet& active, const Vector& y, const Vector& x,
                          const Vector& lambda, double tol);

/// One polyhedral piece of R^{-1}(y) in x-space.
///
/// `x_set` is the exact image of the KKT section under (x, lambda) -> x,
/// obtained by eliminating lambda (unique because the active normals are
/// linearly independent). `generators` are the projected vertices, rays and
/// lineality directions of the (x, lambda)-section.
struct InversePiece {
  ActiveSet active;
  PolyhedralSet x_set;
  VertexSet generators;
};

struct EnumerationOptions {
  std::size_t active_set_cap = 16;
  EnumerationCaps caps{};
  unsigned threads = 1;
  bool with_generators = true;
};

/// R^{-1}(y) as a union of polyhedra, one per active set whose normals are
/// linearly independent and whose section is nonempty; ordered by the
/// active-set bitmask. Every point of R^{-1}(y) admits multipliers supported
/// on such a set, so the union is all of R^{-1}(y).
std::vector<InversePiece> inverse_residual(const AviInstance& inst, const Vector& y,
                                           const EnumerationOptions& opt = {}, const Tolerances& tol = {});

/// C* = R^{-1}(0).
std::vector<InversePiece> enumerate_solution_set(const AviInstance& inst, const EnumerationOptions& opt = {},
                                                 const Tolerances& tol = {});

/// True when M is diagonal and every constraint involves one coordinate.
bool is_separable(const AviInstance& inst);

/// C* of a separable instance as the product of the one-dimensional solution
/// sets; avoids the 2^m enumeration. Throws CapExceeded if the product has
/// more than `max_pieces` pieces.
std::vector<InversePiece> enumerate_solution_set_separable(const AviInstance& inst, std::size_t max_pieces = 4096,
                                                           const Tolerances& tol = {});

std::vector<PolyhedralSet> piece_sets(std::span<const InversePiece> pieces);

/// min over pieces of the distance from x, using piece vertices as feasible
/// warm starts for the projections.
double distance_to_pieces(std::span<const InversePiece> pieces, const Vector& x, const Tolerances& tol = {});

}  // namespace avieb

#endif  // AVIEB_AVI_HPP
