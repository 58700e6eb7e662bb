#ifndef AVIEB_OPTKERNEL_HPP
#define AVIEB_OPTKERNEL_HPP

#include "avieb/core.hpp"

#include <optional>
#include <vector>

namespace avieb {

class PolyhedralSet;

enum class Sense { minimize, maximize };
enum class Status { optimal, infeasible, unbounded };

const char* to_string(Status s);

/// Dense LP over free variables x in R^n:
///   optimize objective . x  s.t.  ineq_lhs x <= ineq_rhs,  eq_lhs x = eq_rhs.
struct LinearProgram {
  Vector objective;
  Matrix ineq_lhs;
  Vector ineq_rhs;
  Matrix eq_lhs;
  Vector eq_rhs;
  Sense sense = Sense::minimize;

  Index num_vars() const { return objective.size(); }
  void validate() const;
};

/// Outcome of an LP solve. `value` is +-inf for infeasible/unbounded problems
/// (following the sense of optimization). When optimal, `point` holds a
/// primal solution and the multipliers satisfy
///   s * objective + ineq_lhs^T ineq_dual + eq_lhs^T eq_dual = 0,
///   ineq_dual >= 0,
/// where s = +1 for minimization and -1 for maximization.
struct SolveStatus {
  Status status = Status::infeasible;
  double value = kInf;
  std::optional<Vector> point;
  std::optional<Vector> ineq_dual;
  std::optional<Vector> eq_dual;
  int pivots = 0;

  bool optimal() const { return status == Status::optimal; }
};

/// Two-phase dense tableau simplex with Bland's rule.
SolveStatus solve_lp(const LinearProgram& lp, const Tolerances& tol = {});

/// Value of the LP dual at the reported multipliers (equals `value` at
/// optimality by strong duality).
double dual_objective(const LinearProgram& lp, const SolveStatus& s);

/// Feasibility of {eq_lhs x = eq_rhs, ineq_lhs x <= ineq_rhs}: `optimal`
/// with a witness point, or `infeasible`.
SolveStatus solve_feasibility(const Matrix& eq_lhs, const Vector& eq_rhs, const Matrix& ineq_lhs,
                              const Vector& ineq_rhs, const Tolerances& tol = {});

struct QpProjectionProblem {
  Vector target;
  const PolyhedralSet& feasible_set;
};

enum class QpStart {
  nearest_l1,    // vertex of the set nearest to the target in the l1 norm
  any_feasible,  // any feasibility witness
};

struct QpOptions {
  QpStart start = QpStart::nearest_l1;
  /// Feasible warm start; ignored if it is not a member of the set.
  std::optional<Vector> hint;
};

struct ProjectionResult {
  Vector point;
  std::vector<Index> active;  // inequality rows in the final working set
  Vector ineq_multipliers;    // one per inequality row, zero off the working set
  Vector eq_multipliers;
  int iterations = 0;
};

/// Euclidean projection of `target` onto the set: min 1/2 |z - target|^2 over
/// z in the set, solved by a primal active-set method. Throws EmptySet if the
/// set has no points.
ProjectionResult project_detailed(const QpProjectionProblem& p, const Tolerances& tol = {},
                                  const QpOptions& opt = {});
Vector solve_projection_qp(const QpProjectionProblem& p, const Tolerances& tol = {},
                           const QpOptions& opt = {});

/// sup over y in the set of <u - z, y - z>, computed by an LP. Nonpositive
/// (up to round-off) iff z is the projection of u; +inf when unbounded.
double projection_optimality_gap(const PolyhedralSet& set, const Vector& u, const Vector& z,
                                 const Tolerances& tol = {});

}  // namespace avieb

#endif  // AVIEB_OPTKERNEL_HPP
