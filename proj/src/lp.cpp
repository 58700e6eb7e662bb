#include "avieb/optkernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace avieb {

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
  }
  return "?";
}

void LinearProgram::validate() const {
  const Index n = objective.size();
  auto check = [&](const Matrix& a, const Vector& b, const char* what) {
    if (a.rows() != b.size() || (a.rows() > 0 && a.cols() != n) || (a.rows() == 0 && a.cols() != 0 && a.cols() != n)) {
      throw DimensionMismatch(std::string("LinearProgram: inconsistent ") + what + " block");
    }
    if (!a.allFinite() || !b.allFinite()) throw Error(std::string("LinearProgram: non-finite ") + what + " data");
  };
  check(ineq_lhs, ineq_rhs, "inequality");
  check(eq_lhs, eq_rhs, "equality");
  if (!objective.allFinite()) throw Error("LinearProgram: non-finite objective");
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-10;

// Standard form: min c.w  s.t.  A w = b, w >= 0, b >= 0.
// Column layout: [x+ (n) | x- (n) | slacks (m) | artificials (na)].
struct Tableau {
  Index rows = 0;
  Index cols = 0;  // structural + slack + artificial columns, rhs excluded
  Index first_artificial = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t;  // last column is the rhs
  Vector cost;     // phase-II costs of every column (artificials: 0)
  std::vector<Index> basis;
  std::vector<bool> row_alive;
  Matrix original;  // A of the standard form (rows x cols)
  Vector original_rhs;
  Vector row_sign;  // +1 / -1 flip applied to the original row
};

Tableau build(const LinearProgram& lp) {
  const Index n = lp.num_vars();
  const Index m = lp.ineq_lhs.rows();
  const Index k = lp.eq_lhs.rows();
  Tableau tb;
  tb.rows = m + k;
  const Index structural = 2 * n + m;

  Matrix a = Matrix::Zero(tb.rows, structural);
  Vector b(tb.rows);
  tb.row_sign = Vector::Ones(tb.rows);
  for (Index i = 0; i < m; ++i) {
    a.block(i, 0, 1, n) = lp.ineq_lhs.row(i);
    a.block(i, n, 1, n) = -lp.ineq_lhs.row(i);
    a(i, 2 * n + i) = 1.0;
    b(i) = lp.ineq_rhs(i);
  }
  for (Index i = 0; i < k; ++i) {
    a.block(m + i, 0, 1, n) = lp.eq_lhs.row(i);
    a.block(m + i, n, 1, n) = -lp.eq_lhs.row(i);
    b(m + i) = lp.eq_rhs(i);
  }
  for (Index i = 0; i < tb.rows; ++i) {
    if (b(i) < 0.0) {
      a.row(i) *= -1.0;
      b(i) = -b(i);
      tb.row_sign(i) = -1.0;
    }
  }

  // Slack columns with +1 after the flip start basic; other rows get an artificial.
  std::vector<Index> needs_artificial;
  tb.basis.assign(tb.rows, -1);
  for (Index i = 0; i < m; ++i) {
    if (tb.row_sign(i) > 0) {
      tb.basis[i] = 2 * n + i;
    } else {
      needs_artificial.push_back(i);
    }
  }
  for (Index i = m; i < tb.rows; ++i) needs_artificial.push_back(i);

  const Index na = static_cast<Index>(needs_artificial.size());
  tb.first_artificial = structural;
  tb.cols = structural + na;
  tb.t = Matrix::Zero(tb.rows, tb.cols + 1);
  tb.t.leftCols(structural) = a;
  tb.t.col(tb.cols) = b;
  for (Index j = 0; j < na; ++j) {
    const Index r = needs_artificial[j];
    tb.t(r, structural + j) = 1.0;
    tb.basis[r] = structural + j;
  }
  tb.original = tb.t.leftCols(tb.cols);
  tb.original_rhs = b;
  tb.cost = Vector::Zero(tb.cols);
  tb.cost.head(n) = lp.objective;
  tb.cost.segment(n, n) = -lp.objective;
  tb.row_alive.assign(tb.rows, true);
  return tb;
}

void pivot(Tableau& tb, Vector& obj, double& obj_rhs, Index r, Index c) {
  const double p = tb.t(r, c);
  tb.t.row(r) /= p;
  for (Index i = 0; i < tb.rows; ++i) {
    if (i == r || !tb.row_alive[i]) continue;
    const double f = tb.t(i, c);
    if (f != 0.0) tb.t.row(i) -= f * tb.t.row(r);
  }
  const double f = obj(c);
  if (f != 0.0) {
    obj -= f * tb.t.row(r).head(tb.cols).transpose();
    obj_rhs -= f * tb.t(r, tb.cols);
  }
  tb.basis[r] = c;
}

// Reduced-cost row for costs `c` under the current basis.
void price(const Tableau& tb, const Vector& c, Vector& obj, double& obj_rhs) {
  obj = c;
  obj_rhs = 0.0;
  for (Index i = 0; i < tb.rows; ++i) {
    if (!tb.row_alive[i]) continue;
    const double cb = c(tb.basis[i]);
    if (cb != 0.0) {
      obj -= cb * tb.t.row(i).head(tb.cols).transpose();
      obj_rhs -= cb * tb.t(i, tb.cols);
    }
  }
}

enum class Outcome { optimal, unbounded };

// Bland's rule: lowest-index entering column with negative reduced cost,
// ratio-test ties broken by the lowest basic variable index.
Outcome iterate(Tableau& tb, Vector& obj, double& obj_rhs, Index allowed_cols, int& pivots, int limit) {
  for (;;) {
    Index enter = -1;
    for (Index j = 0; j < allowed_cols; ++j) {
      if (obj(j) < -kCostTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return Outcome::optimal;

    Index leave = -1;
    double best = kInf;
    for (Index i = 0; i < tb.rows; ++i) {
      if (!tb.row_alive[i]) continue;
      const double a = tb.t(i, enter);
      if (a <= kPivotTol) continue;
      const double ratio = std::max(0.0, tb.t(i, tb.cols)) / a;
      if (leave < 0 || ratio < best - 1e-12) {
        best = ratio;
        leave = i;
      } else if (ratio <= best + 1e-12 && tb.basis[i] < tb.basis[leave]) {
        leave = i;
      }
    }
    if (leave < 0) return Outcome::unbounded;
    pivot(tb, obj, obj_rhs, leave, enter);
    if (++pivots > limit) throw NumericalBreakdown("simplex: pivot limit exceeded");
  }
}

}  // namespace

SolveStatus solve_lp(const LinearProgram& lp, const Tolerances& tol) {
  lp.validate();
  const Index n = lp.num_vars();
  const Index m = lp.ineq_lhs.rows();
  const Index k = lp.eq_lhs.rows();
  const double sign = lp.sense == Sense::minimize ? 1.0 : -1.0;

  Tableau tb = build(lp);
  SolveStatus out;
  const int limit = static_cast<int>(50 * (tb.rows + tb.cols) + 1000);

  // Phase I: minimize the sum of artificials.
  Vector phase1 = Vector::Zero(tb.cols);
  phase1.tail(tb.cols - tb.first_artificial).setOnes();
  Vector obj;
  double obj_rhs = 0.0;
  price(tb, phase1, obj, obj_rhs);
  iterate(tb, obj, obj_rhs, tb.cols, out.pivots, limit);
  const double infeasibility = -obj_rhs;
  const double scale = 1.0 + (tb.original_rhs.size() ? tb.original_rhs.maxCoeff() : 0.0);
  if (infeasibility > tol.feas * scale) {
    out.status = Status::infeasible;
    out.value = sign * kInf;
    return out;
  }

  // Drive artificials out of the basis; rows where that is impossible are redundant.
  for (Index i = 0; i < tb.rows; ++i) {
    if (tb.basis[i] < tb.first_artificial) continue;
    Index col = -1;
    double best = kPivotTol;
    for (Index j = 0; j < tb.first_artificial; ++j) {
      if (std::abs(tb.t(i, j)) > best) {
        best = std::abs(tb.t(i, j));
        col = j;
      }
    }
    if (col >= 0) {
      pivot(tb, obj, obj_rhs, i, col);
    } else {
      tb.row_alive[i] = false;
    }
  }

  // Phase II.
  Vector cost = sign * tb.cost;
  price(tb, cost, obj, obj_rhs);
  if (iterate(tb, obj, obj_rhs, tb.first_artificial, out.pivots, limit) == Outcome::unbounded) {
    out.status = Status::unbounded;
    out.value = -sign * kInf;
    return out;
  }

  // Recover primal and dual values from the final basis with a fresh
  // factorization rather than the accumulated tableau.
  std::vector<Index> alive;
  for (Index i = 0; i < tb.rows; ++i)
    if (tb.row_alive[i]) alive.push_back(i);
  const Index nb = static_cast<Index>(alive.size());
  Matrix basis(nb, nb);
  Vector rhs(nb), cb(nb);
  for (Index r = 0; r < nb; ++r) {
    rhs(r) = tb.original_rhs(alive[r]);
    for (Index c = 0; c < nb; ++c) basis(r, c) = tb.original(alive[r], tb.basis[alive[c]]);
    cb(r) = cost(tb.basis[alive[r]]);
  }
  Vector w = Vector::Zero(tb.cols);
  Vector y_alive = Vector::Zero(nb);
  if (nb > 0) {
    Eigen::PartialPivLU<Matrix> lu(basis);
    const Vector xb = lu.solve(rhs);
    for (Index r = 0; r < nb; ++r) w(tb.basis[alive[r]]) = std::max(0.0, xb(r));
    y_alive = lu.transpose().solve(cb);
  }
  Vector x = w.head(n) - w.segment(n, n);

  // y is the dual of the (flipped) standard-form rows; undo the flip.
  Vector y = Vector::Zero(tb.rows);
  for (Index r = 0; r < nb; ++r) y(alive[r]) = y_alive(r) * tb.row_sign(alive[r]);
  Vector u = (-y.head(m)).cwiseMax(0.0);
  Vector v = -y.tail(k);

  out.status = Status::optimal;
  out.point = x;
  out.value = lp.objective.dot(x);
  out.ineq_dual = u;
  out.eq_dual = v;
  return out;
}

double dual_objective(const LinearProgram& lp, const SolveStatus& s) {
  if (!s.optimal()) return s.value;
  const double sign = lp.sense == Sense::minimize ? 1.0 : -1.0;
  double d = 0.0;
  if (lp.ineq_rhs.size()) d -= lp.ineq_rhs.dot(*s.ineq_dual);
  if (lp.eq_rhs.size()) d -= lp.eq_rhs.dot(*s.eq_dual);
  return sign * d;
}

SolveStatus solve_feasibility(const Matrix& eq_lhs, const Vector& eq_rhs, const Matrix& ineq_lhs,
                              const Vector& ineq_rhs, const Tolerances& tol) {
  LinearProgram lp;
  const Index n = std::max(eq_lhs.cols(), ineq_lhs.cols());
  lp.objective = Vector::Zero(n);
  lp.eq_lhs = eq_lhs.rows() ? eq_lhs : Matrix(0, n);
  lp.eq_rhs = eq_rhs;
  lp.ineq_lhs = ineq_lhs.rows() ? ineq_lhs : Matrix(0, n);
  lp.ineq_rhs = ineq_rhs;
  return solve_lp(lp, tol);
}

}  // namespace avieb
