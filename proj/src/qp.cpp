#include "avieb/optkernel.hpp"
#include "avieb/polyhedra.hpp"

#include <algorithm>
#include <cmath>

namespace avieb {

namespace {

// Orthonormal basis of the span of the working-set normals, kept as a
// thin QR factorization of A_W^T.
struct WorkingBasis {
  Matrix q1;  // N x w
  Matrix r;   // w x w upper triangular

  void assign(const Matrix& aw_t) {
    const Index w = aw_t.cols();
    if (w == 0) {
      q1.resize(aw_t.rows(), 0);
      r.resize(0, 0);
      return;
    }
    Eigen::HouseholderQR<Matrix> qr(aw_t);
    q1 = qr.householderQ() * Matrix::Identity(aw_t.rows(), w);
    r = qr.matrixQR().topRows(w).triangularView<Eigen::Upper>();
  }

  Vector project_out(const Vector& g) const {
    if (q1.cols() == 0) return g;
    return g - q1 * (q1.transpose() * g);
  }
};

bool independent_of(const Matrix& rows, const Vector& a) {
  if (rows.rows() == 0) return a.norm() > 1e-12;
  WorkingBasis b;
  b.assign(rows.transpose());
  return b.project_out(a).norm() > 1e-9 * std::max(1.0, a.norm());
}

Vector start_point(const PolyhedralSet& set, const Vector& u, const Tolerances& tol,
                   const QpOptions& opt) {
  if (opt.hint && opt.hint->size() == set.dim() && set.violation(*opt.hint) <= tol.feas) {
    return *opt.hint;
  }
  const Index n = set.dim();
  if (opt.start == QpStart::any_feasible) {
    const SolveStatus s = solve_feasibility(set.eq_lhs(), set.eq_rhs(), set.ineq_lhs(), set.ineq_rhs(), tol);
    if (!s.optimal()) throw EmptySet("projection onto an empty polyhedral set");
    return *s.point;
  }
  // min 1.p + 1.q  s.t.  z - p + q = u,  z in set,  p, q >= 0.
  const Index m = set.num_ineq();
  const Index k = set.num_eq();
  LinearProgram lp;
  lp.objective = Vector::Zero(3 * n);
  lp.objective.tail(2 * n).setOnes();
  lp.ineq_lhs = Matrix::Zero(m + 2 * n, 3 * n);
  lp.ineq_rhs = Vector::Zero(m + 2 * n);
  lp.ineq_lhs.topLeftCorner(m, n) = set.ineq_lhs();
  lp.ineq_rhs.head(m) = set.ineq_rhs();
  lp.ineq_lhs.bottomRightCorner(2 * n, 2 * n) = -Matrix::Identity(2 * n, 2 * n);
  lp.eq_lhs = Matrix::Zero(k + n, 3 * n);
  lp.eq_rhs = Vector::Zero(k + n);
  lp.eq_lhs.topLeftCorner(k, n) = set.eq_lhs();
  lp.eq_rhs.head(k) = set.eq_rhs();
  lp.eq_lhs.block(k, 0, n, n) = Matrix::Identity(n, n);
  lp.eq_lhs.block(k, n, n, n) = -Matrix::Identity(n, n);
  lp.eq_lhs.block(k, 2 * n, n, n) = Matrix::Identity(n, n);
  lp.eq_rhs.tail(n) = u;
  const SolveStatus s = solve_lp(lp, tol);
  if (!s.optimal()) throw EmptySet("projection onto an empty polyhedral set");
  return s.point->head(n);
}

}  // namespace

ProjectionResult project_detailed(const QpProjectionProblem& p, const Tolerances& tol,
                                  const QpOptions& opt) {
  const PolyhedralSet& set = p.feasible_set;
  const Vector& u = p.target;
  require_dim(u.size(), set.dim(), "solve_projection_qp target");
  if (!u.allFinite()) throw NumericalBreakdown("projection QP: non-finite target");
  const Index n = set.dim();
  const Index m = set.num_ineq();
  const Index k = set.num_eq();

  ProjectionResult out;
  out.ineq_multipliers = Vector::Zero(m);
  out.eq_multipliers = Vector::Zero(k);
  if (set.violation(u) <= tol.feas) {
    out.point = u;
    return out;
  }

  Vector z = start_point(set, u, tol, opt);

  // Working set: independent equality rows first, then active inequalities.
  std::vector<Index> w_eq;
  std::vector<Index> w_in;
  Matrix rows(0, n);
  auto append = [&](const Vector& a) {
    rows.conservativeResize(rows.rows() + 1, Eigen::NoChange);
    rows.row(rows.rows() - 1) = a.transpose();
  };
  for (Index i = 0; i < k; ++i) {
    const Vector a = set.eq_lhs().row(i).transpose();
    if (independent_of(rows, a)) {
      append(a);
      w_eq.push_back(i);
    }
  }
  for (Index i = 0; i < m; ++i) {
    const Vector a = set.ineq_lhs().row(i).transpose();
    const double slack = set.ineq_rhs()(i) - a.dot(z);
    if (std::abs(slack) <= 1e-9 * (1.0 + std::abs(set.ineq_rhs()(i))) && independent_of(rows, a)) {
      append(a);
      w_in.push_back(i);
    }
  }

  auto working_matrix = [&] {
    Matrix aw(static_cast<Index>(w_eq.size() + w_in.size()), n);
    Index r = 0;
    for (Index i : w_eq) aw.row(r++) = set.eq_lhs().row(i);
    for (Index i : w_in) aw.row(r++) = set.ineq_lhs().row(i);
    return aw;
  };

  const int limit = static_cast<int>(20 * (n + m + k) + 200);
  WorkingBasis basis;
  for (;;) {
    if (++out.iterations > limit) throw NumericalBreakdown("projection QP: iteration limit exceeded");
    const Matrix aw = working_matrix();
    basis.assign(aw.transpose());
    const Vector g = u - z;
    const Vector step = basis.project_out(g);

    if (step.norm() <= 1e-13 * (1.0 + g.norm())) {
      // Stationary on the working face: inspect the inequality multipliers.
      const Index ne = static_cast<Index>(w_eq.size());
      Vector mu = Vector::Zero(aw.rows());
      if (aw.rows() > 0) {
        mu = basis.r.triangularView<Eigen::Upper>().solve(basis.q1.transpose() * g);
      }
      const double mu_tol = 1e-12 * (1.0 + g.norm());
      Index drop = -1;
      for (std::size_t j = 0; j < w_in.size(); ++j) {
        if (mu(ne + static_cast<Index>(j)) < -mu_tol && (drop < 0 || w_in[j] < w_in[static_cast<std::size_t>(drop)])) {
          drop = static_cast<Index>(j);
        }
      }
      if (drop < 0) break;
      w_in.erase(w_in.begin() + drop);
      continue;
    }

    double alpha = 1.0;
    Index blocking = -1;
    for (Index i = 0; i < m; ++i) {
      if (std::find(w_in.begin(), w_in.end(), i) != w_in.end()) continue;
      const double ap = set.ineq_lhs().row(i).dot(step);
      if (ap <= 1e-12 * set.ineq_lhs().row(i).norm() * step.norm()) continue;
      const double s = std::max(0.0, set.ineq_rhs()(i) - set.ineq_lhs().row(i).dot(z)) / ap;
      if (s < alpha) {
        alpha = s;
        blocking = i;
      }
    }
    z += alpha * step;
    if (blocking >= 0) {
      const Vector a = set.ineq_lhs().row(blocking).transpose();
      // A blocking normal with a.step > 0 cannot lie in span(W) except by round-off.
      if (independent_of(aw, a)) w_in.push_back(blocking);
    }
  }

  // Polish: z = u - A_W^T mu with A_W z = b_W solved directly.
  const Matrix aw = working_matrix();
  Vector mu = Vector::Zero(aw.rows());
  if (aw.rows() > 0) {
    basis.assign(aw.transpose());
    Vector bw(aw.rows());
    Index r = 0;
    for (Index i : w_eq) bw(r++) = set.eq_rhs()(i);
    for (Index i : w_in) bw(r++) = set.ineq_rhs()(i);
    const auto rt = basis.r.transpose().triangularView<Eigen::Lower>();
    const Vector c = basis.q1.transpose() * u - rt.solve(bw);
    const Vector polished = u - basis.q1 * c;
    if (set.violation(polished) <= std::max(set.violation(z), tol.feas)) z = polished;
    mu = basis.r.triangularView<Eigen::Upper>().solve(basis.q1.transpose() * (u - z));
  }

  out.point = z;
  const Index ne = static_cast<Index>(w_eq.size());
  for (std::size_t j = 0; j < w_eq.size(); ++j) out.eq_multipliers(w_eq[j]) = mu(static_cast<Index>(j));
  for (std::size_t j = 0; j < w_in.size(); ++j) {
    out.ineq_multipliers(w_in[j]) = std::max(0.0, mu(ne + static_cast<Index>(j)));
  }
  out.active = w_in;
  std::sort(out.active.begin(), out.active.end());
  return out;
}

Vector solve_projection_qp(const QpProjectionProblem& p, const Tolerances& tol, const QpOptions& opt) {
  return project_detailed(p, tol, opt).point;
}

double projection_optimality_gap(const PolyhedralSet& set, const Vector& u, const Vector& z,
                                 const Tolerances& tol) {
  LinearProgram lp;
  lp.objective = u - z;
  lp.sense = Sense::maximize;
  lp.ineq_lhs = set.ineq_lhs();
  lp.ineq_rhs = set.ineq_rhs();
  lp.eq_lhs = set.eq_lhs();
  lp.eq_rhs = set.eq_rhs();
  const SolveStatus s = solve_lp(lp, tol);
  if (s.status == Status::unbounded) return kInf;
  if (!s.optimal()) throw EmptySet("optimality gap over an empty set");
  return s.value - (u - z).dot(z);
}

}  // namespace avieb
