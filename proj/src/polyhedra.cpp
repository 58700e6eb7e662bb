#include "avieb/polyhedra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace avieb {

PolyhedralSet::PolyhedralSet(Matrix ineq_lhs, Vector ineq_rhs, Matrix eq_lhs, Vector eq_rhs)
    : ineq_lhs_(std::move(ineq_lhs)),
      ineq_rhs_(std::move(ineq_rhs)),
      eq_lhs_(std::move(eq_lhs)),
      eq_rhs_(std::move(eq_rhs)) {
  dim_ = std::max(ineq_lhs_.cols(), eq_lhs_.cols());
  if (ineq_lhs_.rows() == 0) ineq_lhs_.resize(0, dim_);
  if (eq_lhs_.rows() == 0) eq_lhs_.resize(0, dim_);
  if (ineq_lhs_.cols() != dim_ || eq_lhs_.cols() != dim_) {
    throw DimensionMismatch("PolyhedralSet: normals of different lengths");
  }
  if (ineq_lhs_.rows() != ineq_rhs_.size() || eq_lhs_.rows() != eq_rhs_.size()) {
    throw DimensionMismatch("PolyhedralSet: row count differs from bound count");
  }
  if (!ineq_lhs_.allFinite() || !ineq_rhs_.allFinite() || !eq_lhs_.allFinite() || !eq_rhs_.allFinite()) {
    throw Error("PolyhedralSet: non-finite data");
  }
}

PolyhedralSet::PolyhedralSet(Matrix ineq_lhs, Vector ineq_rhs)
    : PolyhedralSet(std::move(ineq_lhs), std::move(ineq_rhs), Matrix(0, 0), Vector(0)) {}

PolyhedralSet PolyhedralSet::whole_space(Index n) {
  return PolyhedralSet(Matrix(0, n), Vector(0), Matrix(0, n), Vector(0));
}

PolyhedralSet PolyhedralSet::nonnegative_orthant(Index n) {
  return PolyhedralSet(-Matrix::Identity(n, n), Vector::Zero(n), Matrix(0, n), Vector(0));
}

PolyhedralSet PolyhedralSet::box(const Vector& lower, const Vector& upper) {
  require_dim(upper.size(), lower.size(), "PolyhedralSet::box");
  const Index n = lower.size();
  Matrix a(2 * n, n);
  a << Matrix::Identity(n, n), -Matrix::Identity(n, n);
  Vector b(2 * n);
  b << upper, -lower;
  return PolyhedralSet(std::move(a), std::move(b), Matrix(0, n), Vector(0));
}

PolyhedralSet PolyhedralSet::singleton(const Vector& point) {
  const Index n = point.size();
  return PolyhedralSet(Matrix(0, n), Vector(0), Matrix::Identity(n, n), point);
}

double PolyhedralSet::violation(const Vector& x) const {
  require_dim(x.size(), dim_, "PolyhedralSet::violation");
  double v = 0.0;
  if (num_ineq() > 0) v = std::max(v, (ineq_lhs_ * x - ineq_rhs_).maxCoeff());
  if (num_eq() > 0) v = std::max(v, (eq_lhs_ * x - eq_rhs_).cwiseAbs().maxCoeff());
  return v;
}

PolyhedralSet PolyhedralSet::with_paired_rows_as_equalities(double tol) const {
  const Index m = num_ineq();
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  std::vector<Index> keep;
  std::vector<Index> pairs;
  for (Index i = 0; i < m; ++i) {
    if (used[i]) continue;
    for (Index j = i + 1; j < m; ++j) {
      if (used[j]) continue;
      const double scale = 1.0 + ineq_lhs_.row(i).cwiseAbs().maxCoeff();
      if ((ineq_lhs_.row(i) + ineq_lhs_.row(j)).cwiseAbs().maxCoeff() <= tol * scale &&
          std::abs(ineq_rhs_(i) + ineq_rhs_(j)) <= tol * (1.0 + std::abs(ineq_rhs_(i)))) {
        used[i] = used[j] = true;
        pairs.push_back(i);
        break;
      }
    }
    if (!used[i]) keep.push_back(i);
  }
  const Index k = num_eq();
  const Index np = static_cast<Index>(pairs.size());
  Matrix a(static_cast<Index>(keep.size()), dim_);
  Vector b(a.rows());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    a.row(static_cast<Index>(r)) = ineq_lhs_.row(keep[r]);
    b(static_cast<Index>(r)) = ineq_rhs_(keep[r]);
  }
  Matrix e(k + np, dim_);
  Vector d(k + np);
  e.topRows(k) = eq_lhs_;
  d.head(k) = eq_rhs_;
  for (Index r = 0; r < np; ++r) {
    e.row(k + r) = ineq_lhs_.row(pairs[r]);
    d(k + r) = ineq_rhs_(pairs[r]);
  }
  return PolyhedralSet(std::move(a), std::move(b), std::move(e), std::move(d));
}

PolyhedralSet PolyhedralSet::fix_leading(const Vector& fixed) const {
  const Index p = fixed.size();
  if (p > dim_) throw DimensionMismatch("fix_leading: more fixed coordinates than the dimension");
  const Index rest = dim_ - p;
  Matrix a = ineq_lhs_.rightCols(rest);
  Vector b = ineq_rhs_ - ineq_lhs_.leftCols(p) * fixed;
  Matrix e = eq_lhs_.rightCols(rest);
  Vector d = eq_rhs_ - eq_lhs_.leftCols(p) * fixed;
  return PolyhedralSet(std::move(a), std::move(b), std::move(e), std::move(d));
}

bool PolyhedralSet::operator==(const PolyhedralSet& other) const {
  return dim_ == other.dim_ && same_matrix(ineq_lhs_, other.ineq_lhs_) &&
         same_matrix(ineq_rhs_, other.ineq_rhs_) && same_matrix(eq_lhs_, other.eq_lhs_) &&
         same_matrix(eq_rhs_, other.eq_rhs_);
}

bool contains(const PolyhedralSet& set, const Vector& x, double tol) {
  require_dim(x.size(), set.dim(), "contains");
  return set.violation(x) <= tol;
}

bool is_empty(const PolyhedralSet& set, const Tolerances& tol) {
  return !solve_feasibility(set.eq_lhs(), set.eq_rhs(), set.ineq_lhs(), set.ineq_rhs(), tol).optimal();
}

bool in_recession_cone(const PolyhedralSet& set, const Vector& d, double tol) {
  require_dim(d.size(), set.dim(), "in_recession_cone");
  const double scale = std::max(1.0, d.norm());
  if (set.num_eq() > 0 && (set.eq_lhs() * d).cwiseAbs().maxCoeff() > tol * scale) return false;
  if (set.num_ineq() > 0 && (set.ineq_lhs() * d).maxCoeff() > tol * scale) return false;
  return true;
}

namespace {

// Calls fn(indices) for every k-subset of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_combination(Index n, Index k, Fn&& fn) {
  if (k > n) return;
  std::vector<Index> idx(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    fn(idx);
    Index i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

Matrix gather_rows(const Matrix& a, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = a.row(rows[r]);
  return out;
}

bool push_unique(std::vector<Vector>& list, const Vector& v, double tol) {
  for (const Vector& w : list) {
    if ((w - v).cwiseAbs().maxCoeff() <= tol) return false;
  }
  list.push_back(v);
  return true;
}

// Stack storage for the d x d subsystems of small sets.
constexpr Index kSmallDim = 10;
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kSmallDim, kSmallDim>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kSmallDim, 1>;

// Solves every d-row subsystem of ap s = b and keeps the feasible solutions.
template <class Mat, class Vec>
void collect_vertices(const Matrix& ap, const Vector& b, const Vector& z0, const Matrix& to_z, double feas,
                      double cmp, std::vector<Vector>& out) {
  const Index m = ap.rows();
  const Index d = ap.cols();
  Mat sub(d, d);
  Vec rhs(d);
  for_each_combination(m, d, [&](const std::vector<Index>& rows) {
    for (Index j = 0; j < d; ++j) {
      sub.row(j) = ap.row(rows[j]);
      rhs(j) = b(rows[j]);
    }
    Eigen::FullPivLU<Mat> lu(sub);
    lu.setThreshold(1e-10);
    if (lu.rank() < d) return;
    const Vec s = lu.solve(rhs);
    for (Index i = 0; i < m; ++i) {
      if (ap.row(i).dot(s) - b(i) > feas * (1.0 + std::abs(b(i)))) return;
    }
    push_unique(out, z0 + to_z * s, cmp);
  });
}

}  // namespace

VertexSet enumerate_vertices(const PolyhedralSet& set, const EnumerationCaps& caps, const Tolerances& tol) {
  if (is_empty(set, tol)) throw EmptySet("enumerate_vertices: empty set");
  const Index n = set.dim();

  // Affine hull of the equalities: z = z0 + basis * t.
  Matrix basis = Matrix::Identity(n, n);
  Vector z0 = Vector::Zero(n);
  if (set.num_eq() > 0) {
    Eigen::JacobiSVD<Matrix> svd(set.eq_lhs(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double thresh = 1e-10 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > thresh) ++rank;
    svd.setThreshold(thresh / std::max(1.0, sv.size() ? sv(0) : 1.0));
    z0 = svd.solve(set.eq_rhs());
    basis = svd.matrixV().rightCols(n - rank);
  }

  // Reduced inequalities in t, rows normalized; constant rows are dropped
  // (they are satisfied because the set is nonempty).
  Matrix a = set.ineq_lhs() * basis;
  Vector b = set.ineq_rhs() - set.ineq_lhs() * z0;
  std::vector<Index> live;
  for (Index i = 0; i < a.rows(); ++i) {
    const double nrm = a.row(i).norm();
    if (nrm > 1e-12 * std::max(1.0, set.ineq_lhs().row(i).norm())) {
      a.row(i) /= nrm;
      b(i) /= nrm;
      live.push_back(i);
    }
  }
  a = gather_rows(a, live);
  {
    Vector bl(static_cast<Index>(live.size()));
    for (std::size_t r = 0; r < live.size(); ++r) bl(static_cast<Index>(r)) = b(live[r]);
    b = bl;
  }
  const Index m = a.rows();
  const Index r = basis.cols();

  // Lineality space = null(a); the pointed part lives in its complement.
  Matrix lineality = Matrix::Identity(r, r);
  Matrix pointed(r, 0);
  if (m > 0 && r > 0) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > 1e-10) ++rank;
    pointed = svd.matrixV().leftCols(rank);
    lineality = svd.matrixV().rightCols(r - rank);
  }
  const Index d = pointed.cols();
  if (d > caps.dim_cap || m > caps.row_cap) {
    throw CapExceeded("enumerate_vertices: reduced dimension " + std::to_string(d) + " with " +
                      std::to_string(m) + " rows exceeds caps (" + std::to_string(caps.dim_cap) + ", " +
                      std::to_string(caps.row_cap) + ")");
  }
  const Matrix ap = a * pointed;  // m x d
  const Matrix to_z = basis * pointed;

  VertexSet out;
  const double feas = 1e-8;
  if (d == 0) {
    out.vertices.push_back(z0);
  } else {
    if (d <= kSmallDim) {
      collect_vertices<SmallMatrix, SmallVector>(ap, b, z0, to_z, feas, tol.cmp, out.vertices);
    } else {
      collect_vertices<Matrix, Vector>(ap, b, z0, to_z, feas, tol.cmp, out.vertices);
    }

    // Extreme rays of the pointed cone {s : ap s <= 0}.
    auto try_direction = [&](const Vector& dir) {
      for (double sgn : {1.0, -1.0}) {
        const Vector v = sgn * dir;
        if ((ap * v).maxCoeff() <= feas) {
          Vector ray = to_z * v;
          const double nrm = ray.norm();
          if (nrm > 1e-12) push_unique(out.recession_rays, ray / nrm, tol.cmp);
        }
      }
    };
    // Stiemke: with ap of full column rank, {s : ap s <= 0} = {0} iff some
    // y > 0 has ap^T y = 0. One LP then replaces the ray enumeration.
    const bool trivial_cone =
        m > d && solve_feasibility(ap.transpose(), Vector::Zero(d), -Matrix::Identity(m, m), -Vector::Ones(m), tol)
                     .optimal();
    if (trivial_cone) {
    } else if (d == 1) {
      try_direction(Vector::Ones(1));
    } else {
      for_each_combination(m, d - 1, [&](const std::vector<Index>& rows) {
        const Matrix sub = gather_rows(ap, rows);
        Eigen::FullPivLU<Matrix> lu(sub);
        lu.setThreshold(1e-10);
        if (lu.rank() < d - 1) return;
        const Matrix ker = lu.kernel();
        if (ker.cols() != 1) return;
        try_direction(ker.col(0).normalized());
      });
    }
  }
  for (Index j = 0; j < lineality.cols(); ++j) out.lineality.push_back(basis * lineality.col(j));
  out.is_bounded = out.recession_rays.empty() && out.lineality.empty();
  return out;
}

DistanceResult distance(const PolyhedralSet& set, const Vector& x, const Tolerances& tol, const QpOptions& opt) {
  require_dim(x.size(), set.dim(), "distance");
  DistanceResult out;
  out.nearest = solve_projection_qp({x, set}, tol, opt);
  out.value = (x - out.nearest).norm();
  return out;
}

namespace {

bool cone_within(const VertexSet& gens, const PolyhedralSet& other, double tol) {
  for (const Vector& r : gens.recession_rays)
    if (!in_recession_cone(other, r, tol)) return false;
  for (const Vector& l : gens.lineality)
    if (!in_recession_cone(other, l, tol) || !in_recession_cone(other, -l, tol)) return false;
  return true;
}

// Raises h to max over pts of d(p, set). d(., set) is 1-Lipschitz, so a point
// within h - d(q, set) of an evaluated q is skipped; points are taken in
// order of decreasing violation, and each QP starts from the nearest
// evaluated projection.
void one_sided_sup(const std::vector<Vector>& pts, const PolyhedralSet& set, const Tolerances& tol, double& h) {
  const Index np = static_cast<Index>(pts.size());
  Vector norms_ineq = set.ineq_lhs().rowwise().norm();
  Vector norms_eq = set.eq_lhs().rowwise().norm();
  std::vector<double> lower(pts.size(), 0.0);
  for (Index i = 0; i < np; ++i) {
    const Vector& p = pts[static_cast<std::size_t>(i)];
    double lb = 0.0;
    for (Index r = 0; r < set.num_ineq(); ++r) {
      if (norms_ineq(r) > 0) lb = std::max(lb, (set.ineq_lhs().row(r).dot(p) - set.ineq_rhs()(r)) / norms_ineq(r));
    }
    for (Index r = 0; r < set.num_eq(); ++r) {
      if (norms_eq(r) > 0) lb = std::max(lb, std::abs(set.eq_lhs().row(r).dot(p) - set.eq_rhs()(r)) / norms_eq(r));
    }
    lower[static_cast<std::size_t>(i)] = lb;
  }
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return lower[x] > lower[y]; });

  struct Done {
    const Vector* p;
    Vector proj;
    double dist;
  };
  std::vector<Done> done;
  for (std::size_t i : order) {
    const Vector& p = pts[i];
    if (lower[i] <= 0.0 && contains(set, p, tol.feas)) continue;
    double ub = kInf;
    const Done* nearest = nullptr;
    for (const Done& d : done) {
      const double gap = (p - *d.p).norm();
      if (gap + d.dist < ub) {
        ub = gap + d.dist;
        nearest = &d;
      }
    }
    if (ub <= h) continue;
    QpOptions opt;
    if (nearest) opt.hint = nearest->proj;
    const DistanceResult r = distance(set, p, tol, opt);
    h = std::max(h, r.value);
    done.push_back({&p, r.nearest, r.value});
  }
}

}  // namespace

HausdorffResult hausdorff(const PolyhedralSet& a, const VertexSet& va, const PolyhedralSet& b,
                          const VertexSet& vb, const Tolerances& tol) {
  require_dim(b.dim(), a.dim(), "hausdorff");
  HausdorffResult out;
  if (!cone_within(va, b, tol.cmp) || !cone_within(vb, a, tol.cmp)) {
    out.value = kInf;
    out.exact = false;
    return out;
  }
  // d(., convex set) is convex and invariant along the common recession
  // cone, so the one-sided suprema are attained at vertices.
  double h = 0.0;
  one_sided_sup(va.vertices, b, tol, h);
  one_sided_sup(vb.vertices, a, tol, h);
  out.value = h;
  return out;
}

HausdorffResult hausdorff(const PolyhedralSet& a, const PolyhedralSet& b, const EnumerationCaps& caps,
                          const Tolerances& tol) {
  return hausdorff(a, enumerate_vertices(a, caps, tol), b, enumerate_vertices(b, caps, tol), tol);
}

double union_distance(std::span<const PolyhedralSet> pieces, const Vector& x, const Tolerances& tol) {
  double best = kInf;
  bool any = false;
  for (const PolyhedralSet& piece : pieces) {
    try {
      best = std::min(best, distance(piece, x, tol).value);
      any = true;
    } catch (const EmptySet&) {
    }
    if (best == 0.0) break;
  }
  if (!any) throw EmptySet("union_distance: every piece is empty");
  return best;
}

}  // namespace avieb
