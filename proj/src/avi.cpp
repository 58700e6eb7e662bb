#include "avieb/avi.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace avieb {

namespace {

constexpr double kZeroRow = 1e-12;
constexpr double kRankTol = 1e-10;

// Appends rows to a growing (lhs, rhs) pair.
struct RowBuffer {
  std::vector<Vector> rows;
  std::vector<double> rhs;

  void add(const Vector& a, double b) {
    rows.push_back(a);
    rhs.push_back(b);
  }

  Matrix lhs(Index n) const {
    Matrix out(static_cast<Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = rows[i].transpose();
    return out;
  }

  Vector rhs_vector() const { return Eigen::Map<const Vector>(rhs.data(), static_cast<Index>(rhs.size())); }
};

// Drops rows that vanish. Returns false if a vanishing row is violated.
bool clean_rows(RowBuffer& buf, bool equality, double tol) {
  RowBuffer kept;
  for (std::size_t i = 0; i < buf.rows.size(); ++i) {
    if (buf.rows[i].lpNorm<Eigen::Infinity>() > kZeroRow) {
      kept.add(buf.rows[i], buf.rhs[i]);
      continue;
    }
    const bool ok = equality ? std::abs(buf.rhs[i]) <= tol : buf.rhs[i] >= -tol;
    if (!ok) return false;
  }
  buf = std::move(kept);
  return true;
}

// x-space description of the piece for `active` at y, or nullopt when the
// active normals are dependent or a vanishing row is violated.
std::optional<PolyhedralSet> eliminate_multipliers(const AviInstance& inst, const ActiveSet& active,
                                                   const Vector& y, const Tolerances& tol) {
  const Index n = inst.dim();
  const Index k = static_cast<Index>(active.rows.size());
  const Matrix& a = inst.c_set().ineq_lhs();
  const Vector& alpha = inst.c_set().ineq_rhs();
  const Matrix& m = inst.m_op();
  const Vector shifted = y - inst.q();

  RowBuffer eq;
  RowBuffer ineq;
  if (k == 0) {
    for (Index i = 0; i < n; ++i) eq.add(m.row(i).transpose(), shifted(i));
  } else {
    if (k > n) return std::nullopt;
    Matrix normals(n, k);
    for (Index j = 0; j < k; ++j) normals.col(j) = a.row(active.rows[static_cast<std::size_t>(j)]).transpose();
    Eigen::FullPivLU<Matrix> lu(normals);
    lu.setThreshold(kRankTol);
    if (lu.rank() < k) return std::nullopt;

    Eigen::HouseholderQR<Matrix> qr(normals);
    const Matrix q_full = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix r1 = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    // lambda = G (y - q - M x) with G = R1^{-1} Q1^T.
    const Matrix g = r1.triangularView<Eigen::Upper>().solve(q_full.leftCols(k).transpose());
    const Matrix q2 = q_full.rightCols(n - k);

    const Matrix q2m = q2.transpose() * m;
    const Vector q2s = q2.transpose() * shifted;
    for (Index i = 0; i < n - k; ++i) eq.add(q2m.row(i).transpose(), q2s(i));
    for (Index row : active.rows) eq.add(a.row(row).transpose(), alpha(row) + a.row(row).dot(y));

    const Matrix gm = g * m;
    const Vector gs = g * shifted;
    for (Index j = 0; j < k; ++j) ineq.add(gm.row(j).transpose(), gs(j));
  }
  for (Index i = 0; i < a.rows(); ++i) {
    if (active.contains(i)) continue;
    ineq.add(a.row(i).transpose(), alpha(i) + a.row(i).dot(y));
  }
  if (!clean_rows(eq, true, tol.feas) || !clean_rows(ineq, false, tol.feas)) return std::nullopt;
  return PolyhedralSet(ineq.lhs(n), ineq.rhs_vector(), eq.lhs(n), eq.rhs_vector());
}

VertexSet project_generators(const VertexSet& full, Index n, const Tolerances& tol) {
  VertexSet out;
  out.is_bounded = full.is_bounded;
  auto push_unique = [&](std::vector<Vector>& list, const Vector& v) {
    for (const auto& w : list) {
      if ((w - v).lpNorm<Eigen::Infinity>() <= tol.cmp) return;
    }
    list.push_back(v);
  };
  for (const auto& v : full.vertices) push_unique(out.vertices, v.head(n));
  for (const auto& r : full.recession_rays) {
    const Vector d = r.head(n);
    if (d.norm() > kZeroRow) push_unique(out.recession_rays, d / d.norm());
  }
  for (const auto& l : full.lineality) {
    const Vector d = l.head(n);
    if (d.norm() > kZeroRow) push_unique(out.lineality, d / d.norm());
  }
  if (out.recession_rays.empty() && out.lineality.empty()) out.is_bounded = true;
  return out;
}

std::optional<InversePiece> make_piece(const AviInstance& inst, const ActiveSet& active, const Vector& y,
                                       const EnumerationOptions& opt, const Tolerances& tol) {
  auto x_set = eliminate_multipliers(inst, active, y, tol);
  if (!x_set || is_empty(*x_set, tol)) return std::nullopt;
  InversePiece piece{active, std::move(*x_set), {}};
  if (opt.with_generators) {
    const PolyhedralSet section =
        build_kkt_piece(inst, active).polyhedron_yxl.fix_leading(y).with_paired_rows_as_equalities();
    try {
      piece.generators = project_generators(enumerate_vertices(section, opt.caps, tol), inst.dim(), tol);
    } catch (const EmptySet&) {
      return std::nullopt;  // x-set feasible only within tolerance; the KKT section is not
    }
  }
  return piece;
}

}  // namespace

AviInstance::AviInstance(Matrix m_op, Vector q, PolyhedralSet c_set, const Tolerances& tol)
    : m_op_(std::move(m_op)), q_(std::move(q)), c_set_(std::move(c_set)) {
  require_dim(m_op_.rows(), q_.size(), "AVI matrix rows");
  require_dim(m_op_.cols(), q_.size(), "AVI matrix columns");
  require_dim(c_set_.dim(), q_.size(), "AVI constraint set");
  if (c_set_.num_eq() != 0) throw Error("AVI constraint set must be given by inequalities only");
  if (is_empty(c_set_, tol)) throw EmptySet("AVI constraint set is empty");
}

bool AviInstance::operator==(const AviInstance& other) const {
  return same_matrix(m_op_, other.m_op_) && same_matrix(q_, other.q_) && c_set_ == other.c_set_;
}

bool ActiveSet::contains(Index i) const { return std::binary_search(rows.begin(), rows.end(), i); }

std::string ActiveSet::to_string() const {
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out << ',';
    out << rows[i] + 1;
  }
  out << '}';
  return out.str();
}

ActiveSet active_set_from_mask(std::uint64_t mask, Index m) {
  ActiveSet s;
  for (Index i = 0; i < m; ++i) {
    if (mask & (std::uint64_t{1} << i)) s.rows.push_back(i);
  }
  return s;
}

ResidualValue residual(const AviInstance& inst, const Vector& x, const Tolerances& tol, const QpOptions& opt) {
  require_dim(x.size(), inst.dim(), "residual point");
  const Vector u = x - inst.m_op() * x - inst.q();
  ResidualValue out;
  out.projected_point = solve_projection_qp({u, inst.c_set()}, tol, opt);
  out.r = x - out.projected_point;
  out.norm = out.r.norm();
  return out;
}

bool is_solution(const AviInstance& inst, const Vector& x, double tol, const Tolerances& ktol) {
  require_dim(x.size(), inst.dim(), "candidate solution");
  if (!contains(inst.c_set(), x, tol)) return false;
  const Vector w = inst.m_op() * x + inst.q();
  LinearProgram lp{w, inst.c_set().ineq_lhs(), inst.c_set().ineq_rhs(), Matrix(0, x.size()), Vector(0)};
  const SolveStatus s = solve_lp(lp, ktol);
  if (!s.optimal()) return false;
  const double at_x = w.dot(x);
  return s.value >= at_x - tol * (1.0 + std::abs(at_x));
}

KktPiece build_kkt_piece(const AviInstance& inst, const ActiveSet& active) {
  const Index n = inst.dim();
  const Index m = inst.num_constraints();
  const Matrix& a = inst.c_set().ineq_lhs();
  const Vector& alpha = inst.c_set().ineq_rhs();
  const Index cols = 2 * n + m;

  Matrix eq = Matrix::Zero(n, cols);
  eq.leftCols(n).setIdentity();
  eq.middleCols(n, n) = -inst.m_op();
  eq.rightCols(m) = -a.transpose();

  Matrix ineq = Matrix::Zero(3 * m, cols);
  Vector rhs = Vector::Zero(3 * m);
  for (Index i = 0; i < m; ++i) {
    const Index r = 3 * i;
    ineq.block(r, 0, 1, n) = -a.row(i);
    ineq.block(r, n, 1, n) = a.row(i);
    rhs(r) = alpha(i);
    if (active.contains(i)) {
      ineq.block(r + 1, 0, 1, n) = a.row(i);
      ineq.block(r + 1, n, 1, n) = -a.row(i);
      rhs(r + 1) = -alpha(i);
    } else {
      ineq(r + 1, 2 * n + i) = 1.0;
    }
    ineq(r + 2, 2 * n + i) = -1.0;
  }
  return {active, PolyhedralSet(std::move(ineq), std::move(rhs), std::move(eq), inst.q())};
}

bool satisfies_kkt_system(const AviInstance& inst, const ActiveSet& active, const Vector& y, const Vector& x,
                          const Vector& lambda, double tol) {
  const Matrix& a = inst.c_set().ineq_lhs();
  const Vector& alpha = inst.c_set().ineq_rhs();
  const Vector balance = y - inst.m_op() * x - a.transpose() * lambda - inst.q();
  if (balance.lpNorm<Eigen::Infinity>() > tol) return false;
  for (Index i = 0; i < a.rows(); ++i) {
    const double slack = a.row(i).dot(x - y) - alpha(i);
    if (active.contains(i)) {
      if (std::abs(slack) > tol || lambda(i) < -tol) return false;
    } else if (slack > tol || std::abs(lambda(i)) > tol) {
      return false;
    }
  }
  return true;
}

std::vector<InversePiece> inverse_residual(const AviInstance& inst, const Vector& y, const EnumerationOptions& opt,
                                           const Tolerances& tol) {
  require_dim(y.size(), inst.dim(), "residual value");
  const Index m = inst.num_constraints();
  if (static_cast<std::size_t>(m) > opt.active_set_cap || m >= 63) {
    throw CapExceeded("active-set enumeration over " + std::to_string(m) + " constraints exceeds cap " +
                      std::to_string(opt.active_set_cap));
  }
  const std::size_t count = std::size_t{1} << m;
  std::vector<std::optional<InversePiece>> slots(count);
  parallel_for(count, opt.threads, [&](std::size_t mask) {
    const ActiveSet active = active_set_from_mask(mask, m);
    if (static_cast<Index>(active.rows.size()) > inst.dim()) return;
    slots[mask] = make_piece(inst, active, y, opt, tol);
  });
  std::vector<InversePiece> pieces;
  for (auto& s : slots) {
    if (s) pieces.push_back(std::move(*s));
  }
  return pieces;
}

std::vector<InversePiece> enumerate_solution_set(const AviInstance& inst, const EnumerationOptions& opt,
                                                 const Tolerances& tol) {
  return inverse_residual(inst, Vector::Zero(inst.dim()), opt, tol);
}

bool is_separable(const AviInstance& inst) {
  const Matrix& m = inst.m_op();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  const Matrix& a = inst.c_set().ineq_lhs();
  for (Index i = 0; i < a.rows(); ++i) {
    if ((a.row(i).array() != 0.0).count() > 1) return false;
  }
  return true;
}

std::vector<InversePiece> enumerate_solution_set_separable(const AviInstance& inst, std::size_t max_pieces,
                                                           const Tolerances& tol) {
  if (!is_separable(inst)) throw Error("instance is not separable");
  const Index n = inst.dim();
  const Matrix& a = inst.c_set().ineq_lhs();
  const Vector& alpha = inst.c_set().ineq_rhs();

  struct Coordinate {
    std::vector<Index> rows;  // original constraint indices
    std::vector<InversePiece> pieces;
  };
  std::vector<Coordinate> coords(static_cast<std::size_t>(n));
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < n; ++j) {
      if (a(i, j) != 0.0) coords[static_cast<std::size_t>(j)].rows.push_back(i);
    }
  }

  std::size_t total = 1;
  for (Index j = 0; j < n; ++j) {
    auto& c = coords[static_cast<std::size_t>(j)];
    const Index mj = static_cast<Index>(c.rows.size());
    Matrix aj(mj, 1);
    Vector bj(mj);
    for (Index r = 0; r < mj; ++r) {
      aj(r, 0) = a(c.rows[static_cast<std::size_t>(r)], j);
      bj(r) = alpha(c.rows[static_cast<std::size_t>(r)]);
    }
    const AviInstance sub(Matrix::Constant(1, 1, inst.m_op()(j, j)), Vector::Constant(1, inst.q()(j)),
                          PolyhedralSet(aj, bj), tol);
    c.pieces = enumerate_solution_set(sub, {}, tol);
    if (c.pieces.empty()) return {};
    total *= c.pieces.size();
    if (total > max_pieces) {
      throw CapExceeded("separable solution set has more than " + std::to_string(max_pieces) + " pieces");
    }
  }

  std::vector<InversePiece> out;
  out.reserve(total);
  std::vector<std::size_t> digit(static_cast<std::size_t>(n), 0);
  for (std::size_t p = 0; p < total; ++p) {
    // Mixed-radix digits with the last coordinate varying fastest.
    std::size_t rest = p;
    for (Index j = n - 1; j >= 0; --j) {
      const std::size_t base = coords[static_cast<std::size_t>(j)].pieces.size();
      digit[static_cast<std::size_t>(j)] = rest % base;
      rest /= base;
    }

    RowBuffer eq;
    RowBuffer ineq;
    ActiveSet active;
    std::vector<Vector> vertices{Vector::Zero(n)};
    VertexSet gens;
    for (Index j = 0; j < n; ++j) {
      const auto& c = coords[static_cast<std::size_t>(j)];
      const InversePiece& sub = c.pieces[digit[static_cast<std::size_t>(j)]];
      const PolyhedralSet& s = sub.x_set;
      for (Index r = 0; r < s.num_eq(); ++r) {
        Vector row = Vector::Zero(n);
        row(j) = s.eq_lhs()(r, 0);
        eq.add(row, s.eq_rhs()(r));
      }
      for (Index r = 0; r < s.num_ineq(); ++r) {
        Vector row = Vector::Zero(n);
        row(j) = s.ineq_lhs()(r, 0);
        ineq.add(row, s.ineq_rhs()(r));
      }
      for (Index r : sub.active.rows) active.rows.push_back(c.rows[static_cast<std::size_t>(r)]);

      std::vector<Vector> next;
      for (const auto& v : vertices) {
        for (const auto& w : sub.generators.vertices) {
          Vector u = v;
          u(j) = w(0);
          next.push_back(std::move(u));
          if (next.size() > max_pieces) throw CapExceeded("separable piece has too many vertices");
        }
      }
      vertices = std::move(next);
      for (const auto& r : sub.generators.recession_rays) {
        Vector d = Vector::Zero(n);
        d(j) = r(0);
        gens.recession_rays.push_back(d);
      }
      if (!sub.generators.lineality.empty()) gens.lineality.push_back(Vector::Unit(n, j));
    }
    std::sort(active.rows.begin(), active.rows.end());
    gens.vertices = std::move(vertices);
    gens.is_bounded = gens.recession_rays.empty() && gens.lineality.empty();
    out.push_back({std::move(active), PolyhedralSet(ineq.lhs(n), ineq.rhs_vector(), eq.lhs(n), eq.rhs_vector()),
                   std::move(gens)});
  }
  return out;
}

std::vector<PolyhedralSet> piece_sets(std::span<const InversePiece> pieces) {
  std::vector<PolyhedralSet> out;
  out.reserve(pieces.size());
  for (const auto& p : pieces) out.push_back(p.x_set);
  return out;
}

double distance_to_pieces(std::span<const InversePiece> pieces, const Vector& x, const Tolerances& tol) {
  if (pieces.empty()) throw EmptySet("distance to an empty union of pieces");
  double best = kInf;
  for (const auto& p : pieces) {
    QpOptions opt;
    if (!p.generators.vertices.empty()) opt.hint = p.generators.vertices.front();
    best = std::min(best, distance(p.x_set, x, tol, opt).value);
  }
  return best;
}

}  // namespace avieb
