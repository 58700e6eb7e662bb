#include "avieb/gpm.hpp"

#include "avieb/rng.hpp"

#include <algorithm>
#include <cmath>

namespace avieb {

GpMultifunction::GpMultifunction(Matrix a1, Matrix a2, Vector z, Matrix row_x, Matrix row_y, Vector rhs)
    : a1_(std::move(a1)),
      a2_(std::move(a2)),
      z_(std::move(z)),
      row_x_(std::move(row_x)),
      row_y_(std::move(row_y)),
      rhs_(std::move(rhs)) {
  n_ = std::max(a1_.cols(), row_x_.cols());
  r_ = std::max(a2_.cols(), row_y_.cols());
  const Index k = z_.size();
  const Index p = rhs_.size();
  if (a1_.size() == 0) a1_ = Matrix::Zero(k, n_);
  if (a2_.size() == 0) a2_ = Matrix::Zero(k, r_);
  if (row_x_.size() == 0) row_x_ = Matrix::Zero(p, n_);
  if (row_y_.size() == 0) row_y_ = Matrix::Zero(p, r_);
  if (a1_.rows() != k || a2_.rows() != k || a1_.cols() != n_ || a2_.cols() != r_) {
    throw DimensionMismatch("GpMultifunction: equality block dimensions are inconsistent");
  }
  if (row_x_.rows() != p || row_y_.rows() != p || row_x_.cols() != n_ || row_y_.cols() != r_) {
    throw DimensionMismatch("GpMultifunction: inequality rows are inconsistent");
  }
}

bool GpMultifunction::operator==(const GpMultifunction& o) const {
  return same_matrix(a1_, o.a1_) && same_matrix(a2_, o.a2_) && same_matrix(z_, o.z_) &&
         same_matrix(row_x_, o.row_x_) && same_matrix(row_y_, o.row_y_) && same_matrix(rhs_, o.rhs_);
}

PolyhedralSet GpMultifunction::graph() const {
  Matrix a(num_rows(), n_ + r_);
  a.leftCols(n_) = row_x_;
  a.rightCols(r_) = row_y_;
  Matrix e(num_eq(), n_ + r_);
  e.leftCols(n_) = a1_;
  e.rightCols(r_) = a2_;
  return PolyhedralSet(std::move(a), rhs_, std::move(e), z_);
}

bool in_dual_set(const GpMultifunction& f, const DualMultiplier& m, bool require_balance, double tol) {
  if (m.lambda.size() != f.num_eq() || m.gamma.size() != f.num_rows()) return false;
  if (m.gamma.size() && m.gamma.minCoeff() < -tol) return false;
  if (m.lambda.lpNorm<1>() + m.gamma.sum() > 1.0 + tol) return false;
  if (!require_balance) return true;
  const Vector balance = f.a2().transpose() * m.lambda + f.row_y().transpose() * m.gamma;
  return balance.size() == 0 || balance.cwiseAbs().maxCoeff() <= tol;
}

PolyhedralSet evaluate(const GpMultifunction& f, const Vector& x) {
  require_dim(x.size(), f.x_dim(), "GpMultifunction::evaluate");
  return PolyhedralSet(f.row_y(), f.rhs() - f.row_x() * x, f.a2(), f.z() - f.a1() * x);
}

bool domain_contains(const GpMultifunction& f, const Vector& x, const Tolerances& tol) {
  return !is_empty(evaluate(f, x), tol);
}

double g_primal(const GpMultifunction& f, const Vector& x, const Tolerances& tol) {
  require_dim(x.size(), f.x_dim(), "g_primal");
  const Index r = f.y_dim();
  const Index k = f.num_eq();
  const Index p = f.num_rows();
  const Vector eq_res = f.z() - f.a1() * x;  // a2 y - eq_res is the equality residual
  LinearProgram lp;
  lp.objective = Vector::Zero(r + 1);
  lp.objective(r) = 1.0;
  lp.ineq_lhs = Matrix::Zero(2 * k + p + 1, r + 1);
  lp.ineq_rhs = Vector::Zero(2 * k + p + 1);
  lp.ineq_lhs.block(0, 0, k, r) = f.a2();
  lp.ineq_lhs.block(0, r, k, 1).setConstant(-1.0);
  lp.ineq_rhs.head(k) = eq_res;
  lp.ineq_lhs.block(k, 0, k, r) = -f.a2();
  lp.ineq_lhs.block(k, r, k, 1).setConstant(-1.0);
  lp.ineq_rhs.segment(k, k) = -eq_res;
  lp.ineq_lhs.block(2 * k, 0, p, r) = f.row_y();
  lp.ineq_lhs.block(2 * k, r, p, 1).setConstant(-1.0);
  lp.ineq_rhs.segment(2 * k, p) = f.rhs() - f.row_x() * x;
  // The norm term is present even when Z is trivial, so t >= 0 always.
  lp.ineq_lhs(2 * k + p, r) = -1.0;
  lp.eq_lhs = Matrix(0, r + 1);
  lp.eq_rhs = Vector(0);
  const SolveStatus s = solve_lp(lp, tol);
  return s.value;
}

DualValue g_dual_detailed(const GpMultifunction& f, const Vector& x, const Tolerances& tol) {
  require_dim(x.size(), f.x_dim(), "g_dual");
  const Index r = f.y_dim();
  const Index k = f.num_eq();
  const Index p = f.num_rows();
  const Index nv = 2 * k + p;  // lambda+, lambda-, gamma
  const Vector lam_coef = f.a1() * x - f.z();
  const Vector gam_coef = f.row_x() * x - f.rhs();

  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective.resize(nv);
  lp.objective.head(k) = lam_coef;
  lp.objective.segment(k, k) = -lam_coef;
  lp.objective.tail(p) = gam_coef;
  lp.ineq_lhs = Matrix::Zero(nv + 1, nv);
  lp.ineq_rhs = Vector::Zero(nv + 1);
  lp.ineq_lhs.topRows(nv) = -Matrix::Identity(nv, nv);
  lp.ineq_lhs.row(nv).setOnes();
  lp.ineq_rhs(nv) = 1.0;
  lp.eq_lhs = Matrix(r, nv);
  lp.eq_lhs.leftCols(k) = f.a2().transpose();
  lp.eq_lhs.middleCols(k, k) = -f.a2().transpose();
  lp.eq_lhs.rightCols(p) = f.row_y().transpose();
  lp.eq_rhs = Vector::Zero(r);

  const SolveStatus s = solve_lp(lp, tol);
  DualValue out;
  if (!s.optimal()) return out;  // E' empty: max over the empty set
  out.value = s.value;
  const Vector& v = *s.point;
  out.argmax = DualMultiplier{v.head(k) - v.segment(k, k), v.tail(p)};
  return out;
}

double g_dual(const GpMultifunction& f, const Vector& x, const Tolerances& tol) {
  return g_dual_detailed(f, x, tol).value;
}

MinimaxReport verify_minimax(const GpMultifunction& f, const std::vector<Vector>& xs, const Tolerances& tol) {
  MinimaxReport rep;
  for (const Vector& x : xs) {
    MinimaxEntry e;
    e.x = x;
    e.primal = g_primal(f, x, tol);
    e.dual = g_dual(f, x, tol);
    if (std::isinf(e.primal) && std::isinf(e.dual) && (e.primal < 0) == (e.dual < 0)) {
      e.gap = 0.0;
    } else {
      e.gap = std::abs(e.primal - e.dual);
    }
    rep.max_gap = std::max(rep.max_gap, e.gap);
    rep.entries.push_back(std::move(e));
  }
  rep.pass = rep.max_gap <= tol.cmp;
  return rep;
}

DomainReport verify_domain_characterization(const GpMultifunction& f, const std::vector<Vector>& xs,
                                            const Tolerances& tol) {
  DomainReport rep;
  for (const Vector& x : xs) {
    DomainEntry e;
    e.x = x;
    e.member = domain_contains(f, x, tol);
    e.g = g_primal(f, x, tol);
    e.agrees = e.member == (e.g <= tol.cmp);
    if (!e.agrees) ++rep.mismatches;
    rep.entries.push_back(std::move(e));
  }
  rep.pass = rep.mismatches == 0;
  return rep;
}

HausdorffResult section_distance(const GpMultifunction& f, const Vector& x1, const Vector& x2,
                                 const EnumerationCaps& caps, const Tolerances& tol) {
  const PolyhedralSet s1 = evaluate(f, x1);
  const PolyhedralSet s2 = evaluate(f, x2);
  const bool e1 = is_empty(s1, tol);
  const bool e2 = is_empty(s2, tol);
  if (e1 && e2) return {0.0, true};
  if (e1 || e2) return {kInf, false};
  return hausdorff(s1, s2, caps, tol);
}

namespace {

struct DomainSampler {
  const GpMultifunction& f;
  const SamplerConfig& cfg;
  const Tolerances& tol;
  Vector center;
  Vector center_y;
  PolyhedralSet graph;

  DomainSampler(const GpMultifunction& fn, const SamplerConfig& c, const Tolerances& t)
      : f(fn), cfg(c), tol(t), graph(fn.graph()) {
    const SolveStatus s = solve_feasibility(graph.eq_lhs(), graph.eq_rhs(), graph.ineq_lhs(), graph.ineq_rhs(), tol);
    if (!s.optimal()) throw DegenerateSampler("estimate_lipschitz_modulus: dom F is empty");
    center = s.point->head(f.x_dim());
    center_y = s.point->tail(f.y_dim());
  }

  // Gaussian rejection sampling around `around`; falls back to the x-part of
  // the projection of the last draw onto the graph (dom F may be thin).
  std::optional<Vector> draw(SplitMix64& rng, const Vector& around, double radius) const {
    Vector x;
    for (std::size_t a = 0; a < cfg.max_attempts; ++a) {
      x = around + radius * rng.normal_vector(f.x_dim());
      if (domain_contains(f, x, tol)) return x;
    }
    return onto_domain(x);
  }

  // x-part of the projection of (x, center_y) onto the graph.
  std::optional<Vector> onto_domain(const Vector& x) const {
    Vector joint(f.x_dim() + f.y_dim());
    joint.head(f.x_dim()) = x;
    joint.tail(f.y_dim()) = center_y;
    try {
      const Vector p = solve_projection_qp({joint, graph}, tol);
      return Vector(p.head(f.x_dim()));
    } catch (const Error&) {
      return std::nullopt;
    }
  }
};

struct PairOutcome {
  bool drawn = false;
  bool unbounded = false;
  PairRatio pair;
};

PairOutcome sample_pair(const DomainSampler& sampler, std::uint64_t seed, std::size_t index) {
  const auto& ladder = sampler.cfg.radius_ladder;
  const std::size_t l = ladder.size();
  SplitMix64 rng(derive_seed(seed, index));
  PairOutcome out;
  const auto x1 = sampler.draw(rng, sampler.center, ladder[index % l]);
  if (!x1) return out;
  const auto x2 = sampler.draw(rng, *x1, ladder[(index / l) % l]);
  if (!x2) return out;
  const double dx = (*x1 - *x2).norm();
  if (dx < 1e-9) return out;
  out.drawn = true;
  const HausdorffResult h = section_distance(sampler.f, *x1, *x2, sampler.cfg.caps, sampler.tol);
  if (!h.finite()) {
    out.unbounded = true;
    return out;
  }
  out.pair = PairRatio{*x1, *x2, h.value / dx};
  return out;
}

// Random local ascent of the ratio starting from a sampled pair. Proposals
// off dom F are moved onto it, so thin domains are explored too.
PairRatio refine(const DomainSampler& sampler, PairRatio best, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const GpMultifunction& f = sampler.f;
  double sigma = 0.5 * (best.x1 - best.x2).norm();
  int misses = 0;
  auto in_domain = [&](const Vector& x) -> std::optional<Vector> {
    if (domain_contains(f, x, sampler.tol)) return x;
    return sampler.onto_domain(x);
  };
  for (std::size_t step = 0; step < sampler.cfg.refine_steps; ++step) {
    std::optional<Vector> x1 = best.x1;
    std::optional<Vector> x2 = best.x2;
    const std::size_t mode = step % 3;
    if (mode != 1) x1 = in_domain(best.x1 + sigma * rng.normal_vector(f.x_dim()));
    if (mode != 0) x2 = in_domain(best.x2 + sigma * rng.normal_vector(f.x_dim()));
    bool improved = false;
    if (x1 && x2) {
      const double dx = (*x1 - *x2).norm();
      if (dx > 1e-9) {
        const HausdorffResult h = section_distance(f, *x1, *x2, sampler.cfg.caps, sampler.tol);
        if (h.finite() && h.value / dx > best.ratio) {
          best = PairRatio{*x1, *x2, h.value / dx};
          improved = true;
        }
      }
    }
    if (improved) {
      misses = 0;
      sigma *= 1.5;
    } else if (++misses >= 10) {
      sigma *= 0.5;
      misses = 0;
    }
  }
  return best;
}

std::vector<std::size_t> doubling_counts(std::size_t n) {
  std::vector<std::size_t> counts;
  for (std::size_t c = n; c >= 8; c /= 2) counts.push_back(c);
  if (counts.empty() && n > 0) counts.push_back(n);
  std::reverse(counts.begin(), counts.end());
  return counts;
}

}  // namespace

LipschitzEstimate estimate_lipschitz_modulus(const GpMultifunction& f, const SamplerConfig& cfg,
                                             const Tolerances& tol) {
  const DomainSampler sampler(f, cfg, tol);
  std::vector<PairOutcome> outcomes(cfg.num_pairs);
  parallel_for(cfg.num_pairs, cfg.threads,
               [&](std::size_t i) { outcomes[i] = sample_pair(sampler, cfg.master_seed, i); });

  LipschitzEstimate est;
  for (const PairOutcome& o : outcomes) {
    if (!o.drawn) {
      ++est.failed_draws;
    } else if (o.unbounded) {
      ++est.rejected_unbounded;
    } else {
      ++est.accepted_pairs;
    }
  }
  if (est.accepted_pairs == 0) {
    throw DegenerateSampler("estimate_lipschitz_modulus: fewer than 2 usable domain points");
  }

  // Trace over doubling prefixes; each prefix maximum is refined locally.
  std::optional<PairRatio> best;
  std::size_t used = 0;
  std::uint64_t trace_index = 0;
  for (std::size_t count : doubling_counts(cfg.num_pairs)) {
    for (; used < count; ++used) {
      const PairOutcome& o = outcomes[used];
      if (o.drawn && !o.unbounded && (!best || o.pair.ratio > best->ratio)) best = o.pair;
    }
    if (best && cfg.refine_steps > 0) {
      *best = refine(sampler, *best, derive_seed(cfg.master_seed ^ 0x5EED5EEDULL, trace_index++));
    }
    est.trace.emplace_back(count, best ? best->ratio : 0.0);
  }
  if (best && cfg.refine_steps > 0 && cfg.restarts > 0) {
    std::vector<const PairRatio*> ranked;
    for (const PairOutcome& o : outcomes) {
      if (o.drawn && !o.unbounded) ranked.push_back(&o.pair);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const PairRatio* a, const PairRatio* b) { return a->ratio > b->ratio; });
    std::vector<PairRatio> starts;
    for (const PairRatio* p : ranked) {
      if (starts.size() == cfg.restarts) break;
      const bool repeat = std::any_of(starts.begin(), starts.end(), [&](const PairRatio& s) {
        return (s.x1 - p->x1).norm() + (s.x2 - p->x2).norm() <= 1e-9;
      });
      if (!repeat) starts.push_back(*p);
    }
    std::vector<PairRatio> refined(starts.size());
    parallel_for(starts.size(), cfg.threads, [&](std::size_t i) {
      refined[i] = refine(sampler, starts[i], derive_seed(cfg.master_seed ^ 0xA5CE57ULL, i));
    });
    for (const PairRatio& r : refined) {
      if (r.ratio > best->ratio) best = r;
    }
    est.trace.back().second = best->ratio;
  }
  est.witness = best;
  est.c_emp = best ? best->ratio : 0.0;
  return est;
}

HoldoutReport lipschitz_holdout(const GpMultifunction& f, double c_emp, double slack, const SamplerConfig& cfg,
                                const Tolerances& tol) {
  const DomainSampler sampler(f, cfg, tol);
  std::vector<PairOutcome> outcomes(cfg.num_pairs);
  parallel_for(cfg.num_pairs, cfg.threads,
               [&](std::size_t i) { outcomes[i] = sample_pair(sampler, cfg.master_seed, i); });
  HoldoutReport rep;
  for (const PairOutcome& o : outcomes) {
    if (!o.drawn || o.unbounded) continue;
    ++rep.pairs;
    rep.max_ratio = std::max(rep.max_ratio, o.pair.ratio);
    if (o.pair.ratio > slack * c_emp + tol.cmp) ++rep.violations;
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace avieb
