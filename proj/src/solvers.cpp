#include "avieb/solvers.hpp"

#include <cmath>

namespace avieb {

namespace {

constexpr double kDivergence = 1e9;
constexpr double kTailFloor = 1e-10;

}  // namespace

const char* to_string(Method m) {
  return m == Method::extragradient ? "extragradient" : "projected_fixed_point";
}

Method method_from_string(const std::string& s) {
  if (s == "extragradient") return Method::extragradient;
  if (s == "projected_fixed_point" || s == "projection") return Method::projected_fixed_point;
  throw Error("unknown method \"" + s + "\"");
}

const char* to_string(SolveOutcome o) {
  switch (o) {
    case SolveOutcome::converged: return "converged";
    case SolveOutcome::max_iters: return "max_iters";
    case SolveOutcome::diverged: return "diverged";
  }
  return "?";
}

double operator_norm_estimate(const Matrix& m, int iterations) {
  if (m.size() == 0) return 0.0;
  Vector v = Vector::Ones(m.cols()) / std::sqrt(static_cast<double>(m.cols()));
  double sigma = 0.0;
  for (int i = 0; i < iterations; ++i) {
    const Vector w = m.transpose() * (m * v);
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    v = w / nrm;
    sigma = std::sqrt(nrm);
  }
  return std::max(sigma, (m * v).norm());
}

SolveTrace solve(const AviInstance& inst, const SolverConfig& cfg, const Tolerances& tol) {
  const Index n = inst.dim();
  if (cfg.step < 0.0 || !std::isfinite(cfg.step)) throw Error("step must be positive and finite");
  if (cfg.stop_residual < tol.cmp) throw Error("stop_residual must be at least tol_cmp");
  SolveTrace trace;
  trace.step = cfg.step > 0.0 ? cfg.step : 0.3 / (1.0 + operator_norm_estimate(inst.m_op()));
  const double tau = trace.step;
  Vector x = cfg.x0 ? *cfg.x0 : Vector::Zero(n);
  require_dim(x.size(), n, "initial point");

  const PolyhedralSet& c = inst.c_set();
  const Matrix& m = inst.m_op();
  const Vector& q = inst.q();
  std::optional<Vector> hint;  // last projected point, always feasible
  auto project = [&](const Vector& u) {
    QpOptions opt;
    opt.hint = hint;
    Vector p = solve_projection_qp({u, c}, tol, opt);
    hint = p;
    return p;
  };
  auto record = [&](int k, const Vector& point) {
    QpOptions opt;
    opt.hint = hint;
    const ResidualValue r = residual(inst, point, tol, opt);
    hint = r.projected_point;
    trace.iterates.push_back({k, r.norm, std::nullopt});
    if (cfg.keep_points) trace.points.push_back(point);
    return r.norm;
  };

  double res = record(0, x);
  trace.outcome = SolveOutcome::max_iters;
  for (int k = 1; res > cfg.stop_residual && k <= cfg.max_iters; ++k) {
    if (cfg.method == Method::projected_fixed_point) {
      x = project(x - tau * (m * x + q));
    } else {
      const Vector xb = project(x - tau * (m * x + q));
      x = project(x - tau * (m * xb + q));
    }
    if (!x.allFinite() || x.norm() > kDivergence) {
      trace.outcome = SolveOutcome::diverged;
      trace.iterates.push_back({k, kInf, std::nullopt});
      if (cfg.keep_points) trace.points.push_back(x);
      res = kInf;
      break;
    }
    res = record(k, x);
  }
  trace.final_x = x;
  trace.final_residual = res;
  trace.converged = res <= cfg.stop_residual;
  if (trace.converged) trace.outcome = SolveOutcome::converged;
  return trace;
}

TailCheck annotate_distances(const AviInstance& inst, SolveTrace& trace, const std::vector<InversePiece>& solution_set,
                             double c_emp, double epsilon, double slack, const Tolerances& tol) {
  if (trace.points.size() != trace.iterates.size()) throw Error("trace has no stored iterates");
  if (solution_set.empty()) throw NoSolution("distances need a nonempty solution set");
  require_dim(solution_set.front().x_set.dim(), inst.dim(), "solution set");
  TailCheck tc;
  tc.c_emp = c_emp;
  tc.epsilon = epsilon;
  tc.slack = slack;
  bool in_tail = false;
  for (std::size_t k = 0; k < trace.points.size(); ++k) {
    auto& meta = trace.iterates[k];
    if (!std::isfinite(meta.residual)) continue;
    const double d = distance_to_pieces(solution_set, trace.points[k], tol);
    meta.distance = d;
    in_tail = in_tail || meta.residual <= epsilon;
    if (!in_tail || meta.residual <= kTailFloor) continue;
    ++tc.checked;
    const double ratio = d / (c_emp * meta.residual);
    tc.max_ratio = std::max(tc.max_ratio, ratio);
    if (ratio > slack) ++tc.violations;
  }
  trace.tail = tc;
  return tc;
}

}  // namespace avieb
