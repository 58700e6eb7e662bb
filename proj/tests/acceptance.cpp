// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include "avieb/avi.hpp"
#include "avieb/bounds.hpp"
#include "avieb/gpm.hpp"
#include "avieb/instgen.hpp"
#include "avieb/optkernel.hpp"
#include "avieb/rng.hpp"
#include "avieb/solvers.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace avieb;

namespace {

// Pinned tolerances.
constexpr double kMinimaxGap = 1e-6;
constexpr double kDomainG = 1e-6;
constexpr double kMinimaxSeconds = 60.0;
constexpr double kHoldoutSlack = 1.05;
constexpr std::size_t kHoldoutPairs = 500;
constexpr std::size_t kTrainPairs = 1000;
constexpr double kVertexTol = 1e-6;
constexpr double kSolutionDistance = 1e-5;
constexpr std::size_t kSampledSolutions = 200;
constexpr double kUnitLow = 0.99;
constexpr double kUnitHigh = 1.01;
constexpr double kLcpLipschitzTol = 1e-6;
constexpr double kSolverResidual = 1e-6;
constexpr int kSolverIters = 10000;
constexpr double kTailSlack = 1.05;
constexpr double kStepFraction = 0.9;  // extragradient step as a fraction of 1/|M|_op
constexpr double kTruncationGrowth = 2.0;
constexpr double kConstantLow = 0.9;
constexpr double kConstantHigh = 1.1;
constexpr double kKernelGap = 1e-7;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct GpmCase {
  std::uint64_t seed;
  GpMultifunction f;
  bool bounded;
};

// n, r, k, p in 1..6 (k in 0..5), half of them with bounded sections.
std::vector<GpmCase> gpm_corpus() {
  std::vector<GpmCase> out;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    SplitMix64 rng(derive_seed(seed, 0xACCE));
    const Index n = 1 + static_cast<Index>(rng.below(6));
    const Index r = 1 + static_cast<Index>(rng.below(6));
    const Index k = static_cast<Index>(rng.below(6));
    const Index p = 1 + static_cast<Index>(rng.below(6));
    const bool bounded = seed % 2 == 0;
    out.push_back({seed, generate_random_gpm(n, r, k, p, bounded, seed), bounded});
  }
  return out;
}

// Ten points per instance: odd ones are x-parts of graph points, even ones
// are free normal draws.
std::vector<Vector> gpm_points(const GpMultifunction& f, std::uint64_t seed) {
  const PolyhedralSet graph = f.graph();
  const bool has_graph = !is_empty(graph);
  std::vector<Vector> xs;
  for (std::uint64_t i = 0; i < 10; ++i) {
    SplitMix64 rng(derive_seed(seed, i));
    if (i % 2 == 1 && has_graph) {
      xs.push_back(solve_projection_qp({2.0 * rng.normal_vector(f.x_dim() + f.y_dim()), graph}).head(f.x_dim()));
    } else {
      xs.push_back(2.0 * rng.normal_vector(f.x_dim()));
    }
  }
  return xs;
}

void criteria_1_2(const std::vector<GpmCase>& corpus) {
  Tolerances tol;
  tol.cmp = kMinimaxGap;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_gap = 0.0;
  std::size_t bad_points = 0;
  std::size_t points = 0;
  std::size_t both_inf = 0;
  std::vector<std::vector<Vector>> all_points;
  for (const auto& c : corpus) {
    auto xs = gpm_points(c.f, c.seed);
    for (const auto& x : xs) {
      ++points;
      const double p = g_primal(c.f, x, tol);
      const double d = g_dual(c.f, x, tol);
      if (std::isinf(p) && std::isinf(d) && p < 0 && d < 0) {
        ++both_inf;
        continue;
      }
      const double gap = std::abs(p - d);
      if (!(gap <= kMinimaxGap)) ++bad_points;
      if (std::isfinite(gap)) worst_gap = std::max(worst_gap, gap);
      else worst_gap = kInf;
    }
    all_points.push_back(std::move(xs));
  }
  const double secs = seconds_since(t0);
  report(1, "minimax equality", bad_points == 0 && secs <= kMinimaxSeconds,
         std::to_string(corpus.size()) + " instances, " + std::to_string(points) + " points, max gap " +
             fmt(worst_gap) + ", both -inf " + std::to_string(both_inf) + ", " + fmt(secs) + " s (limit " +
             fmt(kMinimaxSeconds) + " s)");

  Tolerances dtol;
  dtol.cmp = kDomainG;
  std::size_t mismatches = 0;
  std::size_t members = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& f = corpus[i].f;
    for (const auto& x : all_points[i]) {
      // Membership by LP feasibility of the section, independent of g.
      const bool member = !is_empty(evaluate(f, x), dtol);
      const bool by_g = g_primal(f, x, dtol) <= kDomainG;
      members += member ? 1 : 0;
      mismatches += member != by_g ? 1 : 0;
    }
  }
  report(2, "domain characterization", mismatches == 0,
         std::to_string(points - mismatches) + "/" + std::to_string(points) + " agree (" + std::to_string(members) +
             " members)");
}

// dom F is one point iff every coordinate of x has equal min and max over the graph.
bool single_point_domain(const GpMultifunction& f) {
  const PolyhedralSet graph = f.graph();
  const Index dim = f.x_dim() + f.y_dim();
  for (Index j = 0; j < f.x_dim(); ++j) {
    double range[2];
    for (int s = 0; s < 2; ++s) {
      LinearProgram lp;
      lp.objective = Vector::Unit(dim, j);
      lp.ineq_lhs = graph.ineq_lhs();
      lp.ineq_rhs = graph.ineq_rhs();
      lp.eq_lhs = graph.eq_lhs();
      lp.eq_rhs = graph.eq_rhs();
      lp.sense = s == 0 ? Sense::minimize : Sense::maximize;
      const SolveStatus st = solve_lp(lp);
      if (!st.optimal()) return false;
      range[s] = st.value;
    }
    if (range[1] - range[0] > 1e-7) return false;
  }
  return true;
}

void criterion_3(const std::vector<GpmCase>& corpus) {
  std::size_t instances = 0;
  std::size_t pairs = 0;
  std::size_t violations = 0;
  std::size_t single_point = 0;
  std::size_t degenerate = 0;
  double worst = 0.0;
  std::string first_bad;
  auto run = [&](const std::string& name, const GpMultifunction& f, std::uint64_t seed) {
    SamplerConfig train;
    train.master_seed = seed;
    train.num_pairs = kTrainPairs;
    SamplerConfig fresh = train;
    fresh.master_seed = derive_seed(seed, 0x401D);
    fresh.num_pairs = kHoldoutPairs;
    fresh.refine_steps = 0;
    LipschitzEstimate est;
    try {
      est = estimate_lipschitz_modulus(f, train);
    } catch (const DegenerateSampler&) {
      // A one-point domain has no pairs; the property holds vacuously.
      if (single_point_domain(f)) {
        ++single_point;
      } else {
        ++degenerate;
        if (first_bad.empty()) first_bad = " sampler degenerate on " + name;
      }
      return;
    }
    const HoldoutReport h = lipschitz_holdout(f, est.c_emp, kHoldoutSlack, fresh);
    ++instances;
    pairs += h.pairs;
    violations += h.violations;
    const double rel = est.c_emp > 0 ? h.max_ratio / est.c_emp : (h.max_ratio > 0 ? kInf : 0.0);
    worst = std::max(worst, rel);
    if (h.violations > 0 && first_bad.empty()) first_bad = " first violation on " + name;
  };
  for (const auto& e : canned_suite()) {
    if (const auto* f = std::get_if<GpMultifunction>(&e.item)) run(e.name, *f, 1);
  }
  for (const auto& c : corpus) {
    if (c.bounded) run("seed " + std::to_string(c.seed), c.f, c.seed);
  }
  report(3, "Lipschitz holdout", violations == 0 && instances > 0 && degenerate == 0,
         std::to_string(instances) + " bounded-section instances, " + std::to_string(pairs) + " fresh pairs, " +
             std::to_string(violations) + " violations, max ratio/c_emp " + fmt(worst) + ", one-point domains " +
             std::to_string(single_point) + ", degenerate " + std::to_string(degenerate) + first_bad);
}

struct AviCase {
  std::string name;
  AviInstance inst;
  bool monotone;
};

std::vector<AviCase> avi_corpus() {
  std::vector<AviCase> out;
  for (const auto& e : canned_suite()) {
    if (const auto* a = std::get_if<AviInstance>(&e.item)) {
      // Every canned AVI has a positive semidefinite symmetric part.
      out.push_back({e.name, *a, true});
    }
  }
  const Monotonicity kinds[] = {Monotonicity::strongly_monotone, Monotonicity::monotone_skew,
                                Monotonicity::indefinite};
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 6);
    const Index m = static_cast<Index>((seed * 7) % 9);
    const Monotonicity kind = kinds[seed % 3];
    out.push_back({"random " + std::to_string(seed) + " " + to_string(kind), generate_random_avi(n, m, kind, seed),
                   kind != Monotonicity::indefinite});
  }
  return out;
}

bool symmetric_part_psd(const Matrix& m) {
  const Matrix s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  return eig.eigenvalues().minCoeff() >= -1e-12;
}

void criterion_4(const std::vector<AviCase>& corpus) {
  std::size_t vertices = 0;
  std::size_t bad_vertices = 0;
  std::size_t empty = 0;
  std::string first_bad;
  std::vector<std::pair<const AviCase*, std::vector<InversePiece>>> monotone;
  for (const auto& c : corpus) {
    const auto pieces = enumerate_solution_set(c.inst);
    if (pieces.empty()) {
      ++empty;
      continue;
    }
    for (const auto& p : pieces) {
      for (const auto& v : p.generators.vertices) {
        ++vertices;
        if (!is_solution(c.inst, v, kVertexTol)) {
          ++bad_vertices;
          if (first_bad.empty()) first_bad = " first bad vertex in " + c.name;
        }
      }
    }
    if (c.monotone && symmetric_part_psd(c.inst.m_op())) monotone.emplace_back(&c, pieces);
  }

  // Solutions found by extragradient from random starts, cycling over the
  // monotone instances with a nonempty solution set.
  std::size_t found = 0;
  std::size_t unconverged = 0;
  double worst = 0.0;
  Tolerances fine;
  fine.cmp = 1e-8;
  for (std::size_t i = 0; found < kSampledSolutions && i < 4 * kSampledSolutions; ++i) {
    const auto& [c, pieces] = monotone[i % monotone.size()];
    SplitMix64 rng(derive_seed(0xC0DE, i));
    SolverConfig cfg;
    cfg.x0 = 3.0 * rng.normal_vector(c->inst.dim());
    cfg.stop_residual = 1e-8;
    cfg.max_iters = 100000;
    cfg.keep_points = false;
    const SolveTrace tr = solve(c->inst, cfg, fine);
    if (!tr.converged) {
      ++unconverged;
      continue;
    }
    ++found;
    worst = std::max(worst, distance_to_pieces(pieces, tr.final_x));
  }
  const bool pass = bad_vertices == 0 && found == kSampledSolutions && worst <= kSolutionDistance;
  report(4, "R^-1(0) equals the solution set", pass,
         std::to_string(corpus.size()) + " instances (" + std::to_string(empty) + " without solutions), " +
             std::to_string(vertices - bad_vertices) + "/" + std::to_string(vertices) +
             " vertices pass is_solution at " + fmt(kVertexTol) + ", " + std::to_string(found) +
             " extragradient solutions (" + std::to_string(unconverged) + " runs unconverged), max distance " +
             fmt(worst) + first_bad);
}

void criterion_5() {
  std::size_t checked = 0;
  std::vector<std::string> bad;
  std::string unit;
  for (const auto& e : canned_suite()) {
    const auto* a = std::get_if<AviInstance>(&e.item);
    if (!a) continue;
    ++checked;
    const BoundReport rep = verify_error_bound(*a, ErrorBoundConfig{});
    bool ok = rep.pass() && rep.stabilized && std::isfinite(rep.c_emp);
    if (e.name == "lcp1d" || e.name == "zero_interval" || e.name == "zero_simplex") {
      ok = ok && rep.c_emp >= kUnitLow && rep.c_emp <= kUnitHigh;
      unit += " " + e.name + "=" + fmt(rep.c_emp);
    }
    if (!ok) bad.push_back(e.name);
  }
  std::string detail = std::to_string(checked - bad.size()) + "/" + std::to_string(checked) +
                       " canned AVIs pass and stabilize; c_emp" + unit;
  for (const auto& b : bad) detail += " failed:" + b;
  report(5, "local error bound", bad.empty() && checked > 0, detail);
}

void criterion_6() {
  LipschitzCheckConfig cfg;
  const AviInstance lcp1d(Matrix::Ones(1, 1), -Vector::Ones(1), PolyhedralSet::nonnegative_orthant(1));
  cfg.base_point = Vector::Zero(1);
  const BoundReport one = verify_upper_lipschitz_inverse(lcp1d, cfg);
  const bool lcp_ok = one.pass() && std::abs(one.c_emp - 1.0) <= kLcpLipschitzTol;

  std::size_t checks = 0;
  std::vector<std::string> bad;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 4);
    const Index m = 1 + static_cast<Index>(seed % 6);
    const AviInstance inst = generate_random_avi(n, m, Monotonicity::strongly_monotone, seed);
    std::vector<Vector> bases = {Vector::Zero(n)};
    SplitMix64 rng(derive_seed(seed, 0x5EED));
    // R(x) is in the domain of R^-1 by construction.
    for (int i = 0; i < 5; ++i) bases.push_back(residual(inst, 2.0 * rng.normal_vector(n)).r);
    for (std::size_t i = 0; i < bases.size(); ++i) {
      LipschitzCheckConfig c;
      c.base_point = bases[i];
      c.master_seed = derive_seed(seed, i);
      const BoundReport rep = verify_upper_lipschitz_inverse(inst, c);
      ++checks;
      if (!rep.pass() || !std::isfinite(rep.c_emp)) {
        bad.push_back("seed " + std::to_string(seed) + " base " + std::to_string(i));
      } else {
        worst = std::max(worst, rep.c_emp);
      }
    }
  }
  std::string detail = "1-D c_emp " + fmt(one.c_emp) + "; " + std::to_string(checks - bad.size()) + "/" +
                       std::to_string(checks) + " strongly monotone inclusion checks pass, max c_emp " + fmt(worst);
  for (const auto& b : bad) detail += " failed:" + b;
  report(6, "upper Lipschitz inverse", lcp_ok && bad.empty(), detail);
}

void criterion_7() {
  std::size_t converged = 0;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst = 0.0;
  int max_iters = 0;
  double epsilons = 1.0;
  std::vector<std::string> bad;
  const std::size_t count = 20;
  for (std::uint64_t seed = 1; seed <= count; ++seed) {
    // m > n bounds C, so a solution exists.
    const Index n = 1 + static_cast<Index>(seed % 5);
    const Index m = n + 1 + static_cast<Index>(seed % 3);
    const Monotonicity kind = seed % 2 == 0 ? Monotonicity::strongly_monotone : Monotonicity::monotone_skew;
    const AviInstance inst = generate_random_avi(n, m, kind, seed);
    const std::string name = "seed " + std::to_string(seed) + " " + to_string(kind);
    const auto pieces = solution_set_for(inst);
    if (pieces.empty()) {
      bad.push_back(name + " (no solution)");
      continue;
    }
    // c_emp and epsilon from the largest radius whose trace stabilizes.
    const RadiusSearch rs = find_local_radius(inst, pieces, ErrorBoundConfig{});
    if (!rs.found) {
      bad.push_back(name + " (no stable radius)");
      continue;
    }
    epsilons = std::min(epsilons, rs.epsilon);
    SolverConfig cfg;
    cfg.stop_residual = kSolverResidual;
    cfg.max_iters = kSolverIters;
    // M = 0 (a 1-D skew part) leaves any step admissible.
    const double norm = operator_norm_estimate(inst.m_op());
    cfg.step = norm > 0.0 ? kStepFraction / norm : kStepFraction;
    SolveTrace tr = solve(inst, cfg);
    if (!tr.converged) {
      bad.push_back(name + " (unconverged)");
      continue;
    }
    ++converged;
    max_iters = std::max(max_iters, tr.iterates.back().iter);
    const TailCheck tc = annotate_distances(inst, tr, pieces, rs.c_emp, rs.epsilon, kTailSlack);
    checked += tc.checked;
    violations += tc.violations;
    worst = std::max(worst, tc.max_ratio);
    if (!tc.pass()) bad.push_back(name);
  }
  std::string detail = std::to_string(converged) + "/" + std::to_string(count) + " converge (max " +
                       std::to_string(max_iters) + " iterations), " + std::to_string(checked) +
                       " tail iterates, " + std::to_string(violations) + " violations, max d/(c r) " + fmt(worst) + ", smallest epsilon " + fmt(epsilons) + ", step " +
                       fmt(kStepFraction) + "/|M|";
  for (const auto& b : bad) detail += " failed:" + b;
  report(7, "solver tail bound", bad.empty() && converged == count, detail);
}

void criterion_8() {
  const std::vector<Index> dims = {5, 10, 20, 40};
  const auto h = truncation_study(TruncationFamily{Spectrum::harmonic}, dims, ErrorBoundConfig{});
  const auto c = truncation_study(TruncationFamily{Spectrum::constant}, dims, ErrorBoundConfig{});
  bool nondecreasing = true;
  bool found = true;
  std::string hs;
  std::string cs;
  bool constant_ok = true;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    found = found && h[i].found && c[i].found;
    if (i > 0 && h[i].c_emp < h[i - 1].c_emp) nondecreasing = false;
    constant_ok = constant_ok && c[i].c_emp >= kConstantLow && c[i].c_emp <= kConstantHigh;
    hs += (i ? "," : "") + fmt(h[i].c_emp);
    cs += (i ? "," : "") + fmt(c[i].c_emp);
  }
  const double growth = h.back().c_emp / h.front().c_emp;
  report(8, "truncation study", found && nondecreasing && growth >= kTruncationGrowth && constant_ok,
         "harmonic [" + hs + "] growth " + fmt(growth) + (nondecreasing ? " nondecreasing" : " not monotone") +
             "; constant [" + cs + "]");
}

void criterion_9() {
  SplitMix64 rng(0x9E);
  double worst_dual = 0.0;
  std::size_t optimal = 0;
  std::size_t lp_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const Index n = 1 + static_cast<Index>(rng.below(6));
    const Index m = static_cast<Index>(rng.below(8));
    const LinearProgram lp = oracle::random_feasible_lp(rng, n, m);
    const SolveStatus s = solve_lp(lp);
    if (!s.optimal()) {
      ++lp_bad;
      continue;
    }
    ++optimal;
    const double gap = std::abs(s.value - dual_objective(lp, s));
    worst_dual = std::max(worst_dual, gap);
    lp_bad += gap <= kKernelGap ? 0 : 1;
  }
  double worst_proj = 0.0;
  std::size_t proj_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const Index n = 1 + static_cast<Index>(rng.below(6));
    const Index m = 1 + static_cast<Index>(rng.below(8));
    const Index k = static_cast<Index>(rng.below(std::min<Index>(n, 3)));
    const PolyhedralSet set = oracle::random_nonempty_set(rng, n, m, k);
    const Vector u = 3.0 * rng.normal_vector(n);
    const Vector z = solve_projection_qp({u, set});
    const double gap = std::max(0.0, projection_optimality_gap(set, u, z));
    const bool member = contains(set, z, 1e-9);
    worst_proj = std::max(worst_proj, gap);
    proj_bad += gap <= kKernelGap && member ? 0 : 1;
  }
  report(9, "kernel sanity", lp_bad == 0 && proj_bad == 0 && optimal == 1000,
         std::to_string(optimal) + " optimal LPs of 1000, max duality gap " + fmt(worst_dual) +
             "; 1000 projections, max variational residual " + fmt(worst_proj) + ", failures " +
             std::to_string(lp_bad + proj_bad));
}

void guarded(int id, const std::string& name, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

// Runs every criterion, or only those whose numbers are given as arguments.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };
  const auto t0 = std::chrono::steady_clock::now();
  if (wanted(1) || wanted(2) || wanted(3)) {
    const auto gpms = gpm_corpus();
    if (wanted(1) || wanted(2)) guarded(1, "minimax equality", [&] { criteria_1_2(gpms); });
    if (wanted(3)) guarded(3, "Lipschitz holdout", [&] { criterion_3(gpms); });
  }
  if (wanted(4)) guarded(4, "R^-1(0) equals the solution set", [&] { criterion_4(avi_corpus()); });
  if (wanted(5)) guarded(5, "local error bound", criterion_5);
  if (wanted(6)) guarded(6, "upper Lipschitz inverse", criterion_6);
  if (wanted(7)) guarded(7, "solver tail bound", criterion_7);
  if (wanted(8)) guarded(8, "truncation study", criterion_8);
  if (wanted(9)) guarded(9, "kernel sanity", criterion_9);
  std::printf("%d criteria failed, %.1f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
