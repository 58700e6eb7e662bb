#include "avieb/bounds.hpp"

#include "avieb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace avieb {

namespace {

constexpr double kStableChange = 0.05;
constexpr std::size_t kMinTraceStart = 16;

// Doubling sample counts ending at total: ..., total/4, total/2, total.
std::vector<std::size_t> doubling_counts(std::size_t total) {
  std::vector<std::size_t> counts;
  for (std::size_t c = total; c >= kMinTraceStart; c /= 2) counts.push_back(c);
  if (counts.empty() && total > 0) counts.push_back(total);
  std::reverse(counts.begin(), counts.end());
  return counts;
}

bool trace_stabilized(const std::vector<std::pair<std::size_t, double>>& trace) {
  if (trace.size() < 2) return false;
  const double before = trace[trace.size() - 2].second;
  const double after = trace.back().second;
  if (!(before > 0.0) || !std::isfinite(after)) return false;
  return (after - before) / before <= kStableChange;
}

// Direction for step s of a local ascent in R^n: the 2n signed coordinate
// directions followed by one Gaussian direction, cyclically.
Vector ascent_direction(std::size_t s, Index n, SplitMix64& rng) {
  const std::size_t period = 2 * static_cast<std::size_t>(n) + 1;
  const std::size_t k = s % period;
  if (k + 1 == period) {
    Vector d = rng.normal_vector(n);
    return d / d.norm();
  }
  return (k % 2 == 0 ? 1.0 : -1.0) * Vector::Unit(n, static_cast<Index>(k / 2));
}

// Random point of C*: a vertex, a convex combination of vertices, or a vertex
// moved along the recession directions of its piece.
Vector draw_solution_point(const std::vector<InversePiece>& pieces, SplitMix64& rng) {
  const auto& g = pieces[rng.below(pieces.size())].generators;
  const auto& vs = g.vertices;
  Vector x = vs[rng.below(vs.size())];
  switch (rng.below(3)) {
    case 0:
      break;
    case 1: {
      Vector w(static_cast<Index>(vs.size()));
      for (Index i = 0; i < w.size(); ++i) w(i) = -std::log(1.0 - rng.uniform());
      w /= w.sum();
      x.setZero();
      for (std::size_t i = 0; i < vs.size(); ++i) x += w(static_cast<Index>(i)) * vs[i];
      break;
    }
    default:
      for (const auto& r : g.recession_rays) x += rng.uniform(0.0, 2.0) * r;
      for (const auto& l : g.lineality) x += rng.normal() * l;
      break;
  }
  return x;
}

struct RatioSample {
  bool accepted = false;
  double ratio = 0.0;
  Vector x;
  Vector projected;  // P_C(x - Mx - q), a feasible warm start nearby
};

class ErrorBoundEvaluator {
 public:
  ErrorBoundEvaluator(const AviInstance& inst, const std::vector<InversePiece>& pieces, double eps,
                      const Tolerances& tol)
      : inst_(inst), pieces_(pieces), eps_(eps), tol_(tol) {}

  RatioSample eval(const Vector& x, const std::optional<Vector>& hint) const {
    RatioSample s;
    s.x = x;
    QpOptions opt;
    opt.hint = hint;
    const ResidualValue r = residual(inst_, x, tol_, opt);
    s.projected = r.projected_point;
    if (r.norm > eps_ || r.norm <= 10.0 * tol_.cmp) return s;
    s.accepted = true;
    s.ratio = distance_to_pieces(pieces_, x, tol_) / r.norm;
    return s;
  }

 private:
  const AviInstance& inst_;
  const std::vector<InversePiece>& pieces_;
  double eps_;
  Tolerances tol_;
};

RatioSample refine_error_bound(const ErrorBoundEvaluator& ev, RatioSample best, std::size_t steps,
                               std::uint64_t seed) {
  const Index n = best.x.size();
  SplitMix64 rng(seed);
  double sigma = 0.5 * std::max(best.ratio * (best.x - best.projected).norm(), 1e-6);
  std::size_t misses = 0;
  const std::size_t patience = 2 * static_cast<std::size_t>(n) + 1;
  for (std::size_t s = 0; s < steps; ++s) {
    const Vector cand = best.x + sigma * ascent_direction(s, n, rng);
    RatioSample c = ev.eval(cand, best.projected);
    if (c.accepted && c.ratio > best.ratio) {
      best = std::move(c);
      misses = 0;
      sigma *= 1.5;
    } else if (++misses >= patience) {
      sigma *= 0.5;
      misses = 0;
      if (sigma < 1e-10 * (1.0 + best.x.norm())) break;
    }
  }
  return best;
}

}  // namespace

std::vector<InversePiece> solution_set_for(const AviInstance& inst, const EnumerationOptions& opt,
                                           const Tolerances& tol) {
  if (is_separable(inst)) return enumerate_solution_set_separable(inst, 4096, tol);
  return enumerate_solution_set(inst, opt, tol);
}

BoundReport verify_error_bound(const AviInstance& inst, const ErrorBoundConfig& cfg, const Tolerances& tol) {
  return verify_error_bound(inst, solution_set_for(inst, cfg.enumeration, tol), cfg, tol);
}

BoundReport verify_error_bound(const AviInstance& inst, const std::vector<InversePiece>& solution_set,
                               const ErrorBoundConfig& cfg, const Tolerances& tol) {
  if (solution_set.empty()) throw NoSolution("the AVI has no solution; the error bound is not defined");
  for (const auto& p : solution_set) {
    if (p.generators.vertices.empty()) throw Error("solution pieces must carry generators");
  }
  if (!(cfg.epsilon > 0.0) || cfg.noise_scales.empty()) throw Error("epsilon and noise scales must be positive");

  const ErrorBoundEvaluator ev(inst, solution_set, cfg.epsilon, tol);
  std::vector<RatioSample> samples(cfg.num_samples);
  parallel_for(cfg.num_samples, cfg.threads, [&](std::size_t i) {
    SplitMix64 rng(derive_seed(cfg.master_seed, i));
    const Vector base = draw_solution_point(solution_set, rng);
    const double scale = cfg.noise_scales[i % cfg.noise_scales.size()];
    samples[i] = ev.eval(base + scale * rng.normal_vector(inst.dim()), base);
  });

  BoundReport rep;
  rep.epsilon = cfg.epsilon;
  rep.drawn = cfg.num_samples;
  for (const auto& s : samples) rep.num_samples += s.accepted ? 1 : 0;
  if (rep.num_samples == 0) {
    throw DegenerateSampler("no sample satisfied 10 tol_cmp < |R(x)| <= " + std::to_string(cfg.epsilon));
  }

  const std::size_t steps = cfg.refine_steps ? cfg.refine_steps : 40 * static_cast<std::size_t>(inst.dim()) + 100;
  // Ascents are seeded by sample index, so a start shared by several trace
  // points is refined once.
  const std::size_t starts = std::max<std::size_t>(cfg.restarts, 1);
  std::map<std::size_t, RatioSample> refined;
  std::vector<std::size_t> top;  // prefix indices by decreasing ratio
  std::optional<RatioSample> best_overall;
  std::size_t scanned = 0;
  double running = 0.0;
  for (std::size_t count : doubling_counts(cfg.num_samples)) {
    for (; scanned < count; ++scanned) {
      if (!samples[scanned].accepted) continue;
      top.push_back(scanned);
      std::stable_sort(top.begin(), top.end(),
                       [&](std::size_t a, std::size_t b) { return samples[a].ratio > samples[b].ratio; });
      if (top.size() > starts) top.pop_back();
    }
    std::vector<std::size_t> fresh;
    for (std::size_t i : top) {
      if (!refined.count(i)) fresh.push_back(i);
    }
    std::vector<RatioSample> out(fresh.size());
    parallel_for(fresh.size(), cfg.threads, [&](std::size_t j) {
      out[j] = refine_error_bound(ev, samples[fresh[j]], steps, derive_seed(cfg.master_seed ^ 0x5EEDULL, fresh[j]));
    });
    for (std::size_t j = 0; j < fresh.size(); ++j) refined.emplace(fresh[j], std::move(out[j]));
    for (std::size_t i : top) {
      const RatioSample& r = refined.at(i);
      if (!best_overall || r.ratio > best_overall->ratio) best_overall = r;
    }
    if (best_overall) running = std::max(running, best_overall->ratio);
    rep.ratio_trace.emplace_back(count, running);
  }
  rep.c_emp = running;
  rep.worst_ratio_witness = best_overall->x;
  rep.stabilized = trace_stabilized(rep.ratio_trace);
  if (!std::isfinite(rep.c_emp)) rep.violations.push_back("c_emp is not finite");
  if (!rep.stabilized) {
    rep.violations.push_back(rep.ratio_trace.size() < 2
                                 ? "too few samples for a doubling trace"
                                 : "ratio trace changed by more than 5% over the last doubling");
  }
  return rep;
}

RadiusSearch find_local_radius(const AviInstance& inst, const ErrorBoundConfig& cfg, bool full_curve,
                               const Tolerances& tol) {
  return find_local_radius(inst, solution_set_for(inst, cfg.enumeration, tol), cfg, full_curve, tol);
}

RadiusSearch find_local_radius(const AviInstance& inst, const std::vector<InversePiece>& solution_set,
                               const ErrorBoundConfig& cfg, bool full_curve, const Tolerances& tol) {
  RadiusSearch out;
  double eps = 1.0;
  for (int k = 0; k <= 10; ++k, eps *= 0.5) {
    ErrorBoundConfig c = cfg;
    c.epsilon = eps;
    RadiusPoint pt;
    pt.epsilon = eps;
    try {
      BoundReport rep = verify_error_bound(inst, solution_set, c, tol);
      pt.c_emp = rep.c_emp;
      pt.stabilized = rep.stabilized;
      if (rep.pass() && !out.found) {
        out.found = true;
        out.epsilon = eps;
        out.c_emp = rep.c_emp;
        out.report = std::move(rep);
      }
    } catch (const DegenerateSampler&) {
    }
    out.curve.push_back(pt);
    if (out.found && !full_curve) break;
  }
  return out;
}

std::vector<TruncationRow> truncation_study(const TruncationFamily& family, const std::vector<Index>& dims,
                                            const ErrorBoundConfig& cfg, const Tolerances& tol) {
  std::vector<TruncationRow> rows;
  for (Index n : dims) {
    const AviInstance inst = family.make(n);
    const auto pieces = enumerate_solution_set_separable(inst, 4096, tol);
    const RadiusSearch rs = find_local_radius(inst, pieces, cfg, false, tol);
    rows.push_back({n, rs.epsilon, rs.c_emp, rs.found});
  }
  return rows;
}

namespace {

struct InclusionSample {
  bool nonempty = false;
  double step = 0.0;  // |y - y-bar|
  double ratio = 0.0;
  Vector y;
  Vector worst_vertex;
  std::vector<std::pair<ActiveSet, double>> per_active_set;
  std::size_t foreign_active_sets = 0;
  std::vector<std::string> violations;
};

class InclusionEvaluator {
 public:
  InclusionEvaluator(const AviInstance& inst, const Vector& ybar, const std::vector<InversePiece>& base,
                     const EnumerationOptions& opt, const Tolerances& tol)
      : inst_(inst), ybar_(ybar), base_(base), opt_(opt), tol_(tol) {
    opt_.threads = 1;
  }

  InclusionSample eval(const Vector& y) const {
    InclusionSample s;
    s.y = y;
    s.step = (y - ybar_).norm();
    const auto pieces = inverse_residual(inst_, y, opt_, tol_);
    if (pieces.empty() || s.step <= 0.0) return s;
    s.nonempty = true;
    if (base_.empty()) return s;
    for (const auto& piece : pieces) {
      const InversePiece* same = nullptr;
      for (const auto& b : base_) {
        if (b.active == piece.active) same = &b;
      }
      if (!same) ++s.foreign_active_sets;
      double piece_ratio = 0.0;
      for (const auto& v : piece.generators.vertices) {
        const double r = distance_to_pieces(base_, v, tol_) / s.step;
        if (r > s.ratio || s.worst_vertex.size() == 0) {
          s.ratio = std::max(s.ratio, r);
          s.worst_vertex = v;
        }
        if (same) {
          QpOptions hint;
          if (!same->generators.vertices.empty()) hint.hint = same->generators.vertices.front();
          piece_ratio = std::max(piece_ratio, distance(same->x_set, v, tol_, hint).value / s.step);
        }
      }
      if (same) s.per_active_set.emplace_back(piece.active, piece_ratio);
      auto covered = [&](const Vector& d) {
        for (const auto& b : base_) {
          if (in_recession_cone(b.x_set, d, tol_.cmp)) return true;
        }
        return false;
      };
      for (const auto& r : piece.generators.recession_rays) {
        if (!covered(r)) s.violations.push_back("recession direction of R^-1(y) missing at y-bar for pieces " +
                                                piece.active.to_string());
      }
      for (const auto& l : piece.generators.lineality) {
        if (!covered(l) || !covered(-l)) {
          s.violations.push_back("lineality direction of R^-1(y) missing at y-bar for pieces " +
                                 piece.active.to_string());
        }
      }
    }
    return s;
  }

 private:
  const AviInstance& inst_;
  Vector ybar_;
  const std::vector<InversePiece>& base_;
  EnumerationOptions opt_;
  Tolerances tol_;
};

}  // namespace

BoundReport verify_upper_lipschitz_inverse(const AviInstance& inst, const LipschitzCheckConfig& cfg,
                                           const Tolerances& tol) {
  const Index n = inst.dim();
  const Vector ybar = cfg.base_point.size() ? cfg.base_point : Vector::Zero(n);
  require_dim(ybar.size(), n, "base point");
  if (cfg.radius_ladder.empty() || cfg.samples_per_radius == 0) throw Error("empty radius ladder");
  for (std::size_t i = 0; i < cfg.radius_ladder.size(); ++i) {
    if (!(cfg.radius_ladder[i] > 0.0) || (i > 0 && cfg.radius_ladder[i] <= cfg.radius_ladder[i - 1]))
      throw Error("radius ladder must be positive and increasing");
  }

  const auto base = inverse_residual(inst, ybar, cfg.enumeration, tol);
  const InclusionEvaluator ev(inst, ybar, base, cfg.enumeration, tol);
  const std::size_t levels = cfg.radius_ladder.size();
  const std::size_t total = levels * cfg.samples_per_radius;
  std::vector<InclusionSample> samples(total);
  std::vector<InversePiece> base_with_points;
  for (const auto& b : base) {
    if (!b.generators.vertices.empty()) base_with_points.push_back(b);
  }
  // Even samples are uniform directions; odd ones are residual images R(x) of
  // perturbed points x of R^{-1}(y-bar), which always lie in dom R^{-1}.
  parallel_for(total, cfg.threads, [&](std::size_t i) {
    SplitMix64 rng(derive_seed(cfg.master_seed, i));
    const double level = cfg.radius_ladder[i / cfg.samples_per_radius];
    const double radius = level * rng.uniform(0.5, 1.0);
    if (i % 2 == 1 && !base_with_points.empty()) {
      const Vector x = draw_solution_point(base_with_points, rng) + radius * rng.normal_vector(n);
      Vector y = residual(inst, x, tol).r;
      const double off = (y - ybar).norm();
      if (off > level) y = ybar + (level / off) * (y - ybar);
      samples[i] = ev.eval(y);
      return;
    }
    Vector dir = rng.normal_vector(n);
    dir /= dir.norm();
    samples[i] = ev.eval(ybar + radius * dir);
  });

  BoundReport rep;
  rep.epsilon = cfg.radius_ladder.back();
  rep.drawn = total;

  if (base.empty()) {
    // y-bar has no preimage. dom R^-1 is closed, so small enough balls around
    // y-bar miss it and the inclusion holds trivially there.
    rep.vacuous = true;
    std::optional<double> empty_radius;
    for (std::size_t level = 0; level < levels && !empty_radius; ++level) {
      bool all_empty = true;
      for (std::size_t j = 0; j < cfg.samples_per_radius; ++j)
        all_empty &= !samples[level * cfg.samples_per_radius + j].nonempty;
      if (all_empty) empty_radius = cfg.radius_ladder[level];
    }
    if (empty_radius) {
      rep.notes.push_back("y-bar is outside dom R^-1; no sampled y within radius " + std::to_string(*empty_radius) +
                          " has a preimage, so the inclusion holds vacuously");
    } else {
      rep.violations.push_back("y-bar is outside dom R^-1 but preimages were found at every sampled radius");
    }
    return rep;
  }

  // Neighbourhood radius: the largest ladder radius within which no sampled y
  // has a piece whose active set is empty at y-bar or a recession direction
  // missing at y-bar. Beyond it the local inclusion is not claimed.
  auto clean = [](const InclusionSample& s) { return s.foreign_active_sets == 0 && s.violations.empty(); };
  std::optional<std::size_t> delta_level;
  for (std::size_t level = 0; level < levels; ++level) {
    bool ok = true;
    for (const auto& s : samples) {
      if (s.nonempty && s.step <= cfg.radius_ladder[level] && !clean(s)) ok = false;
    }
    if (!ok) break;
    delta_level = level;
  }
  if (!delta_level) {
    const auto& first = std::find_if(samples.begin(), samples.end(), [&](const InclusionSample& s) {
      return s.nonempty && s.step <= cfg.radius_ladder[0] && !clean(s);
    });
    rep.violations.push_back("no violation-free neighbourhood of radius " + std::to_string(cfg.radius_ladder[0]) +
                             (first->violations.empty() ? ": pieces with active sets empty at y-bar"
                                                        : ": " + first->violations.front()));
    return rep;
  }
  const double delta = cfg.radius_ladder[*delta_level];
  rep.epsilon = delta;
  auto inside = [&](const InclusionSample& s) { return s.nonempty && s.step <= delta; };

  std::map<ActiveSet, double> per_set;
  std::size_t beyond = 0;
  for (const auto& s : samples) {
    if (!s.nonempty) continue;
    if (!inside(s)) {
      beyond += clean(s) ? 0 : 1;
      continue;
    }
    ++rep.num_samples;
    for (const auto& [act, r] : s.per_active_set) per_set[act] = std::max(per_set[act], r);
  }
  if (rep.num_samples == 0) throw DegenerateSampler("no sampled y near y-bar has a preimage");
  if (beyond > 0) {
    rep.notes.push_back("neighbourhood radius " + std::to_string(delta) + "; " + std::to_string(beyond) +
                        " sampled y beyond it have pieces with active sets empty at y-bar or new recession "
                        "directions");
  }

  // Doubling trace with local ascent in y from the worst sample of each prefix.
  std::optional<std::size_t> prefix_best;
  std::size_t scanned = 0;
  double running = 0.0;
  std::optional<InclusionSample> best;
  for (std::size_t count : doubling_counts(total)) {
    for (; scanned < count; ++scanned) {
      const auto& s = samples[scanned];
      if (inside(s) && (!prefix_best || s.ratio > samples[*prefix_best].ratio)) prefix_best = scanned;
    }
    if (prefix_best) {
      InclusionSample cur = samples[*prefix_best];
      SplitMix64 rng(derive_seed(cfg.master_seed ^ 0x11F5ULL, count));
      double sigma = 0.25 * cur.step;
      std::size_t misses = 0;
      const std::size_t patience = 2 * static_cast<std::size_t>(n) + 1;
      const std::size_t steps =
          cfg.refine_steps ? cfg.refine_steps : 40 * static_cast<std::size_t>(n) + 100;
      for (std::size_t s = 0; s < steps; ++s) {
        Vector y = cur.y + sigma * ascent_direction(s, n, rng);
        const double off = (y - ybar).norm();
        if (off > delta) y = ybar + (delta / off) * (y - ybar);  // stay in the neighbourhood
        InclusionSample c = ev.eval(y);
        if (c.nonempty && clean(c) && c.ratio > cur.ratio) {
          for (const auto& [act, r] : c.per_active_set) per_set[act] = std::max(per_set[act], r);
          cur = std::move(c);
          sigma *= 1.5;
          misses = 0;
        } else if (++misses >= patience) {
          sigma *= 0.5;
          misses = 0;
        }
      }
      if (!best || cur.ratio > best->ratio) best = cur;
      running = std::max(running, best->ratio);
    }
    rep.ratio_trace.emplace_back(count, running);
  }
  rep.c_emp = running;
  rep.worst_ratio_witness = best->worst_vertex;
  rep.stabilized = trace_stabilized(rep.ratio_trace);
  for (const auto& [act, r] : per_set) rep.per_active_set.emplace_back(act, r);
  if (!std::isfinite(rep.c_emp)) rep.violations.push_back("c_emp is not finite");
  return rep;
}

}  // namespace avieb
