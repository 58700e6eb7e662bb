#ifndef AVIEB_BOUNDS_HPP
#define AVIEB_BOUNDS_HPP

#include "avieb/avi.hpp"
#include "avieb/core.hpp"
#include "avieb/instgen.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace avieb {

/// Outcome of an empirical bound check. The verdict is pass iff
/// `violations` is empty.
struct BoundReport {
  double c_emp = 0.0;
  double epsilon = 0.0;
  std::size_t num_samples = 0;  // accepted samples
  std::size_t drawn = 0;        // all draws, accepted or not
  std::optional<Vector> worst_ratio_witness;
  std::vector<std::string> violations;
  std::vector<std::pair<std::size_t, double>> ratio_trace;  // (samples used, c_emp)
  bool stabilized = false;
  bool vacuous = false;
  std::vector<std::string> notes;
  std::vector<std::pair<ActiveSet, double>> per_active_set;  // upper Lipschitz check only

  bool pass() const { return violations.empty(); }
};

struct LipschitzCheckConfig {
  Vector base_point;  // y-bar
  std::vector<double> radius_ladder = {0.001, 0.01, 0.1, 1.0};
  std::size_t samples_per_radius = 200;
  std::uint64_t master_seed = 1;
  /// Local-ascent evaluations per trace point; 0 selects 40 n + 100.
  std::size_t refine_steps = 0;
  unsigned threads = 1;
  EnumerationOptions enumeration{};
};

/// For y near y-bar, every vertex v of every piece of R^{-1}(y) is compared
/// with R^{-1}(y-bar): ratio = d(v, R^{-1}(y-bar)) / |y - y-bar|. Half of the
/// y samples are uniform in direction, half are residual images of perturbed
/// points of R^{-1}(y-bar).
///
/// The neighbourhood radius (reported as `epsilon`) is the largest ladder
/// radius within which no sampled y has a piece whose active set is empty at
/// y-bar or a recession direction that R^{-1}(y-bar) lacks. c_emp is the
/// largest ratio inside it, per-active-set moduli restrict both sides to the
/// pieces of one active set. The check fails when even the smallest radius
/// has such a y. When y-bar has no preimage and no sampled y at some ladder
/// radius has one, the check passes vacuously.
BoundReport verify_upper_lipschitz_inverse(const AviInstance& inst, const LipschitzCheckConfig& cfg,
                                           const Tolerances& tol = {});

struct ErrorBoundConfig {
  double epsilon = 1.0;
  std::size_t num_samples = 1000;
  std::uint64_t master_seed = 1;
  std::vector<double> noise_scales = {0.01, 0.1, 1.0};
  /// Local-ascent evaluations per start; 0 selects 40 n + 100.
  std::size_t refine_steps = 0;
  /// Ascents per trace point, started from the prefix's largest ratios.
  std::size_t restarts = 4;
  unsigned threads = 1;
  EnumerationOptions enumeration{};
};

/// Samples x = (point of C*) + Gaussian noise, keeps 10 tol.cmp < |R(x)| <= epsilon,
/// and reports c_emp = max d(x, C*) / |R(x)|. The ratio trace is evaluated at
/// doubling sample counts, each point followed by local ascents from the
/// prefix's `restarts` largest ratios. Pass iff c_emp is finite and the last doubling
/// changes it by at most 5%. Throws NoSolution if C* is empty and
/// DegenerateSampler if no sample passes the residual filter.
BoundReport verify_error_bound(const AviInstance& inst, const ErrorBoundConfig& cfg, const Tolerances& tol = {});
BoundReport verify_error_bound(const AviInstance& inst, const std::vector<InversePiece>& solution_set,
                               const ErrorBoundConfig& cfg, const Tolerances& tol = {});

/// Solution set by the separable product when applicable, else by
/// active-set enumeration.
std::vector<InversePiece> solution_set_for(const AviInstance& inst, const EnumerationOptions& opt = {},
                                           const Tolerances& tol = {});

struct RadiusPoint {
  double epsilon = 0.0;
  std::optional<double> c_emp;  // empty when no sample passed the filter
  bool stabilized = false;
};

struct RadiusSearch {
  bool found = false;
  double epsilon = 0.0;
  double c_emp = 0.0;
  std::vector<RadiusPoint> curve;
  std::optional<BoundReport> report;  // of the returned epsilon
};

/// Halving search over epsilon = 1, 1/2, ..., 2^-10; returns the first
/// (largest) epsilon whose trace stabilizes. With `full_curve` the remaining
/// radii are evaluated too.
RadiusSearch find_local_radius(const AviInstance& inst, const ErrorBoundConfig& cfg, bool full_curve = false,
                               const Tolerances& tol = {});
RadiusSearch find_local_radius(const AviInstance& inst, const std::vector<InversePiece>& solution_set,
                               const ErrorBoundConfig& cfg, bool full_curve = false, const Tolerances& tol = {});

struct TruncationRow {
  Index n = 0;
  double epsilon = 0.0;
  double c_emp = 0.0;
  bool found = false;
};

std::vector<TruncationRow> truncation_study(const TruncationFamily& family, const std::vector<Index>& dims,
                                            const ErrorBoundConfig& cfg, const Tolerances& tol = {});

}  // namespace avieb

#endif  // AVIEB_BOUNDS_HPP
