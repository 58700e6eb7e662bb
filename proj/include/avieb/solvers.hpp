#ifndef AVIEB_SOLVERS_HPP
#define AVIEB_SOLVERS_HPP

#include "avieb/avi.hpp"
#include "avieb/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace avieb {

enum class Method { projected_fixed_point, extragradient };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct SolverConfig {
  Method method = Method::extragradient;
  double step = 0.0;  // 0 selects 0.3 / (1 + |M|_op)
  int max_iters = 10000;
  double stop_residual = 1e-6;
  std::optional<Vector> x0;  // origin when absent
  bool keep_points = true;   // store every iterate (needed for distances)
};

enum class SolveOutcome { converged, max_iters, diverged };

const char* to_string(SolveOutcome o);

struct IterateMeta {
  int iter = 0;
  double residual = 0.0;
  std::optional<double> distance;
};

struct TailCheck {
  double c_emp = 0.0;
  double epsilon = 0.0;
  double slack = 1.0;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // max d / (c_emp * residual) over checked iterates
  bool pass() const { return violations == 0; }
};

/// Iterates 0..k with their natural residuals. Divergence means |x_k| > 1e9.
struct SolveTrace {
  std::vector<IterateMeta> iterates;
  std::vector<Vector> points;
  Vector final_x;
  double final_residual = kInf;
  bool converged = false;  // final residual <= stop_residual
  SolveOutcome outcome = SolveOutcome::max_iters;
  double step = 0.0;
  std::optional<TailCheck> tail;
};

/// Power-iteration estimate of the largest singular value.
double operator_norm_estimate(const Matrix& m, int iterations = 50);

/// x+ = P_C(x - t(Mx + q)), or the extragradient pair
/// xb = P_C(x - t(Mx + q)), x+ = P_C(x - t(M xb + q)).
SolveTrace solve(const AviInstance& inst, const SolverConfig& cfg, const Tolerances& tol = {});

/// Fills the distance of every stored iterate to C* and checks
/// d(x_k, C*) <= slack * c_emp * |R(x_k)| for all iterates from the first one
/// with |R(x_k)| <= epsilon onward (iterates with |R(x_k)| below 1e-10 are
/// skipped as 0/0).
TailCheck annotate_distances(const AviInstance& inst, SolveTrace& trace, const std::vector<InversePiece>& solution_set,
                             double c_emp, double epsilon, double slack = 1.0, const Tolerances& tol = {});

}  // namespace avieb

#endif  // AVIEB_SOLVERS_HPP
