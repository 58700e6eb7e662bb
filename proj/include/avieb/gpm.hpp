#ifndef AVIEB_GPM_HPP
#define AVIEB_GPM_HPP

#include "avieb/core.hpp"
#include "avieb/polyhedra.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace avieb {

/// F(x) = {y : a1 x + a2 y = z,  row_x.row(i) . x + row_y.row(i) . y <= rhs(i)}.
///
/// Dimensions: x in R^n, y in R^r, z in R^k, p inequality rows.
class GpMultifunction {
 public:
  GpMultifunction(Matrix a1, Matrix a2, Vector z, Matrix row_x, Matrix row_y, Vector rhs);

  Index x_dim() const { return n_; }
  Index y_dim() const { return r_; }
  Index num_eq() const { return z_.size(); }
  Index num_rows() const { return rhs_.size(); }

  const Matrix& a1() const { return a1_; }
  const Matrix& a2() const { return a2_; }
  const Vector& z() const { return z_; }
  const Matrix& row_x() const { return row_x_; }
  const Matrix& row_y() const { return row_y_; }
  const Vector& rhs() const { return rhs_; }

  /// The graph {(x, y) : y in F(x)} as a set in R^{n+r}.
  PolyhedralSet graph() const;

  bool operator==(const GpMultifunction& other) const;

 private:
  Index n_;
  Index r_;
  Matrix a1_;
  Matrix a2_;
  Vector z_;
  Matrix row_x_;
  Matrix row_y_;
  Vector rhs_;
};

/// Dual multiplier (lambda, gamma) of the value function. Membership in E
/// uses |lambda|_1 + sum gamma <= 1 (l1 is the dual of the l-infinity norm
/// placed on the equality residual); E' adds a2^T lambda + row_y^T gamma = 0.
struct DualMultiplier {
  Vector lambda;
  Vector gamma;
};

bool in_dual_set(const GpMultifunction& f, const DualMultiplier& m, bool require_balance, double tol);

PolyhedralSet evaluate(const GpMultifunction& f, const Vector& x);
bool domain_contains(const GpMultifunction& f, const Vector& x, const Tolerances& tol = {});

/// g(x) = inf_y max{ |a1 x + a2 y - z|_inf, max_i(row_x_i.x + row_y_i.y - b_i) },
/// solved as one LP in (y, t).
double g_primal(const GpMultifunction& f, const Vector& x, const Tolerances& tol = {});

struct DualValue {
  double value = -kInf;
  std::optional<DualMultiplier> argmax;
};

/// max over (lambda, gamma) in E' of <lambda, a1 x - z> + sum gamma_i (row_x_i.x - b_i).
DualValue g_dual_detailed(const GpMultifunction& f, const Vector& x, const Tolerances& tol = {});
double g_dual(const GpMultifunction& f, const Vector& x, const Tolerances& tol = {});

struct MinimaxEntry {
  Vector x;
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct MinimaxReport {
  std::vector<MinimaxEntry> entries;
  double max_gap = 0.0;
  bool pass = true;
};

MinimaxReport verify_minimax(const GpMultifunction& f, const std::vector<Vector>& xs,
                             const Tolerances& tol = {});

struct DomainEntry {
  Vector x;
  bool member = false;
  double g = 0.0;
  bool agrees = true;
};

struct DomainReport {
  std::vector<DomainEntry> entries;
  std::size_t mismatches = 0;
  bool pass = true;
};

DomainReport verify_domain_characterization(const GpMultifunction& f, const std::vector<Vector>& xs,
                                            const Tolerances& tol = {});

struct SamplerConfig {
  std::uint64_t master_seed = 1;
  std::size_t num_pairs = 1000;
  std::vector<double> radius_ladder = {0.1, 1.0, 10.0};
  std::size_t max_attempts = 200;  // rejection draws per point
  std::size_t refine_steps = 150;  // local ascent on the worst pair
  std::size_t restarts = 8;        // further ascents from the next best pairs
  unsigned threads = 1;
  EnumerationCaps caps{};
};

struct PairRatio {
  Vector x1;
  Vector x2;
  double ratio = 0.0;
};

struct LipschitzEstimate {
  double c_emp = 0.0;
  std::optional<PairRatio> witness;
  std::size_t accepted_pairs = 0;
  std::size_t rejected_unbounded = 0;  // pairs with infinite Hausdorff distance
  std::size_t failed_draws = 0;        // pairs for which no domain point was found
  std::vector<std::pair<std::size_t, double>> trace;  // (pairs used, c_emp)
};

/// Empirical Lipschitz modulus max h(F(x1), F(x2)) / |x1 - x2| over sampled
/// pairs in dom F. Each trace prefix maximum is refined by a local ascent; the
/// final one also restarts the ascent from the next best distinct pairs.
LipschitzEstimate estimate_lipschitz_modulus(const GpMultifunction& f, const SamplerConfig& cfg,
                                             const Tolerances& tol = {});

struct HoldoutReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;
  bool pass = true;
};

/// Checks h(F(x1), F(x2)) <= slack * c_emp * |x1 - x2| on fresh pairs.
HoldoutReport lipschitz_holdout(const GpMultifunction& f, double c_emp, double slack, const SamplerConfig& cfg,
                                const Tolerances& tol = {});

/// Hausdorff distance between two sections; +inf when one is empty and the
/// other is not.
HausdorffResult section_distance(const GpMultifunction& f, const Vector& x1, const Vector& x2,
                                 const EnumerationCaps& caps = {}, const Tolerances& tol = {});

}  // namespace avieb

#endif  // AVIEB_GPM_HPP
