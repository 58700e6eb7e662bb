#include "doctest.h"

#include "avieb/gpm.hpp"
#include "avieb/rng.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace avieb;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

GpMultifunction identity_graph(Index n) {
  return {-Matrix::Identity(n, n), Matrix::Identity(n, n), Vector::Zero(n), Matrix(0, n), Matrix(0, n), Vector(0)};
}

// F(x) = [-x, x] in R: rows y - x <= 0 and -y - x <= 0.
GpMultifunction interval_graph() {
  Matrix rx(2, 1);
  rx << -1, -1;
  Matrix ry(2, 1);
  ry << 1, -1;
  return {Matrix(0, 1), Matrix(0, 1), Vector(0), rx, ry, Vector::Zero(2)};
}

GpMultifunction scaled_graph() {
  return {Matrix::Constant(1, 1, -2.0), Matrix::Ones(1, 1), Vector::Zero(1), Matrix(0, 1), Matrix(0, 1), Vector(0)};
}

// inf over a fine grid of y in [-5, 5] of the max-violation function.
double grid_g(const GpMultifunction& f, double x) {
  double best = kInf;
  for (int i = -50000; i <= 50000; ++i) {
    const double y = i * 1e-4;
    double v = 0.0;
    for (Index r = 0; r < f.num_eq(); ++r)
      v = std::max(v, std::abs(f.a1()(r, 0) * x + f.a2()(r, 0) * y - f.z()(r)));
    for (Index r = 0; r < f.num_rows(); ++r)
      v = std::max(v, f.row_x()(r, 0) * x + f.row_y()(r, 0) * y - f.rhs()(r));
    best = std::min(best, v);
  }
  return best;
}

// Epigraph LP in (y, t) with |y_j| <= 100 solved by basis enumeration.
double brute_force_g(const GpMultifunction& f, const Vector& x) {
  const Index r = f.y_dim();
  const Index k = f.num_eq();
  const Index p = f.num_rows();
  LinearProgram lp;
  lp.objective = Vector::Unit(r + 1, r);
  lp.ineq_lhs = Matrix::Zero(2 * k + p + 1 + 2 * r, r + 1);
  lp.ineq_rhs = Vector::Zero(2 * k + p + 1 + 2 * r);
  const Vector shift = f.a1() * x - f.z();
  for (Index i = 0; i < k; ++i) {
    lp.ineq_lhs.block(i, 0, 1, r) = f.a2().row(i);
    lp.ineq_lhs(i, r) = -1.0;
    lp.ineq_rhs(i) = -shift(i);
    lp.ineq_lhs.block(k + i, 0, 1, r) = -f.a2().row(i);
    lp.ineq_lhs(k + i, r) = -1.0;
    lp.ineq_rhs(k + i) = shift(i);
  }
  for (Index i = 0; i < p; ++i) {
    lp.ineq_lhs.block(2 * k + i, 0, 1, r) = f.row_y().row(i);
    lp.ineq_lhs(2 * k + i, r) = -1.0;
    lp.ineq_rhs(2 * k + i) = f.rhs()(i) - f.row_x().row(i).dot(x);
  }
  lp.ineq_lhs(2 * k + p, r) = -1.0;
  for (Index j = 0; j < r; ++j) {
    lp.ineq_lhs(2 * k + p + 1 + j, j) = 1.0;
    lp.ineq_rhs(2 * k + p + 1 + j) = 100.0;
    lp.ineq_lhs(2 * k + p + 1 + r + j, j) = -1.0;
    lp.ineq_rhs(2 * k + p + 1 + r + j) = 100.0;
  }
  lp.eq_lhs = Matrix(0, r + 1);
  lp.eq_rhs = Vector(0);
  return oracle::brute_force_lp_min(lp);
}

GpMultifunction small_random_gpm(SplitMix64& rng) {
  const Index n = 1 + static_cast<Index>(rng.below(3));
  const Index r = 1 + static_cast<Index>(rng.below(2));
  const Index k = static_cast<Index>(rng.below(2));
  const Index p = 1 + static_cast<Index>(rng.below(3));
  return {rng.normal_matrix(k, n), rng.normal_matrix(k, r), rng.normal_vector(k),
          rng.normal_matrix(p, n), rng.normal_matrix(p, r), rng.normal_vector(p)};
}

}  // namespace

TEST_CASE("evaluate: examples") {
  const auto id = identity_graph(2);
  const auto s = evaluate(id, vec({1, -2}));
  CHECK(contains(s, vec({1, -2}), 1e-9));
  CHECK_FALSE(contains(s, vec({1, -1.9}), 1e-9));

  const auto f = interval_graph();
  const auto at1 = evaluate(f, vec({1}));
  CHECK(contains(at1, vec({-1}), 1e-9));
  CHECK(contains(at1, vec({1}), 1e-9));
  CHECK_FALSE(contains(at1, vec({1.01}), 1e-9));
  CHECK(is_empty(evaluate(f, vec({-1}))));
  CHECK_THROWS_AS(evaluate(f, vec({1, 2})), DimensionMismatch);
}

TEST_CASE("domain_contains: examples") {
  const auto id = identity_graph(3);
  SplitMix64 rng(3);
  for (int i = 0; i < 10; ++i) CHECK(domain_contains(id, 10.0 * rng.normal_vector(3)));

  const auto f = interval_graph();
  CHECK(domain_contains(f, vec({0})));
  CHECK(domain_contains(f, vec({2})));
  CHECK_FALSE(domain_contains(f, vec({-0.01})));

  // 0.y <= -1 is contradictory.
  const GpMultifunction bad(Matrix(0, 1), Matrix(0, 1), Vector(0), Matrix::Zero(1, 1), Matrix::Zero(1, 1),
                            Vector::Constant(1, -1.0));
  CHECK_FALSE(domain_contains(bad, vec({0})));
  CHECK_FALSE(domain_contains(bad, vec({5})));
}

TEST_CASE("g_primal and g_dual: the interval example") {
  const auto f = interval_graph();
  CHECK(g_primal(f, vec({-1})) == doctest::Approx(1.0));
  CHECK(grid_g(f, -1.0) == doctest::Approx(1.0).epsilon(1e-6));
  const auto d = g_dual_detailed(f, vec({-1}));
  CHECK(d.value == doctest::Approx(1.0));
  REQUIRE(d.argmax);
  CHECK(in_dual_set(f, *d.argmax, true, 1e-9));
  for (double x : {-2.0, -0.5, 0.0, 0.5, 3.0}) {
    CHECK(g_primal(f, vec({x})) == doctest::Approx(grid_g(f, x)).epsilon(1e-6).scale(1.0));
    CHECK(g_dual(f, vec({x})) == doctest::Approx(g_primal(f, vec({x}))).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("g is zero on the domain and never negative") {
  // The norm term of the equality residual is part of the max, so g >= 0;
  // members with an exactly feasible y give g = 0 even deep in the domain.
  const auto f = interval_graph();
  CHECK(g_primal(f, vec({10})) == doctest::Approx(0.0));
  CHECK(g_dual(f, vec({10})) == doctest::Approx(0.0));
  const auto id = identity_graph(2);
  CHECK(g_primal(id, vec({3, 4})) == doctest::Approx(0.0));
  // E' always contains the origin, so the dual value is at least 0.
  SplitMix64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto g = small_random_gpm(rng);
    const Vector x = rng.normal_vector(g.x_dim());
    CHECK(g_dual(g, x) >= -1e-12);
    CHECK(g_primal(g, x) >= -1e-12);
  }
}

TEST_CASE("g_primal agrees with a basis-enumeration oracle") {
  SplitMix64 rng(2024);
  for (int i = 0; i < 60; ++i) {
    const auto g = small_random_gpm(rng);
    const Vector x = rng.normal_vector(g.x_dim());
    CHECK(g_primal(g, x) == doctest::Approx(brute_force_g(g, x)).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("verify_minimax: examples and random instances") {
  const auto id = identity_graph(2);
  std::vector<Vector> xs{vec({0, 0}), vec({1, 2}), vec({-3, 5})};
  const auto rep = verify_minimax(id, xs);
  CHECK(rep.pass);
  CHECK(rep.max_gap <= 1e-12);

  const auto f = interval_graph();
  const auto r2 = verify_minimax(f, {vec({-1})});
  CHECK(r2.pass);
  CHECK(r2.entries[0].primal == doctest::Approx(1.0));
  CHECK(r2.entries[0].dual == doctest::Approx(1.0));

  SplitMix64 rng(77);
  for (int i = 0; i < 30; ++i) {
    const auto g = small_random_gpm(rng);
    std::vector<Vector> pts;
    for (int j = 0; j < 5; ++j) pts.push_back(2.0 * rng.normal_vector(g.x_dim()));
    CHECK(verify_minimax(g, pts).pass);
  }
}

TEST_CASE("verify_domain_characterization: examples") {
  const auto f = interval_graph();
  const auto rep = verify_domain_characterization(f, {vec({-1}), vec({0}), vec({4})});
  CHECK(rep.pass);
  CHECK_FALSE(rep.entries[0].member);
  CHECK(rep.entries[0].g == doctest::Approx(1.0));
  CHECK(rep.entries[1].member);
  CHECK(std::abs(rep.entries[1].g) <= 1e-6);
  CHECK(rep.entries[2].member);
}

TEST_CASE("estimate_lipschitz_modulus: identity, interval and scaled graphs") {
  SamplerConfig cfg;
  cfg.num_pairs = 200;
  cfg.refine_steps = 40;
  {
    const auto e = estimate_lipschitz_modulus(identity_graph(2), cfg);
    CHECK(e.c_emp == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(e.accepted_pairs > 0);
  }
  {
    const auto e = estimate_lipschitz_modulus(interval_graph(), cfg);
    CHECK(e.c_emp == doctest::Approx(1.0).epsilon(1e-6));
  }
  {
    const auto e = estimate_lipschitz_modulus(scaled_graph(), cfg);
    CHECK(e.c_emp == doctest::Approx(2.0).epsilon(1e-6));
    for (std::size_t i = 1; i < e.trace.size(); ++i) CHECK(e.trace[i].second >= e.trace[i - 1].second);
    const auto h = lipschitz_holdout(scaled_graph(), e.c_emp, 1.05, {.master_seed = 99, .num_pairs = 100});
    CHECK(h.pass);
    CHECK(h.violations == 0);
  }
}

TEST_CASE("estimate_lipschitz_modulus: deterministic per seed and degenerate domains") {
  SamplerConfig cfg;
  cfg.num_pairs = 50;
  cfg.refine_steps = 10;
  const auto a = estimate_lipschitz_modulus(interval_graph(), cfg);
  const auto b = estimate_lipschitz_modulus(interval_graph(), cfg);
  CHECK(a.c_emp == b.c_emp);
  CHECK(a.trace == b.trace);

  const GpMultifunction bad(Matrix(0, 1), Matrix(0, 1), Vector(0), Matrix::Zero(1, 1), Matrix::Zero(1, 1),
                            Vector::Constant(1, -1.0));
  CHECK_THROWS_AS(estimate_lipschitz_modulus(bad, cfg), DegenerateSampler);
}

TEST_CASE("section_distance: empty sections") {
  const auto f = interval_graph();
  CHECK(section_distance(f, vec({-1}), vec({-2})).value == 0.0);
  CHECK_FALSE(section_distance(f, vec({-1}), vec({1})).finite());
  CHECK(section_distance(f, vec({1}), vec({3})).value == doctest::Approx(2.0));
}
