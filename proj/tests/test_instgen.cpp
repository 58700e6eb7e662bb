#include "doctest.h"

#include "avieb/avi.hpp"
#include "avieb/gpm.hpp"
#include "avieb/instgen.hpp"
#include "avieb/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace avieb;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("avieb_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("prng: published test vectors") {
  const std::pair<std::uint64_t, std::array<std::uint64_t, 3>> table[] = {
      {0, {0xe220a8397b1dcdafULL, 0x6e789e6aa1b965f4ULL, 0x06c45d188009454fULL}},
      {1, {0x910a2dec89025cc1ULL, 0xbeeb8da1658eec67ULL, 0xf893a2eefb32555eULL}},
      {42, {0xbdd732262feb6e95ULL, 0x28efe333b266f103ULL, 0x47526757130f9f52ULL}},
  };
  for (const auto& [seed, outs] : table) {
    SplitMix64 rng(seed);
    for (auto v : outs) CHECK(rng.next() == v);
  }
  SplitMix64 u(7);
  CHECK(u.uniform() == 0.3898297483912715);
  CHECK(u.uniform() == 0.01678829452815611);
  SplitMix64 g(7);
  CHECK(g.normal() == doctest::Approx(0.9884743323187353).epsilon(1e-15));
  CHECK(derive_seed(1, 0) == 0x9e0160293a33aaf7ULL);
  CHECK(derive_seed(1, 5) == 0x80f73b756c8ca965ULL);
}

TEST_CASE("prng: uniform range and normal moments") {
  SplitMix64 rng(3);
  double sum = 0.0;
  double sq = 0.0;
  const int count = 20000;
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / count) < 0.05);
  CHECK(std::abs(sq / count - 1.0) < 0.05);
}

TEST_CASE("generate_random_avi: determinism and caps") {
  for (auto kind : {Monotonicity::strongly_monotone, Monotonicity::monotone_skew, Monotonicity::indefinite}) {
    CHECK(generate_random_avi(4, 6, kind, 11) == generate_random_avi(4, 6, kind, 11));
    CHECK_FALSE(generate_random_avi(4, 6, kind, 11) == generate_random_avi(4, 6, kind, 12));
  }
  CHECK_THROWS_AS(generate_random_avi(51, 2, Monotonicity::indefinite, 1), CapExceeded);
  CHECK_THROWS_AS(generate_random_avi(3, 17, Monotonicity::indefinite, 1), CapExceeded);
  CHECK(monotonicity_from_string(to_string(Monotonicity::monotone_skew)) == Monotonicity::monotone_skew);
  CHECK_THROWS_AS(monotonicity_from_string("convex"), SchemaError);
}

TEST_CASE("generate_random_avi: operator structure") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto sm = generate_random_avi(5, 4, Monotonicity::strongly_monotone, seed);
    const Matrix& m = sm.m_op();
    CHECK((m - m.transpose()).norm() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    CHECK(eig.eigenvalues().minCoeff() >= 1.0 - 1e-9);

    const auto sk = generate_random_avi(5, 4, Monotonicity::monotone_skew, seed);
    CHECK((sk.m_op() + sk.m_op().transpose()).norm() <= 1e-12);
  }
}

TEST_CASE("generate_random_avi: constraint sets are nonempty and bounded when m > n") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 4);
    const Index m = static_cast<Index>(seed % 9);
    const auto inst = generate_random_avi(n, m, Monotonicity::indefinite, seed);
    CHECK_FALSE(is_empty(inst.c_set()));
    if (m >= n + 1) {
      // Bounded iff every direction maximization is finite.
      for (Index j = 0; j < n; ++j) {
        for (double sign : {1.0, -1.0}) {
          LinearProgram lp;
          lp.objective = sign * Vector::Unit(n, j);
          lp.ineq_lhs = inst.c_set().ineq_lhs();
          lp.ineq_rhs = inst.c_set().ineq_rhs();
          lp.eq_lhs = Matrix(0, n);
          lp.eq_rhs = Vector(0);
          lp.sense = Sense::maximize;
          CHECK(solve_lp(lp).optimal());
        }
      }
    }
  }
}

TEST_CASE("generate_random_avi: 1-D strongly monotone instance has a single solution") {
  const auto inst = generate_random_avi(1, 1, Monotonicity::strongly_monotone, 7);
  const auto pieces = enumerate_solution_set(inst);
  REQUIRE_FALSE(pieces.empty());
  std::vector<Vector> pts;
  for (const auto& p : pieces) {
    CHECK(p.generators.is_bounded);
    for (const auto& v : p.generators.vertices) pts.push_back(v);
  }
  REQUIRE_FALSE(pts.empty());
  for (const auto& v : pts) {
    CHECK((v - pts.front()).norm() <= 1e-9);
    CHECK(is_solution(inst, v));
  }
}

TEST_CASE("generate_random_gpm: bounded sections have graph points and bounded sections") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto f = generate_random_gpm(3, 2, 1, 2, true, seed);
    CHECK(f == generate_random_gpm(3, 2, 1, 2, true, seed));
    CHECK_FALSE(is_empty(f.graph()));
    CHECK(f.num_rows() == 2 + 2 * 2);
  }
  CHECK_THROWS_AS(generate_random_gpm(51, 1, 1, 1, false, 1), CapExceeded);
}

TEST_CASE("truncation family") {
  const TruncationFamily h{Spectrum::harmonic};
  const TruncationFamily c{Spectrum::constant};
  const auto a = h.make(4);
  for (Index i = 0; i < 4; ++i) {
    CHECK(a.m_op()(i, i) == doctest::Approx(1.0 / static_cast<double>(i + 1)));
    CHECK(a.q()(i) == doctest::Approx(-1.0 / static_cast<double>(i + 1)));
  }
  CHECK(a.m_op().norm() == doctest::Approx(a.m_op().diagonal().norm()));
  CHECK(is_solution(a, Vector::Ones(4)));
  CHECK(c.make(3).m_op() == Matrix::Identity(3, 3));
  CHECK(h.make(1) == c.make(1));
  CHECK(is_separable(h.make(40)));
}

TEST_CASE("canned suite") {
  const auto suite = canned_suite();
  CHECK(suite.size() >= 8);
  std::size_t gpms = 0;
  for (const auto& e : suite) {
    CAPTURE(e.name);
    if (const auto* avi = std::get_if<AviInstance>(&e.item)) {
      CHECK_FALSE(enumerate_solution_set(*avi).empty());
    } else {
      ++gpms;
      const auto& f = std::get<GpMultifunction>(e.item);
      SplitMix64 rng(9);
      std::vector<Vector> xs;
      for (int t = 0; t < 10; ++t) xs.push_back(2.0 * rng.normal_vector(f.x_dim()));
      CHECK(verify_minimax(f, xs).pass);
    }
  }
  CHECK(gpms >= 2);
}

TEST_CASE("serialization round trip and errors") {
  for (const auto& e : canned_suite()) {
    CAPTURE(e.name);
    const std::string text = serialize_instance(e.item);
    const SuiteItem back = parse_instance(text);
    CHECK(back.index() == e.item.index());
    if (const auto* avi = std::get_if<AviInstance>(&e.item)) {
      CHECK(std::get<AviInstance>(back) == *avi);
    } else {
      CHECK(std::get<GpMultifunction>(back) == std::get<GpMultifunction>(e.item));
    }
    CHECK(serialize_instance(back) == text);
  }
  // Random doubles survive the text format exactly.
  const auto r = generate_random_avi(3, 5, Monotonicity::indefinite, 99);
  CHECK(std::get<AviInstance>(parse_instance(serialize_instance(r))) == r);

  CHECK_THROWS_AS(parse_instance("{ not json"), SchemaError);
  CHECK_THROWS_AS(parse_instance(R"({"schema_version":"2","kind":"avi","instance":{}})"), SchemaError);
  CHECK_THROWS_AS(parse_instance(R"({"kind":"avi","instance":{}})"), SchemaError);
  CHECK_THROWS_AS(parse_instance(R"({"schema_version":"1","kind":"lcp","instance":{}})"), SchemaError);
  CHECK_THROWS_AS(parse_instance(R"({"schema_version":"1","kind":"avi","instance":{"M":[[1]]}})"), SchemaError);
  CHECK_THROWS_AS(load_instance("/nonexistent/dir/x.json"), IoError);
}

TEST_CASE("files: layout, manifests and byte-identical regeneration") {
  const auto root = scratch_dir("instgen");
  ensure_layout(root);
  for (const char* sub : {"instances", "manifests", "reports"}) CHECK(std::filesystem::is_directory(root / sub));

  std::vector<InstanceManifest> manifests = {
      {"rand_avi", 21, "random_avi", {{"n", "3"}, {"m", "5"}, {"monotonicity", "monotone_skew"}}, "instances/rand_avi.json"},
      {"rand_gpm", 4, "random_gpm", {{"n", "2"}, {"r", "2"}, {"k", "1"}, {"p", "3"}, {"bounded_sections", "true"}},
       "instances/rand_gpm.json"},
      {"trunc", 0, "truncation", {{"spectrum", "harmonic"}, {"n", "6"}}, "instances/trunc.json"},
      {"canned", 0, "canned", {{"entry", "ray2d"}}, "instances/canned.json"},
  };
  for (const auto& m : manifests) {
    CAPTURE(m.name);
    save_instance(root / m.path, regenerate(m));
    const auto mpath = root / "manifests" / (m.name + ".json");
    save_manifest(mpath, m);
    const auto loaded = load_manifest(mpath);
    CHECK(loaded.name == m.name);
    CHECK(loaded.seed == m.seed);
    CHECK(loaded.generator == m.generator);
    CHECK(loaded.path == m.path);
    CHECK(serialize_instance(regenerate(loaded)) == slurp(root / loaded.path));
    CHECK(serialize_instance(load_instance(root / loaded.path)) == slurp(root / loaded.path));
  }

  InstanceManifest bad{"x", 0, "random_avi", {{"n", "three"}, {"m", "1"}, {"monotonicity", "indefinite"}}, "p"};
  CHECK_THROWS_AS(regenerate(bad), SchemaError);
  bad.generator = "mystery";
  CHECK_THROWS_AS(regenerate(bad), SchemaError);
  {
    std::ofstream(root / "manifests" / "broken.json") << R"({"schema_version":"0"})";
  }
  CHECK_THROWS_AS(load_manifest(root / "manifests" / "broken.json"), SchemaError);
  CHECK_THROWS_AS(load_manifest(root / "manifests" / "missing.json"), IoError);
  std::filesystem::remove_all(root);
}
