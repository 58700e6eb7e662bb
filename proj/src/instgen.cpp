#include "avieb/instgen.hpp"

#include "avieb/json_io.hpp"
#include "avieb/rng.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace avieb {

namespace {

void check_caps(Index value, Index cap, const char* what) {
  if (value < 0) throw DimensionMismatch(std::string(what) + " must be nonnegative");
  if (value > cap) {
    throw CapExceeded(std::string(what) + " = " + std::to_string(value) + " exceeds cap " + std::to_string(cap));
  }
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::string param(const InstanceManifest& m, const std::string& key) {
  for (const auto& [k, v] : m.parameters) {
    if (k == key) return v;
  }
  throw SchemaError("manifest parameter \"" + key + "\" missing");
}

Index param_index(const InstanceManifest& m, const std::string& key) {
  try {
    return static_cast<Index>(std::stoll(param(m, key)));
  } catch (const std::logic_error&) {
    throw SchemaError("manifest parameter \"" + key + "\" is not an integer");
  }
}

}  // namespace

const char* to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::strongly_monotone: return "strongly_monotone";
    case Monotonicity::monotone_skew: return "monotone_skew";
    case Monotonicity::indefinite: return "indefinite";
  }
  return "?";
}

Monotonicity monotonicity_from_string(const std::string& s) {
  if (s == "strongly_monotone") return Monotonicity::strongly_monotone;
  if (s == "monotone_skew") return Monotonicity::monotone_skew;
  if (s == "indefinite") return Monotonicity::indefinite;
  throw SchemaError("unknown monotonicity \"" + s + "\"");
}

const char* to_string(Spectrum s) { return s == Spectrum::harmonic ? "harmonic" : "constant"; }

AviInstance generate_random_avi(Index n, Index m, Monotonicity kind, std::uint64_t seed) {
  check_caps(n, 50, "n");
  check_caps(m, 16, "m");
  if (n == 0) throw DimensionMismatch("n must be positive");
  SplitMix64 rng(seed);

  Matrix mm;
  switch (kind) {
    case Monotonicity::strongly_monotone: {
      const Matrix a = rng.normal_matrix(n, n);
      mm = a.transpose() * a + Matrix::Identity(n, n);
      break;
    }
    case Monotonicity::monotone_skew: {
      const Matrix b = rng.normal_matrix(n, n);
      mm = b - b.transpose();
      break;
    }
    case Monotonicity::indefinite:
      mm = rng.normal_matrix(n, n);
      break;
  }
  const Vector q = rng.normal_vector(n);

  const Vector witness = rng.normal_vector(n);
  Matrix a(m, n);
  Vector b(m);
  const bool bounded = m >= n + 1;
  for (Index i = 0; i < m; ++i) {
    if (bounded && i < n) {
      a.row(i) = -Vector::Unit(n, i).transpose();
    } else if (bounded && i == n) {
      a.row(i) = Vector::Ones(n).transpose() / std::sqrt(static_cast<double>(n));
    } else {
      Vector row = rng.normal_vector(n);
      a.row(i) = row.transpose() / row.norm();
    }
    b(i) = a.row(i).dot(witness) + rng.uniform(0.5, 1.5);
  }
  return AviInstance(mm, q, PolyhedralSet(a, b));
}

GpMultifunction generate_random_gpm(Index n, Index r, Index k, Index p, bool bounded_sections,
                                    std::uint64_t seed) {
  check_caps(n, 50, "n");
  check_caps(r, 50, "r");
  check_caps(k, 50, "k");
  check_caps(p, 50, "p");
  SplitMix64 rng(seed);
  Matrix a1 = rng.normal_matrix(k, n);
  Matrix a2 = rng.normal_matrix(k, r);
  Vector z = rng.normal_vector(k);
  Matrix rx = rng.normal_matrix(p, n);
  Matrix ry = rng.normal_matrix(p, r);
  Vector rhs = rng.normal_vector(p);
  if (bounded_sections) {
    // Make the graph nonempty by shifting the data to a random graph point,
    // then box y around it.
    const Vector x0 = rng.normal_vector(n);
    const Vector y0 = rng.normal_vector(r);
    z = a1 * x0 + a2 * y0;
    for (Index i = 0; i < p; ++i) rhs(i) = rx.row(i).dot(x0) + ry.row(i).dot(y0) + rng.uniform(0.5, 1.5);
    Matrix bx = Matrix::Zero(p + 2 * r, n);
    Matrix by = Matrix::Zero(p + 2 * r, r);
    Vector bb(p + 2 * r);
    bx.topRows(p) = rx;
    by.topRows(p) = ry;
    bb.head(p) = rhs;
    for (Index j = 0; j < r; ++j) {
      by(p + 2 * j, j) = 1.0;
      bb(p + 2 * j) = y0(j) + 1.0;
      by(p + 2 * j + 1, j) = -1.0;
      bb(p + 2 * j + 1) = -y0(j) + 1.0;
    }
    rx = bx;
    ry = by;
    rhs = bb;
  }
  return GpMultifunction(a1, a2, z, rx, ry, rhs);
}

double TruncationFamily::mu(Index i) const {
  return spectrum == Spectrum::harmonic ? 1.0 / static_cast<double>(i) : 1.0;
}

AviInstance TruncationFamily::make(Index n) const {
  check_caps(n, 50, "n");
  if (n == 0) throw DimensionMismatch("n must be positive");
  Vector diag(n);
  for (Index i = 0; i < n; ++i) diag(i) = mu(i + 1);
  return AviInstance(diag.asDiagonal().toDenseMatrix(), -diag, PolyhedralSet::nonnegative_orthant(n));
}

std::vector<CannedEntry> canned_suite() {
  std::vector<CannedEntry> out;
  out.push_back({"lcp1d",
                 AviInstance(Matrix::Ones(1, 1), vec({-1}), PolyhedralSet::nonnegative_orthant(1)),
                 {1.0, std::nullopt, true, "R(x) = x - 1; C* = {1}"}});
  {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 1) = 1.0;
    out.push_back({"ray2d", AviInstance(m, vec({0, -1}), PolyhedralSet::nonnegative_orthant(2)),
                   {std::nullopt, std::nullopt, true, "C* = {(t, 1) : t >= 0}"}});
  }
  out.push_back({"zero_interval",
                 AviInstance(Matrix::Zero(1, 1), Vector::Zero(1), PolyhedralSet::box(vec({0}), vec({1}))),
                 {1.0, std::nullopt, true, "M = 0, q = 0: C* = C = [0, 1]"}});
  {
    Matrix a(3, 2);
    a << 1, 1, -1, 0, 0, -1;
    out.push_back({"zero_simplex", AviInstance(Matrix::Zero(2, 2), Vector::Zero(2), PolyhedralSet(a, vec({1, 0, 0}))),
                   {1.0, std::nullopt, true, "M = 0, q = 0: C* = C"}});
  }
  out.push_back({"identity_lcp3",
                 AviInstance(Matrix::Identity(3, 3), -Vector::Ones(3), PolyhedralSet::nonnegative_orthant(3)),
                 {1.0, std::nullopt, true, "C* = {(1, 1, 1)}"}});
  {
    Matrix m(2, 2);
    m << 0, 1, -1, 0;
    out.push_back({"skew2d", AviInstance(m, vec({-1, 0}), PolyhedralSet::nonnegative_orthant(2)),
                   {std::nullopt, std::nullopt, true, "C* = {(0, t) : t >= 1}"}});
  }
  out.push_back({"truncation_harmonic_5", TruncationFamily{Spectrum::harmonic}.make(5),
                 {std::nullopt, std::nullopt, true, "mu_i = 1/i; C* = {(1, ..., 1)}"}});
  out.push_back({"truncation_constant_5", TruncationFamily{Spectrum::constant}.make(5),
                 {1.0, std::nullopt, true, "mu_i = 1; C* = {(1, ..., 1)}"}});
  out.push_back({"gpm_identity",
                 GpMultifunction(-Matrix::Identity(2, 2), Matrix::Identity(2, 2), Vector::Zero(2), Matrix(0, 2),
                                 Matrix(0, 2), Vector(0)),
                 {std::nullopt, 1.0, true, "F(x) = {x}"}});
  {
    Matrix rx(2, 1);
    rx << -1, -1;
    Matrix ry(2, 1);
    ry << 1, -1;
    out.push_back({"gpm_interval",
                   GpMultifunction(Matrix(0, 1), Matrix(0, 1), Vector(0), rx, ry, Vector::Zero(2)),
                   {std::nullopt, 1.0, true, "F(x) = [-x, x], dom F = [0, inf)"}});
  }
  out.push_back({"gpm_scaled",
                 GpMultifunction(Matrix::Constant(1, 1, -2.0), Matrix::Ones(1, 1), Vector::Zero(1), Matrix(0, 1),
                                 Matrix(0, 1), Vector(0)),
                 {std::nullopt, 2.0, true, "F(x) = {2x}"}});
  return out;
}

std::string serialize_instance(const SuiteItem& item) {
  json::json doc;
  doc["schema_version"] = "1";
  if (const auto* avi = std::get_if<AviInstance>(&item)) {
    doc["kind"] = "avi";
    doc["instance"] = json::from_avi(*avi);
  } else {
    doc["kind"] = "gpm";
    doc["instance"] = json::from_gpm(std::get<GpMultifunction>(item));
  }
  return doc.dump(2) + "\n";
}

SuiteItem parse_instance(const std::string& text) {
  json::json doc;
  try {
    doc = json::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("schema_version") || doc.at("schema_version") != "1")
      throw SchemaError("unsupported or missing schema_version (expected \"1\")");
    if (!doc.contains("kind") || !doc.contains("instance")) throw SchemaError("missing \"kind\" or \"instance\"");
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "avi") return json::to_avi(doc.at("instance"));
    if (kind == "gpm") return json::to_gpm(doc.at("instance"));
    throw SchemaError("unknown instance kind \"" + kind + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid instance: ") + e.what());
  }
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

void save_instance(const std::filesystem::path& path, const SuiteItem& item) {
  write_text(path, serialize_instance(item));
}

SuiteItem load_instance(const std::filesystem::path& path) { return parse_instance(read_text(path)); }

void save_manifest(const std::filesystem::path& path, const InstanceManifest& manifest) {
  json::json doc;
  doc["schema_version"] = "1";
  doc["name"] = manifest.name;
  doc["seed"] = manifest.seed;
  doc["generator"] = manifest.generator;
  doc["parameters"] = json::json::object();
  for (const auto& [k, v] : manifest.parameters) doc["parameters"][k] = v;
  doc["path"] = manifest.path;
  write_text(path, doc.dump(2) + "\n");
}

InstanceManifest load_manifest(const std::filesystem::path& path) {
  json::json doc;
  try {
    doc = json::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed manifest: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("schema_version", "") != "1")
      throw SchemaError("unsupported or missing schema_version (expected \"1\")");
    InstanceManifest m;
    m.name = doc.at("name").get<std::string>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.generator = doc.at("generator").get<std::string>();
    for (const auto& [k, v] : doc.at("parameters").items()) m.parameters.emplace_back(k, v.get<std::string>());
    m.path = doc.at("path").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid manifest: ") + e.what());
  }
}

SuiteItem regenerate(const InstanceManifest& m) {
  if (m.generator == "random_avi") {
    return generate_random_avi(param_index(m, "n"), param_index(m, "m"),
                               monotonicity_from_string(param(m, "monotonicity")), m.seed);
  }
  if (m.generator == "random_gpm") {
    return generate_random_gpm(param_index(m, "n"), param_index(m, "r"), param_index(m, "k"), param_index(m, "p"),
                               param(m, "bounded_sections") == "true", m.seed);
  }
  if (m.generator == "truncation") {
    const std::string s = param(m, "spectrum");
    if (s != "harmonic" && s != "constant") throw SchemaError("unknown spectrum \"" + s + "\"");
    return TruncationFamily{s == "harmonic" ? Spectrum::harmonic : Spectrum::constant}.make(param_index(m, "n"));
  }
  if (m.generator == "canned") {
    for (auto& e : canned_suite()) {
      if (e.name == param(m, "entry")) return e.item;
    }
    throw SchemaError("unknown canned entry \"" + param(m, "entry") + "\"");
  }
  throw SchemaError("unknown generator \"" + m.generator + "\"");
}

void ensure_layout(const std::filesystem::path& root) {
  std::error_code ec;
  for (const char* sub : {"instances", "manifests", "reports"}) {
    std::filesystem::create_directories(root / sub, ec);
    if (ec) throw IoError("cannot create " + (root / sub).string() + ": " + ec.message());
  }
}

}  // namespace avieb
