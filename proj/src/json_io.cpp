#include "avieb/json_io.hpp"

#include <string>

namespace avieb::json {

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw SchemaError(std::string(what) + " must be a number");
  return j.get<double>();
}

}  // namespace

json from_vector(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json from_matrix(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(from_vector(m.row(i).transpose()));
  return out;
}

Vector to_vector(const json& j) {
  if (!j.is_array()) throw SchemaError("expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], "vector entry");
  return v;
}

Matrix to_matrix(const json& j, Index cols) {
  if (!j.is_array()) throw SchemaError("expected an array of rows");
  if (!j.empty()) {
    if (!j[0].is_array()) throw SchemaError("matrix rows must be arrays");
    cols = static_cast<Index>(j[0].size());
  }
  Matrix m(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = to_vector(j[i]);
    if (row.size() != cols) throw SchemaError("ragged matrix");
    m.row(static_cast<Index>(i)) = row.transpose();
  }
  return m;
}

json from_set(const PolyhedralSet& s) {
  json out;
  out["n"] = s.dim();
  out["ineq"] = json::array();
  for (Index i = 0; i < s.num_ineq(); ++i)
    out["ineq"].push_back({{"a", from_vector(s.ineq_lhs().row(i).transpose())}, {"b", s.ineq_rhs()(i)}});
  out["eq"] = json::array();
  for (Index i = 0; i < s.num_eq(); ++i)
    out["eq"].push_back({{"a", from_vector(s.eq_lhs().row(i).transpose())}, {"b", s.eq_rhs()(i)}});
  return out;
}

PolyhedralSet to_set(const json& j) {
  const json& nj = field(j, "n");
  if (!nj.is_number_integer() || nj.get<long long>() < 0) throw SchemaError("\"n\" must be a nonnegative integer");
  const Index n = nj.get<Index>();
  auto rows = [&](const char* key, Matrix& a, Vector& b) {
    const json& list = j.contains(key) ? j.at(key) : json::array();
    if (!list.is_array()) throw SchemaError(std::string("\"") + key + "\" must be an array");
    a.resize(static_cast<Index>(list.size()), n);
    b.resize(static_cast<Index>(list.size()));
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Vector row = to_vector(field(list[i], "a"));
      if (row.size() != n) throw SchemaError("constraint row length differs from n");
      a.row(static_cast<Index>(i)) = row.transpose();
      b(static_cast<Index>(i)) = number(field(list[i], "b"), "\"b\"");
    }
  };
  Matrix a, e;
  Vector b, d;
  rows("ineq", a, b);
  rows("eq", e, d);
  return PolyhedralSet(a, b, e, d);
}

json from_avi(const AviInstance& inst) {
  return {{"M", from_matrix(inst.m_op())}, {"q", from_vector(inst.q())}, {"C", from_set(inst.c_set())}};
}

AviInstance to_avi(const json& j) {
  const Vector q = to_vector(field(j, "q"));
  const Matrix m = to_matrix(field(j, "M"), q.size());
  try {
    return AviInstance(m, q, to_set(field(j, "C")));
  } catch (const DimensionMismatch& e) {
    throw SchemaError(std::string("inconsistent AVI data: ") + e.what());
  }
}

json from_gpm(const GpMultifunction& f) {
  json out;
  out["n"] = f.x_dim();
  out["r"] = f.y_dim();
  out["a1"] = from_matrix(f.a1());
  out["a2"] = from_matrix(f.a2());
  out["z"] = from_vector(f.z());
  out["rows"] = json::array();
  for (Index i = 0; i < f.num_rows(); ++i) {
    out["rows"].push_back({{"xstar", from_vector(f.row_x().row(i).transpose())},
                           {"ystar", from_vector(f.row_y().row(i).transpose())},
                           {"b", f.rhs()(i)}});
  }
  return out;
}

GpMultifunction to_gpm(const json& j) {
  const Vector z = to_vector(field(j, "z"));
  const json& rows = field(j, "rows");
  if (!rows.is_array()) throw SchemaError("\"rows\" must be an array");
  Index n = j.contains("n") ? j.at("n").get<Index>() : 0;
  Index r = j.contains("r") ? j.at("r").get<Index>() : 0;
  const Matrix a1 = to_matrix(field(j, "a1"), n);
  const Matrix a2 = to_matrix(field(j, "a2"), r);
  if (a1.rows() > 0) n = a1.cols();
  if (a2.rows() > 0) r = a2.cols();
  if (!rows.empty()) {
    n = static_cast<Index>(field(rows[0], "xstar").size());
    r = static_cast<Index>(field(rows[0], "ystar").size());
  }
  const Index p = static_cast<Index>(rows.size());
  Matrix rx(p, n), ry(p, r);
  Vector b(p);
  for (Index i = 0; i < p; ++i) {
    const Vector xs = to_vector(field(rows[static_cast<std::size_t>(i)], "xstar"));
    const Vector ys = to_vector(field(rows[static_cast<std::size_t>(i)], "ystar"));
    if (xs.size() != n || ys.size() != r) throw SchemaError("row lengths differ");
    rx.row(i) = xs.transpose();
    ry.row(i) = ys.transpose();
    b(i) = number(field(rows[static_cast<std::size_t>(i)], "b"), "\"b\"");
  }
  try {
    return GpMultifunction(a1, a2, z, rx, ry, b);
  } catch (const DimensionMismatch& e) {
    throw SchemaError(std::string("inconsistent multifunction data: ") + e.what());
  }
}

json from_vertices(const VertexSet& v) {
  json out;
  out["vertices"] = json::array();
  for (const auto& x : v.vertices) out["vertices"].push_back(from_vector(x));
  out["rays"] = json::array();
  for (const auto& x : v.recession_rays) out["rays"].push_back(from_vector(x));
  out["lineality"] = json::array();
  for (const auto& x : v.lineality) out["lineality"].push_back(from_vector(x));
  out["bounded"] = v.is_bounded;
  return out;
}

json from_pieces(const std::vector<InversePiece>& pieces) {
  json out = json::array();
  for (const auto& p : pieces) {
    json active = json::array();
    for (Index i : p.active.rows) active.push_back(i + 1);
    out.push_back({{"active", active}, {"set", from_set(p.x_set)}, {"generators", from_vertices(p.generators)}});
  }
  return out;
}

}  // namespace avieb::json
