#ifndef AVIEB_JSON_IO_HPP
#define AVIEB_JSON_IO_HPP

#include "avieb/avi.hpp"
#include "avieb/gpm.hpp"
#include "avieb/polyhedra.hpp"

#include <json.hpp>

namespace avieb::json {

using nlohmann::json;

json from_vector(const Vector& v);
json from_matrix(const Matrix& m);
Vector to_vector(const json& j);
/// Rows of equal length; `cols` fixes the width of an empty matrix.
Matrix to_matrix(const json& j, Index cols = 0);

json from_set(const PolyhedralSet& s);
PolyhedralSet to_set(const json& j);

json from_avi(const AviInstance& inst);
AviInstance to_avi(const json& j);

json from_gpm(const GpMultifunction& f);
GpMultifunction to_gpm(const json& j);

json from_vertices(const VertexSet& v);
json from_pieces(const std::vector<InversePiece>& pieces);

}  // namespace avieb::json

#endif  // AVIEB_JSON_IO_HPP
