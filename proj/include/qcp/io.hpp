#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "qcp/linalg.hpp"

namespace qcp::io {

using json = nlohmann::json;

/// {"rows": n, "cols": m, "data": [[re, im], ...]} in row-major order.
json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const json& j);

/// [[re, im], ...]
json vector_to_json(const ComplexVector& v);
json real_matrix_to_json(const RealMatrix& m);

/// Parses a file; JSON syntax errors are reported with line and column.
json read_json_file(const std::filesystem::path& path);
ComplexMatrix read_matrix_file(const std::filesystem::path& path);

/// Fixed 12-significant-digit formatting used by every CSV writer.
std::string format_real(double value);

}  // namespace qcp::io
