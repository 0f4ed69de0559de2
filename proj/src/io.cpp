#include "qcp/io.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "qcp/errors.hpp"

namespace qcp::io {

namespace {

double finite_number(const json& value, const char* what) {
  if (!value.is_number()) throw InputError(std::string(what) + ": expected a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) throw InputError(std::string(what) + ": non-finite value");
  return x;
}

Complex complex_from_json(const json& entry) {
  if (!entry.is_array() || entry.size() != 2) {
    throw InputError("matrix entry must be a [re, im] pair");
  }
  return {finite_number(entry[0], "matrix entry"), finite_number(entry[1], "matrix entry")};
}

}  // namespace

json matrix_to_json(const ComplexMatrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      data.push_back({m(i, j).real(), m(i, j).imag()});
    }
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

ComplexMatrix matrix_from_json(const json& j) {
  if (!j.is_object()) throw InputError("matrix must be a JSON object");
  for (const char* key : {"rows", "cols", "data"}) {
    if (!j.contains(key)) throw InputError(std::string("matrix object is missing \"") + key + "\"");
  }
  auto count = [](const json& v) { return v.is_number_integer() && v.get<long long>() >= 0; };
  if (!count(j["rows"]) || !count(j["cols"])) {
    throw InputError("matrix rows/cols must be non-negative integers");
  }
  const auto rows = j["rows"].get<Eigen::Index>();
  const auto cols = j["cols"].get<Eigen::Index>();
  const auto& data = j["data"];
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InputError("matrix data length " + std::to_string(data.size()) + " != rows*cols = " +
                     std::to_string(rows * cols));
  }
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = complex_from_json(data[static_cast<std::size_t>(i * cols + c)]);
    }
  }
  return m;
}

json vector_to_json(const ComplexVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

json real_matrix_to_json(const RealMatrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::istringstream lines(text);
    std::string context;
    for (std::size_t i = 0; i < line && std::getline(lines, context); ++i) {
    }
    throw InputError(fmt::format("{}:{}:{}: JSON parse error near: {}", path.string(), line,
                                 column, context));
  }
}

ComplexMatrix read_matrix_file(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  try {
    return matrix_from_json(j);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string format_real(double value) { return fmt::format("{:.12g}", value); }

}  // namespace qcp::io
