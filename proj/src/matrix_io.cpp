#include "delayiqc/matrix_io.hpp"

#include <fstream>

#include "delayiqc/error.hpp"

namespace delayiqc {

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    data.push_back(std::move(row));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j) {
  // A bare nested array is accepted as shorthand when it is non-empty.
  if (j.is_array()) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    return matrix_from_json(Json{{"rows", rows}, {"cols", cols}, {"data", j}});
  }
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw Error(ErrorCode::kConfig, "matrix needs rows, cols and data");
  }
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows) {
    throw Error(ErrorCode::kConfig, "matrix row count does not match data");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = data[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::kConfig, "matrix row " + std::to_string(i) + " has wrong length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[c].get<double>();
  }
  return m;
}

Json state_space_to_json(const StateSpace& sys) {
  return Json{{"A", matrix_to_json(sys.a())},
              {"B", matrix_to_json(sys.b())},
              {"C", matrix_to_json(sys.c())},
              {"D", matrix_to_json(sys.d())}};
}

StateSpace state_space_from_json(const Json& j) {
  for (const char* key : {"A", "B", "C", "D"}) {
    if (!j.contains(key)) throw Error(ErrorCode::kConfig, std::string("state space missing ") + key);
  }
  return StateSpace(matrix_from_json(j.at("A")), matrix_from_json(j.at("B")),
                    matrix_from_json(j.at("C")), matrix_from_json(j.at("D")));
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << j.dump(2) << '\n';
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.what());
  }
}

}  // namespace delayiqc
