#pragma once

#include <string>

#include "json.hpp"
#include "delayiqc/lti.hpp"

namespace delayiqc {

using Json = nlohmann::json;

// Matrices are stored as {"rows": r, "cols": c, "data": [[...], ...]} in
// row-major nested arrays. Dimensions are explicit so empty matrices survive.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

// {"A": ..., "B": ..., "C": ..., "D": ...}
Json state_space_to_json(const StateSpace& sys);
StateSpace state_space_from_json(const Json& j);

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

}  // namespace delayiqc
