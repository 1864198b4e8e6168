#pragma once

#include <string>
#include <utility>
#include <vector>

#include "delayiqc/config.hpp"

namespace delayiqc {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kCsvSchema = "delayiqc-csv v1";

struct RunOutcome {
  int exit_code = 1;  // 0 success, 2 infeasible, 1 error
  std::string status;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  Json summary = Json::object();
};

/// Runs one analysis. Only configuration errors and bugs escape as exceptions;
/// analysis failures land in the outcome.
RunOutcome run(const RunConfig& config);

/// "# delayiqc-csv v1 <kind>" followed by the body.
std::string versioned_csv(const std::string& kind, const std::string& body);

}  // namespace delayiqc
