#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "delayiqc/error.hpp"
#include "delayiqc/run.hpp"

using namespace delayiqc;

namespace {

std::string config_file(const std::string& name) {
  std::ifstream f(std::string(DELAYIQC_SOURCE_DIR) + "/tests/configs/" + name);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

const std::string& file(const RunOutcome& r, const std::string& name) {
  for (const auto& [n, body] : r.files) {
    if (n == name) return body;
  }
  FAIL("missing output " << name);
  static const std::string empty;
  return empty;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("shipped configurations parse") {
  for (const char* name : {"margin_fr.json", "margin_lmi.json", "margin_sos.json", "gain.json", "sweep_milling.json",
                           "factorize.json", "nyquist.json", "simulate.json"}) {
    CAPTURE(name);
    Json j = Json::parse(config_file(name));
    j["analysis"] = std::string(name).substr(0, std::string(name).find_first_of("_."));
    CHECK_NOTHROW(parse_run_config(j.dump()));
  }
  const RunConfig c = parse_run_config(config_file("margin_sos.json"));  // margin is the default analysis
  CHECK(c.plant.is_polynomial());
  CHECK(c.v_degrees == std::vector<int>{2, 4});
  CHECK(c.bisection.hi == 3.0);
  const RunConfig s = parse_run_config(R"j({"analysis": "sweep", )j" + config_file("sweep_milling.json").substr(1));
  CHECK(s.sweep_taus.size() == 5);
  CHECK(s.recipe.items[1].rate == 0.3);
}

TEST_CASE("configuration errors name the field") {
  CHECK(contains(error_of(R"j({"plant": {"builtin": "nl-classical-loop-lin"}, "recipe": ["pi1"], "colour": 1})j"),
                 "colour"));
  CHECK(contains(error_of(R"j({"plant": {"builtin": "nl-classical-loop-lin"}, "recipe": ["pi1"],
                              "bisection": {"lo": "small"}})j"),
                 "bisection"));
  CHECK(contains(error_of("{\n  \"plant\": {\"builtin\": \"nl-classical-loop-lin\"},\n  \"recipe\": [\"pi1\",]\n}"),
                 "line 3"));
  CHECK(contains(error_of(R"j({"plant": {"builtin": "nope"}, "recipe": ["pi1"]})j"), "plant.builtin"));
  CHECK(contains(error_of(R"j({"plant": {"builtin": "nl-classical-loop-lin"}, "recipe": ["pi9"]})j"), "pi9"));
  CHECK(contains(error_of(R"j({"plant": {"builtin": "nl-classical-loop-lin"}, "recipe": ["pi1"], "v_degree": 3})j"),
                 "v_degrees"));
  CHECK(contains(error_of(R"j({"plant": {"builtin": "nl-classical-loop-lin"}, "recipe": ["pi1"], "method": "sos"})j"),
                 "method"));
  CHECK(contains(error_of(R"j({"plant": {"builtin": "milling(0.3)"}, "method": "frequency-response"})j"), "method"));
  CHECK(contains(error_of(R"j({"plant": {"builtin": "nl-classical-loop-lin", "polynomial": {}}, "recipe": ["pi1"]})j"),
                 "plant"));
  CHECK(contains(error_of(R"j({"plant": {"polynomial": {"x": ["x1"], "w": ["w1"], "d": ["d1"],
                              "f": ["-x1 + q"], "v": ["x1"], "e": ["x1"]}}, "recipe": ["pi1"]})j"),
                 "q"));
  CHECK(contains(error_of(R"j({"plant": {"builtin": "nl-classical-loop-lin"}, "recipe": ["pi1"],
                              "analysis": "sweep"})j"),
                 "sweep"));
}

TEST_CASE("inline plants") {
  const RunConfig c = parse_run_config(R"j({
    "plant": {"state_space": {"A": [[-1]], "B": [[1, 0]], "C": [[1], [0]], "D": [[0, 0], [0, 2]]}},
    "recipe": ["pi1", "pi3bar"], "tau": 0.5, "analysis": "gain"})j");
  REQUIRE(c.plant.lpv.has_value());
  CHECK(c.plant.lpv->vertices.front().states() == 1);
  const RunOutcome r = run(c);
  CHECK(r.exit_code == 0);
  CHECK(contains(file(r, "gain.csv"), "0.5,"));
}

TEST_CASE("config hash is 64-bit FNV-1a") {
  CHECK(config_hash("") == "cbf29ce484222325");
  CHECK(config_hash("a") == "af63dc4c8601ec8c");
  CHECK(config_hash("foobar") == "85944171f73967e8");
}

TEST_CASE("runs are deterministic and versioned") {
  for (const char* name : {"factorize.json", "nyquist.json", "simulate.json", "margin_fr.json"}) {
    CAPTURE(name);
    std::string text = config_file(name);
    Json j = Json::parse(text);
    const std::string sub = std::string(name).substr(0, std::string(name).find_first_of("_."));
    j["analysis"] = sub;
    const RunConfig c = parse_run_config(j.dump());
    const RunOutcome a = run(c), b = run(c);
    REQUIRE(a.files.size() == b.files.size());
    for (std::size_t k = 0; k < a.files.size(); ++k) {
      CHECK(a.files[k].first == b.files[k].first);
      CHECK(a.files[k].second == b.files[k].second);
      if (a.files[k].first.ends_with(".csv")) CHECK(a.files[k].second.rfind("# delayiqc-csv v1 ", 0) == 0);
    }
  }
}

TEST_CASE("gain run reports the certified bound") {
  Json j = Json::parse(config_file("gain.json"));
  j["analysis"] = "gain";
  const RunOutcome r = run(parse_run_config(j.dump()));
  CHECK(r.exit_code == 0);
  const std::string& csv = file(r, "gain.csv");
  CHECK(contains(csv, "tau,gamma,status,lambda_pi1,lambda_pi3bar\n0.5,5.32"));
}

TEST_CASE("infeasible analyses exit with code 2") {
  const RunOutcome r = run(parse_run_config(R"j({
    "plant": {"state_space": {"A": [[1]], "B": [[1, 1]], "C": [[1], [1]], "D": [[0, 0], [0, 0]]}},
    "recipe": ["pi1", "pi3bar"], "tau": 0.5, "analysis": "gain"})j"));
  CHECK(r.exit_code == 2);
  CHECK(r.status == "infeasible");
}

}
