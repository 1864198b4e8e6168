#include "delayiqc/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "delayiqc/builtins.hpp"
#include "delayiqc/error.hpp"

namespace delayiqc {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kConfig, where + ": " + what);
}

void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, val] : obj.items()) {
    if (!allowed.contains(key)) fail(where, "unknown key '" + key + "'");
  }
}

template <class T>
T get(const Json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    fail(where + "." + key, "wrong type");
  }
}

std::vector<double> doubles(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list of numbers");
  std::vector<double> out;
  for (const Json& v : j) {
    if (!v.is_number()) fail(where, "expected a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::string> strings(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list of strings");
  std::vector<std::string> out;
  for (const Json& v : j) {
    if (!v.is_string()) fail(where, "expected a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

PolynomialSystem parse_polynomial_plant(const Json& j) {
  const std::string where = "plant.polynomial";
  check_keys(j, where, {"x", "w", "d", "f", "v", "e"});
  for (const char* k : {"x", "w", "d", "f", "v", "e"}) {
    if (!j.contains(k)) fail(where, std::string("missing '") + k + "'");
  }
  const auto xs = strings(j["x"], where + ".x");
  const auto ws = strings(j["w"], where + ".w");
  const auto ds = strings(j["d"], where + ".d");
  PolynomialSystem s;
  s.nx = static_cast<int>(xs.size());
  s.nw = static_cast<int>(ws.size());
  s.nd = static_cast<int>(ds.size());
  s.names = xs;
  s.names.insert(s.names.end(), ws.begin(), ws.end());
  s.names.insert(s.names.end(), ds.begin(), ds.end());
  auto polys = [&](const char* key) {
    std::vector<Polynomial> out;
    const auto texts = strings(j[key], where + "." + key);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      try {
        out.push_back(parse_polynomial(texts[i], s.names));
      } catch (const Error& e) {
        fail(where + "." + key + "[" + std::to_string(i) + "]", e.what());
      }
    }
    return out;
  };
  s.f = polys("f");
  s.h1 = polys("v");
  s.h2 = polys("e");
  try {
    s.validate();
  } catch (const Error& e) {
    fail(where, e.what());
  }
  return s;
}

PlantSource parse_plant(const Json& j, int grid) {
  check_keys(j, "plant", {"builtin", "state_space", "vertices", "nv", "polynomial", "open_loop"});
  PlantSource p;
  const int nv = get<int>(j, "nv", "plant", 1);
  int sources = 0;
  if (j.contains("builtin")) {
    ++sources;
    p.builtin = get<std::string>(j, "builtin", "plant", "");
    if (p.builtin == "nl-classical-loop") {
      p.poly = nl_classical_loop();
      p.open_loop = classical_loop_open();
    } else {
      try {
        p.lpv = builtin_lpv(p.builtin, grid);
      } catch (const Error& e) {
        fail("plant.builtin", e.what());
      }
      if (p.builtin == "nl-classical-loop-lin") p.open_loop = classical_loop_open();
    }
  }
  try {
    if (j.contains("state_space")) {
      ++sources;
      LpvPlant g;
      g.vertices = {state_space_from_json(j["state_space"])};
      g.rho = {0.0};
      g.nv = nv;
      g.validate();
      p.lpv = g;
    }
    if (j.contains("vertices")) {
      ++sources;
      if (!j["vertices"].is_array() || j["vertices"].empty()) fail("plant.vertices", "expected a nonempty list");
      LpvPlant g;
      for (const Json& v : j["vertices"]) g.vertices.push_back(state_space_from_json(v));
      g.rho.assign(g.vertices.size(), 0.0);
      g.nv = nv;
      g.validate();
      p.lpv = g;
    }
    if (j.contains("open_loop")) p.open_loop = state_space_from_json(j["open_loop"]);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    fail("plant", e.what());
  } catch (const Json::exception& e) {
    fail("plant", e.what());
  }
  if (j.contains("polynomial")) {
    ++sources;
    p.poly = parse_polynomial_plant(j["polynomial"]);
  }
  if (sources != 1) fail("plant", "give exactly one of builtin, state_space, vertices, polynomial");
  return p;
}

Method parse_method(const std::string& s) {
  if (s == "auto") return Method::kAuto;
  if (s == "lmi") return Method::kLmi;
  if (s == "sos") return Method::kSos;
  if (s == "frequency-response") return Method::kFrequencyResponse;
  fail("method", "unknown method '" + s + "'");
}

SimulateSpec parse_simulate(const Json& j) {
  const std::string where = "simulate";
  check_keys(j, where, {"delay", "tau", "rate", "times", "taus", "horizon", "dt", "input", "amplitude", "omega"});
  SimulateSpec s;
  s.delay = get<std::string>(j, "delay", where, s.delay);
  s.tau = get<double>(j, "tau", where, s.tau);
  s.rate = get<double>(j, "rate", where, s.rate);
  if (j.contains("times")) s.times = doubles(j["times"], where + ".times");
  if (j.contains("taus")) s.taus = doubles(j["taus"], where + ".taus");
  s.horizon = get<double>(j, "horizon", where, s.horizon);
  s.dt = get<double>(j, "dt", where, s.dt);
  s.input = get<std::string>(j, "input", where, s.input);
  s.amplitude = get<double>(j, "amplitude", where, s.amplitude);
  s.omega = get<double>(j, "omega", where, s.omega);
  if (s.delay != "constant" && s.delay != "sinusoidal" && s.delay != "piecewise") {
    fail(where + ".delay", "expected constant, sinusoidal or piecewise");
  }
  if (s.input != "step" && s.input != "sine" && s.input != "pulse") {
    fail(where + ".input", "expected step, sine or pulse");
  }
  if (!(s.horizon > 0.0) || !(s.dt > 0.0)) fail(where, "horizon and dt must be positive");
  return s;
}

int line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

}  // namespace

AnalysisKind parse_analysis(const std::string& s) {
  if (s == "margin") return AnalysisKind::kMargin;
  if (s == "gain") return AnalysisKind::kGain;
  if (s == "sweep") return AnalysisKind::kSweep;
  if (s == "factorize") return AnalysisKind::kFactorize;
  if (s == "nyquist") return AnalysisKind::kNyquist;
  if (s == "simulate") return AnalysisKind::kSimulate;
  fail("analysis", "unknown analysis '" + s + "'");
}

std::string to_string(AnalysisKind a) {
  switch (a) {
    case AnalysisKind::kMargin: return "margin";
    case AnalysisKind::kGain: return "gain";
    case AnalysisKind::kSweep: return "sweep";
    case AnalysisKind::kFactorize: return "factorize";
    case AnalysisKind::kNyquist: return "nyquist";
    case AnalysisKind::kSimulate: return "simulate";
  }
  return "?";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kAuto: return "auto";
    case Method::kLmi: return "lmi";
    case Method::kSos: return "sos";
    case Method::kFrequencyResponse: return "frequency-response";
  }
  return "?";
}

RunConfig parse_run_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kConfig, "line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  check_keys(j, "config", {"plant", "delay", "recipe", "analysis", "method", "v_degree", "v_degrees", "solver",
                           "bisection", "sweep", "lambda", "omegas", "tau", "simulate", "output", "seed", "grid_density",
                           "vertex_grid"});
  RunConfig c;
  c.seed = get<std::uint64_t>(j, "seed", "config", c.seed);
  c.grid_density = get<int>(j, "grid_density", "config", c.grid_density);
  if (c.grid_density < 2) fail("grid_density", "must be at least 2");
  const int vertex_grid = get<int>(j, "vertex_grid", "config", 2);
  if (!j.contains("plant")) fail("config", "missing 'plant'");
  c.plant = parse_plant(j["plant"], vertex_grid);
  const int nv = c.plant.poly ? c.plant.poly->nw : c.plant.lpv->nv;

  if (j.contains("delay")) {
    const Json& d = j["delay"];
    check_keys(d, "delay", {"kind", "max_delay", "rate_bound", "width"});
    const std::string kind = get<std::string>(d, "kind", "delay", "constant");
    if (kind != "constant" && kind != "varying") fail("delay.kind", "expected constant or varying");
    c.delay.kind = kind == "constant" ? DelayKind::kConstant : DelayKind::kVarying;
    c.delay.max_delay = get<double>(d, "max_delay", "delay", c.delay.max_delay);
    c.delay.rate_bound = get<double>(d, "rate_bound", "delay", c.delay.rate_bound);
    c.delay.width = get<int>(d, "width", "delay", nv);
  } else {
    c.delay.width = nv;
  }
  try {
    c.delay.validate();
  } catch (const Error& e) {
    fail("delay", e.what());
  }
  if (c.delay.width != nv) fail("delay.width", "does not match the plant's delay channels");

  c.analysis = parse_analysis(get<std::string>(j, "analysis", "config", "margin"));
  c.method = parse_method(get<std::string>(j, "method", "config", "auto"));
  if (c.analysis != AnalysisKind::kSimulate && c.method != Method::kFrequencyResponse) {
    if (!j.contains("recipe")) fail("config", "missing 'recipe'");
  }
  if (j.contains("recipe")) {
    try {
      c.recipe = recipe_from_json(j["recipe"], nv);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kConfig) throw;
      fail("recipe", e.what());
    } catch (const Json::exception& e) {
      fail("recipe", e.what());
    }
  }
  if (j.contains("v_degree")) c.v_degrees = {get<int>(j, "v_degree", "config", 2)};
  if (j.contains("v_degrees")) {
    c.v_degrees.clear();
    for (double v : doubles(j["v_degrees"], "v_degrees")) c.v_degrees.push_back(static_cast<int>(v));
  }
  for (int v : c.v_degrees) {
    if (v < 2 || v % 2 != 0) fail("v_degrees", "degrees must be even and at least 2");
  }

  if (j.contains("solver")) {
    const Json& s = j["solver"];
    check_keys(s, "solver", {"gap_tol", "feas_tol", "max_iterations", "verbose"});
    c.solver.gap_tol = get<double>(s, "gap_tol", "solver", c.solver.gap_tol);
    c.solver.feas_tol = get<double>(s, "feas_tol", "solver", c.solver.feas_tol);
    c.solver.max_iterations = get<int>(s, "max_iterations", "solver", c.solver.max_iterations);
    c.solver.verbose = get<bool>(s, "verbose", "solver", false);
  }
  if (j.contains("bisection")) {
    const Json& b = j["bisection"];
    check_keys(b, "bisection", {"lo", "hi", "tol"});
    c.bisection.lo = get<double>(b, "lo", "bisection", c.bisection.lo);
    c.bisection.hi = get<double>(b, "hi", "bisection", c.bisection.hi);
    c.bisection.tol = get<double>(b, "tol", "bisection", c.bisection.tol);
    if (!(c.bisection.lo > 0.0) || !(c.bisection.hi > c.bisection.lo) || !(c.bisection.tol > 0.0)) {
      fail("bisection", "need 0 < lo < hi and tol > 0");
    }
  }
  if (j.contains("sweep")) {
    const Json& s = j["sweep"];
    if (s.is_array()) {
      c.sweep_taus = doubles(s, "sweep");
    } else {
      check_keys(s, "sweep", {"lo", "hi", "points"});
      const double lo = get<double>(s, "lo", "sweep", 0.05);
      const double hi = get<double>(s, "hi", "sweep", 1.5);
      const int n = get<int>(s, "points", "sweep", 20);
      if (n < 1 || !(hi >= lo) || !(lo >= 0.0)) fail("sweep", "need 0 <= lo <= hi and points >= 1");
      for (int k = 0; k < n; ++k) c.sweep_taus.push_back(n == 1 ? lo : lo + (hi - lo) * k / (n - 1));
    }
  }
  if (j.contains("lambda")) c.lambda = doubles(j["lambda"], "lambda");
  if (j.contains("omegas")) c.omegas = doubles(j["omegas"], "omegas");
  c.tau = get<double>(j, "tau", "config", c.delay.max_delay);
  if (!(c.tau >= 0.0)) fail("tau", "must be nonnegative");
  if (j.contains("simulate")) c.simulate = parse_simulate(j["simulate"]);
  if (j.contains("output")) {
    check_keys(j["output"], "output", {"dir"});
    c.out_dir = get<std::string>(j["output"], "dir", "output", c.out_dir);
  }

  if (c.analysis == AnalysisKind::kSweep && c.sweep_taus.empty()) fail("sweep", "sweep analysis needs delays");
  if (c.analysis == AnalysisKind::kNyquist && !c.lambda.empty() && c.lambda.size() != c.recipe.items.size()) {
    fail("lambda", "needs one weight per recipe item");
  }
  if (c.method == Method::kSos && !c.plant.poly) fail("method", "sos needs a polynomial plant");
  if (c.method == Method::kLmi && !c.plant.lpv) fail("method", "lmi needs a linear plant");
  if (c.method == Method::kFrequencyResponse && !c.plant.open_loop) {
    fail("method", "frequency-response needs plant.open_loop or a builtin with one");
  }
  return c;
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace delayiqc
