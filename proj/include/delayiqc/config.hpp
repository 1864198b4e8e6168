#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "delayiqc/oracles.hpp"
#include "delayiqc/recipe.hpp"
#include "delayiqc/sos.hpp"

namespace delayiqc {

enum class AnalysisKind { kMargin, kGain, kSweep, kFactorize, kNyquist, kSimulate };
enum class Method { kAuto, kLmi, kSos, kFrequencyResponse };

AnalysisKind parse_analysis(const std::string& s);
std::string to_string(AnalysisKind a);
std::string to_string(Method m);

/// One of: builtin name, inline state space (or vertex list), polynomial listing.
struct PlantSource {
  std::string builtin;
  std::optional<LpvPlant> lpv;
  std::optional<PolynomialSystem> poly;
  std::optional<StateSpace> open_loop;  // SISO loop for the frequency-response margin

  bool is_polynomial() const { return poly.has_value(); }
};

struct SimulateSpec {
  std::string delay = "constant";  // constant | sinusoidal | piecewise
  double tau = 0.5;
  double rate = 0.0;
  std::vector<double> times, taus;
  double horizon = 20.0;
  double dt = 1e-3;
  std::string input = "step";  // step | sine | pulse
  double amplitude = 1.0;
  double omega = 1.0;
};

struct RunConfig {
  PlantSource plant;
  DelayChannelSpec delay;
  Recipe recipe;
  AnalysisKind analysis = AnalysisKind::kMargin;
  Method method = Method::kAuto;
  std::vector<int> v_degrees = {2};
  sdp::Options solver;
  BisectOptions bisection;
  std::vector<double> sweep_taus;
  std::vector<double> lambda;   // nyquist: fixed conic weights
  std::vector<double> omegas;   // nyquist: explicit frequencies
  double tau = 0.0;             // gain / factorize / nyquist delay
  SimulateSpec simulate;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int grid_density = 200;
};

/// Parses and validates a JSON run configuration. Unknown keys and type
/// errors throw ConfigError naming the field (and the line for syntax errors).
RunConfig parse_run_config(const std::string& text);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string config_hash(const std::string& text);

}  // namespace delayiqc
