#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "delayiqc/factorization.hpp"
#include "delayiqc/sdp.hpp"

namespace delayiqc {

/// Plant data on a parameter grid. Every vertex maps inputs (w, d) to
/// outputs (v, e); the first `nv` inputs/outputs form the delay channel.
struct LpvPlant {
  std::vector<StateSpace> vertices;
  std::vector<double> rho;  // parameter value per vertex (informational)
  int nv = 1;

  int states() const { return vertices.front().states(); }
  int nd() const { return vertices.front().inputs() - nv; }
  int ne() const { return vertices.front().outputs() - nv; }
  void validate() const;
};

/// Rewrites feedback with w̃ = D_τ v as feedback with w = S_τ v by the
/// substitution w̃ = w + v. Throws IllPosedLoop when I - D_vw is singular.
LpvPlant loop_shift(const LpvPlant& tilde);

/// One IQC in the analysis. With `base` set the multiplier is constant and
/// scaled by a full matrix X >= 0: M(X) = kron(base, X) and Ψ = I. Otherwise
/// the term enters as λ · M with λ >= 0.
struct IqcTerm {
  std::string name;
  Factorization factor;
  std::optional<Matrix> base;
};

/// Extended system with state [x_G; ψ_1; ...; ψ_K], inputs (w, d) and
/// outputs (z_1, ..., z_K, e).
struct ExtendedPlant {
  std::vector<StateSpace> vertices;
  std::vector<int> z_sizes;
  int nw = 0;
  int nd = 0;
  int ne = 0;
  double plant_scale = 1.0;  // largest plant data norm, sets the feasibility threshold

  int states() const { return vertices.front().states(); }
  int nz() const;
};

ExtendedPlant build_extended(const LpvPlant& g, const std::vector<IqcTerm>& terms);

enum class AnalysisStatus { kFeasible, kInfeasible, kNumericalFailure };
std::string to_string(AnalysisStatus s);

struct AnalysisOptions {
  sdp::Options sdp;
  /// Robust-stability test: feasible when the normalized LMI margin s*
  /// satisfies s* < -feasibility_tol * plant_scale.
  double feasibility_tol = 1e-8;
  /// Strictness of the gain LMI: -strict_eps * scale * I.
  double strict_eps = 1e-8;
  const sdp::Backend* backend = nullptr;
};

struct AnalysisResult {
  AnalysisStatus status = AnalysisStatus::kNumericalFailure;
  double gamma = std::numeric_limits<double>::infinity();
  double feasibility_margin = 0.0;  // s* of the normalized stability LMI
  std::vector<double> lambda;       // per term; trace of X for matrix scalings
  std::vector<Matrix> scalings;     // per term (1x1 for scalar λ)
  Matrix p;
  double lmi_max_eig = 0.0;         // re-assembled check, < 0 when feasible
  std::vector<std::string> hardness;
  sdp::Solution solver;
  std::string message;
};

/// Stability-only test (x, w block of the LMI).
AnalysisResult check_feasibility(const ExtendedPlant& ext, const std::vector<IqcTerm>& terms,
                                 const AnalysisOptions& options = {});

/// Minimizes γ² subject to the dissipation LMI at every vertex.
AnalysisResult solve_gain(const ExtendedPlant& ext, const std::vector<IqcTerm>& terms,
                          const AnalysisOptions& options = {});

/// Largest eigenvalue of the assembled LMI over all vertices for given
/// decision values (independent of the solver).
double assemble_lmi_max_eig(const ExtendedPlant& ext, const std::vector<IqcTerm>& terms,
                            const Matrix& p, const std::vector<Matrix>& scalings, double gamma_sq);

/// Same check restricted to the (x, w) block without the performance terms.
double assemble_stability_max_eig(const ExtendedPlant& ext, const std::vector<IqcTerm>& terms,
                                  const Matrix& p, const std::vector<Matrix>& scalings);

/// Multiplier set instantiated at a maximum delay.
using RecipeFn = std::function<std::vector<IqcTerm>(double tau_bar)>;

struct BisectOptions {
  double lo = 1e-3;
  double hi = 5.0;
  double tol = 1e-3;
};

struct MarginResult {
  double margin = 0.0;
  bool exceeds_cap = false;  // feasible at hi
  int steps = 0;
  std::vector<std::pair<double, bool>> probes;
};

/// Feasibility predicate evaluated at a maximum delay.
using FeasibleFn = std::function<bool(double tau_bar)>;

/// Generic monotone bisection. Throws InfeasibleAtLo.
MarginResult bisect_margin(const FeasibleFn& feasible, const BisectOptions& options);

MarginResult delay_margin(const LpvPlant& g, const RecipeFn& recipe, const BisectOptions& bisect = {},
                          const AnalysisOptions& options = {});

struct SweepPoint {
  double tau = 0.0;
  AnalysisResult result;
};

/// Per-delay gain bounds; failures are recorded and the sweep continues.
std::vector<SweepPoint> gain_sweep(const LpvPlant& g, const RecipeFn& recipe,
                                   const std::vector<double>& taus,
                                   const AnalysisOptions& options = {});

/// CSV with header "tau,gamma,status,lambda_1..K".
std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace delayiqc
