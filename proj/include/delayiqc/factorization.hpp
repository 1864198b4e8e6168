#pragma once

#include <string>

#include "delayiqc/matrix_io.hpp"
#include "delayiqc/multipliers.hpp"

namespace delayiqc {

enum class FactorKind { kNatural, kGeneric, kJSpectral };
enum class FactorHardness { kHardCertified, kNaturalHard, kEmpiricalOnly };

std::string to_string(FactorKind k);
std::string to_string(FactorHardness h);

/// Π = Ψ~ M Ψ with Ψ stable. Ψ takes (v, w) and produces z.
struct Factorization {
  StateSpace psi;
  Matrix m;
  FactorKind kind = FactorKind::kGeneric;
  FactorHardness hardness = FactorHardness::kEmpiricalOnly;
  double residual = 0.0;      // grid residual against the source multiplier
  double are_residual = 0.0;  // j-spectral only
  double regularization = 0.0;
  int p = 0;
  int q = 0;

  int z_size() const { return psi.outputs(); }
};

/// 200 log-spaced points over six decades around 1/tau_bar plus 0 and inf.
FrequencyGrid verification_grid(double tau_bar);

/// max_ω ||Ψ* M Ψ - Π|| / (1 + ||Π||).
double factorization_residual(const StateSpace& psi, const Matrix& m, const Multiplier& pi,
                              const FrequencyGrid& grid);

/// Closed-form factor stored with the multiplier. Throws InvalidArgument if
/// the multiplier has none.
Factorization natural_factorization(const Multiplier& pi);

/// Stable/antistable split: Ψ = [(sI-A)^{-1}B; I], M = [[0, C^T], [C, Dπ]].
Factorization factorize_generic(const Multiplier& pi);

struct Signature {
  Matrix w;
  int p = 0;
  int q = 0;
};

/// Dπ = W^T J_{p,q} W from an eigendecomposition. Throws SingularDpi.
Signature signature_decomposition(const Matrix& d);

/// Square, stable, stably invertible Ψ with M = J_{p,q}. `regularization`
/// adds ε·diag(I, 0) to Π first. Throws SingularDpi / NoStabilizingSolution.
Factorization j_spectral(const Multiplier& pi, double regularization = 0.0);

struct HardCheck {
  bool pass = true;
  double omega = 0.0;
  std::string block;  // "pi11" or "pi22" on failure
  double value = 0.0;
};

/// Π11(jω) > δ and Π22(jω) < -δ on every grid point.
HardCheck check_hard_conditions(const Multiplier& pi, const FrequencyGrid& grid,
                                double delta = 1e-9, double regularization = 0.0);

enum class FactorPolicy { kAuto, kNatural, kGeneric, kJSpectral };

/// kAuto: natural factor when the multiplier has one, else the generic split.
Factorization factorize(const Multiplier& pi, FactorPolicy policy = FactorPolicy::kAuto);

Json factorization_to_json(const Factorization& f);

}  // namespace delayiqc
