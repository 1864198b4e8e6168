#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delayiqc/lti.hpp"

namespace delayiqc {

enum class DelayValidity { kConstantDelay, kVaryingDelay };
enum class HardnessClass { kNaturalHard, kJSpectralCandidate, kUnchecked };

std::string to_string(DelayValidity v);
std::string to_string(HardnessClass h);

/// Factor pair (Ψ, M) known in closed form at construction time.
struct NaturalFactor {
  StateSpace psi;
  Matrix m;
};

/// Para-Hermitian multiplier Π = [[π11, π21~], [π21, π22]] acting on the
/// stacked delay-channel signals (v, w). Blocks are rational (static blocks
/// are stored as zero-state systems).
struct Multiplier {
  std::string name;
  StateSpace pi11;  // n x n
  StateSpace pi21;  // n x n
  StateSpace pi22;  // n x n
  DelayValidity validity = DelayValidity::kConstantDelay;
  double tau_bar = kInfiniteFrequency;  // covering range [0, tau_bar]
  double rate = 0.0;
  bool covering = true;
  HardnessClass hardness = HardnessClass::kUnchecked;
  std::optional<NaturalFactor> natural;

  int channels() const { return pi11.outputs(); }
  int size() const { return 2 * channels(); }

  /// Π(jω) as a full Hermitian matrix; ω = +inf uses the D matrices.
  CMatrix evaluate(double omega) const;

  /// Π realized as one system with inputs/outputs (v, w).
  StateSpace as_system() const;
};

/// Transfer functions used by the catalog; `tau_bar` rescales s -> s·tau_bar.
StateSpace phi2(double tau_bar);
StateSpace phi3(double tau_bar);
/// First-order weight g·c·s / (eps·c·s + 1) bounding the varying-delay
/// deviation, c = tau_bar (half = false) or tau_bar / 2 (half = true).
StateSpace rate_weight(double tau_bar, double rate, bool half);
/// Padé(3,3) approximation of e^{-s·tau}.
StateSpace pade33(double tau);

/// Constant-delay catalog.
Multiplier make_pi1();
Multiplier make_pi2_bar(double tau_bar);
Multiplier make_pi3_bar(double tau_bar);

/// Varying-delay catalog. X defaults to the scalar 1.
Multiplier make_pi4(double rate, const Matrix& x = Matrix::Identity(1, 1));
Multiplier make_pi5(double tau_bar, double rate);
Multiplier make_pi6(double tau_bar, double rate);

/// Multiplicative slack applied to φ6 to absorb the Padé error; see make_pi6.
double pi6_pade_inflation(double tau_bar, double rate);

enum class CircleCase { kDiskInterior, kHalfPlane, kDiskExterior };
std::string to_string(CircleCase c);

/// Pointwise geometry of the set {S : [1; S]* Π(jω) [1; S] >= 0}.
/// Disks report center/radius. The half-plane case reports the boundary
/// point nearest the origin as `center` and the inward normal in `normal`.
struct NormalizedQC {
  CircleCase kind = CircleCase::kDiskInterior;
  Complex center{0.0, 0.0};
  double radius = 0.0;
  Complex normal{0.0, 0.0};
  double omega = 0.0;
};

NormalizedQC circle_geometry(const Multiplier& pi, double omega);

/// Σ λ_k Π_k. Throws NegativeCoefficient for λ_k < 0.
Multiplier conic_combine(const std::vector<Multiplier>& parts, const std::vector<double>& lambda);

/// Repeated n-channel version with blocks π_ij ⊗ X. Throws NotPsd.
Multiplier scale_repeated(const Multiplier& pi, int n, const Matrix& x);

struct CoveringReport {
  double min_margin = 0.0;
  double worst_tau = 0.0;
  double worst_omega = 0.0;
  std::size_t points = 0;
  bool covered() const { return min_margin >= 0.0; }
};

/// Minimum over the grids of [1; Ŝτ(jω)]* Π(jω) [1; Ŝτ(jω)]. The ω = inf
/// entry samples Ŝ over the whole circle |S + 1| = 1.
CoveringReport check_covering(const Multiplier& pi, const std::vector<double>& tau_grid,
                              const FrequencyGrid& omega_grid);

/// 200 log-spaced points on [1e-3, 1e3] / tau_bar plus ω = inf.
FrequencyGrid covering_frequency_grid(double tau_bar, int count = 200);
/// `count` evenly spaced delays on [0, tau_bar].
std::vector<double> covering_delay_grid(double tau_bar, int count = 50);

/// Rows "omega,case,center_re,center_im,radius" for Nyquist plots.
std::string circle_csv(const Multiplier& pi, const FrequencyGrid& grid);

/// Kronecker product helper shared by the repeated-channel constructions.
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace delayiqc
