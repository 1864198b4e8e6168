#pragma once

#include <limits>
#include <span>
#include <vector>

#include "delayiqc/linalg.hpp"

namespace delayiqc {

/// Continuous-time state-space model  x' = A x + B u,  y = C x + D u.
/// Immutable after construction; dimensions are validated by the constructor.
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d);

  /// Static gain with no states.
  static StateSpace gain(const Matrix& d);
  static StateSpace zero(int outputs, int inputs);
  static StateSpace identity(int n);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& c() const { return c_; }
  const Matrix& d() const { return d_; }

  int states() const { return static_cast<int>(a_.rows()); }
  int inputs() const { return static_cast<int>(d_.cols()); }
  int outputs() const { return static_cast<int>(d_.rows()); }
  bool is_static() const { return states() == 0; }

  /// All poles satisfy Re(p) < -margin.
  bool is_stable(double margin = kStabilityMargin) const;

 private:
  Matrix a_ = Matrix(0, 0);
  Matrix b_ = Matrix(0, 0);
  Matrix c_ = Matrix(0, 0);
  Matrix d_ = Matrix(0, 0);
};

inline constexpr double kInfiniteFrequency = std::numeric_limits<double>::infinity();

/// Ordered list of angular frequencies; an optional trailing +inf entry
/// stands for the ω → ∞ limit, evaluated from the D matrix.
class FrequencyGrid {
 public:
  FrequencyGrid() = default;
  explicit FrequencyGrid(std::vector<double> omegas);

  static FrequencyGrid log_spaced(double lo, double hi, int count, bool include_zero,
                                  bool include_infinity);

  const std::vector<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool has_infinity() const { return !points_.empty() && points_.back() == kInfiniteFrequency; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

 private:
  std::vector<double> points_;
};

enum class DelayKind { kConstant, kVarying };

struct DelayChannelSpec {
  int width = 1;
  DelayKind kind = DelayKind::kConstant;
  double max_delay = 1.0;
  double rate_bound = 0.0;

  void validate() const;
};

/// G(s) for complex s. Throws SingularResolvent when sI - A is singular.
CMatrix evaluate(const StateSpace& sys, Complex s);

/// G(jω); ω = +inf returns D.
CMatrix freq_response(const StateSpace& sys, double omega);

/// e^{-jωτ} - 1
Complex delay_deviation_response(double tau, double omega);

/// G~(s) = G(-s̄)^*, realized as (-A^T, -C^T, B^T, D^T).
StateSpace para_hermitian_conjugate(const StateSpace& sys);

/// SISO model from proper transfer-function coefficients (highest power first).
StateSpace from_transfer_function(std::span<const double> num, std::span<const double> den);

/// H(s) = G(c s) for c > 0.
StateSpace scale_frequency(const StateSpace& sys, double c);

StateSpace operator*(double k, const StateSpace& sys);
StateSpace operator*(const Matrix& left, const StateSpace& sys);
StateSpace operator*(const StateSpace& sys, const Matrix& right);

/// second(first(u))
StateSpace series(const StateSpace& first, const StateSpace& second);
/// g1 + g2
StateSpace parallel(const StateSpace& g1, const StateSpace& g2);
StateSpace operator+(const StateSpace& g1, const StateSpace& g2);
StateSpace operator-(const StateSpace& g1, const StateSpace& g2);
/// diag(g1, g2)
StateSpace append(const StateSpace& g1, const StateSpace& g2);
/// [g1; g2] driven by the same input.
StateSpace stack_outputs(const StateSpace& g1, const StateSpace& g2);
/// [g1, g2] acting on stacked inputs.
StateSpace stack_inputs(const StateSpace& g1, const StateSpace& g2);

StateSpace select_outputs(const StateSpace& sys, int first, int count);
StateSpace select_inputs(const StateSpace& sys, int first, int count);

/// Closed loop of u = r + sign * K y around G (default negative feedback).
StateSpace feedback(const StateSpace& g, const StateSpace& k, double sign = -1.0);

/// Static wiring for `interconnect`: all parts are appended into one block P
/// with stacked input u and output y, then closed with
///   u = internal * y + input * r,   out = output * y + feedthrough * r.
struct Wiring {
  Matrix internal;
  Matrix input;
  Matrix output;
  Matrix feedthrough;
};

/// Throws IllPosedLoop when I - D_P * internal is singular.
StateSpace interconnect(std::span<const StateSpace> parts, const Wiring& wiring);

/// Upper LFT F_u(G, Δ): Δ closes the first Δ.outputs() inputs and first
/// Δ.inputs() outputs of G.
StateSpace lft_upper(const StateSpace& g, const StateSpace& delta);

/// Inverse system (D square and invertible).
StateSpace inverse(const StateSpace& sys);

struct StableSplit {
  StateSpace stable;      // carries the full D matrix
  StateSpace antistable;  // zero D
};

/// Additive decomposition sys = stable + antistable via ordered real Schur form
/// and a Sylvester solve. Throws ImaginaryAxisPole if a pole lies within
/// `margin` of the imaginary axis.
StableSplit stable_unstable_split(const StateSpace& sys, double margin = kStabilityMargin);

/// Removes uncontrollable and unobservable states (orthogonal staircase with
/// relative rank tolerance `tol`).
StateSpace minimal_realization(const StateSpace& sys, double tol = 1e-9);

/// Balanced truncation of a stable model: drops states whose Hankel singular
/// values fall below tol * max.
StateSpace balanced_truncation(const StateSpace& sys, double tol = 1e-9);

/// max over the grid of ||G(jω_k) - H(jω_k)|| / (1 + ||G(jω_k)||).
double max_relative_gap(const StateSpace& g, const StateSpace& h, const FrequencyGrid& grid);

}  // namespace delayiqc
