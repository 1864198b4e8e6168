#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "delayiqc/factorization.hpp"
#include "delayiqc/polynomial.hpp"

namespace delayiqc {

struct FrMargin {
  double tau = 0.0;
  double omega = 0.0;
  double phase_margin = 0.0;  // radians in [0, 2π)
};

/// Exact delay margin of the negative-feedback loop around the SISO open loop
/// L(s) e^{-sτ}. Throws NoCrossover when |L(jω)| never crosses 1.
FrMargin fr_delay_margin(const StateSpace& loop, double omega_lo = 1e-4, double omega_hi = 1e4,
                         int scan = 4000);

/// Largest singular value over a grid.
double hinf_norm_grid(const StateSpace& sys, const FrequencyGrid& grid);

struct DelayedGain {
  double gain = 0.0;
  double omega = 0.0;
};

/// Gain of the loop closed with w = (e^{-jωτ} - 1) v on the first nv channels,
/// maximized over the grid and refined around the peak.
DelayedGain delayed_fr_gain(const StateSpace& g, int nv, double tau, const FrequencyGrid& grid);

class DelayTrajectory {
 public:
  enum class Kind { kConstant, kSinusoidal, kPiecewise };

  static DelayTrajectory constant(double tau);
  /// τ(t) = τ̄/2 (1 + sin(2 r t / τ̄)): range [0, τ̄], rate exactly r.
  static DelayTrajectory sinusoidal(double tau_bar, double rate);
  /// Linear between (t_k, τ_k) knots, held constant after the last.
  static DelayTrajectory piecewise(std::vector<double> times, std::vector<double> taus);

  Kind kind() const { return kind_; }
  double operator()(double t) const;
  double tau_max() const { return tau_max_; }
  double tau_min() const { return tau_min_; }
  double rate_max() const { return rate_max_; }
  /// Checks the bounds on a sample grid over [0, horizon].
  void validate(double horizon) const;

 private:
  Kind kind_ = Kind::kConstant;
  double tau_bar_ = 0.0;
  double rate_ = 0.0;
  std::vector<double> times_, taus_;
  double tau_max_ = 0.0, tau_min_ = 0.0, rate_max_ = 0.0;
};

/// History of a sampled signal on a uniform grid, kept in a ring buffer long
/// enough for the largest delay. Zero before t = 0.
class DelayLine {
 public:
  DelayLine(int width, double dt, double max_delay);
  void push(const Vector& v);
  /// Linear interpolation; past the newest sample it extrapolates from the
  /// last two.
  Vector at(double t) const;
  double last_time() const { return (count_ - 1) * dt_; }

 private:
  Vector sample(long k) const;
  int width_;
  double dt_;
  long count_ = 0;
  std::vector<Vector> ring_;
};

using InputFn = std::function<Vector(double t)>;

struct SimResult {
  std::vector<double> t;
  Matrix v, w, e, d;  // one row per sample
  Matrix z;           // filled by the IQC check only
  double dt = 0.0;
  std::string integrator = "rk4";

  /// ∫ |rows|² dt by the trapezoid rule.
  static double energy(const Matrix& signal, double dt);
};

/// Plant with delayed channel: x' = f(x, w, d), v = h1(x, w, d),
/// e = h2(x, w, d), closed with w(t) = v(t - τ(t)) - v(t), zero initial state.
struct DelayedModel {
  int nx = 0, nv = 0, nd = 0, ne = 0;
  /// v given x, the delayed v and d (the loop with w is solved here).
  std::function<Vector(const Vector& x, const Vector& v_delayed, const Vector& d)> v;
  /// v with w = 0 (zero delay).
  std::function<Vector(const Vector& x, const Vector& d)> v0;
  std::function<Vector(const Vector& x, const Vector& w, const Vector& d)> f;
  std::function<Vector(const Vector& x, const Vector& w, const Vector& d)> e;
};

/// Inputs (w, d), outputs (v, e); the first nv channels are delayed.
DelayedModel delayed_model(const StateSpace& g, int nv);
/// Requires v independent of w.
DelayedModel delayed_model(const PolynomialSystem& sys);

/// Fixed-step RK4. Throws StepTooLarge when dt > τ_min / 10 for τ_min > 0.
SimResult simulate_delayed(const DelayedModel& model, const DelayTrajectory& delay, const InputFn& d,
                           double dt, double horizon);

struct ProbeOptions {
  int sines = 30;
  int multisines = 10;
  std::uint64_t seed = 1;
  double omega_lo = 0.0;  // 0 picks from the plant poles
  double omega_hi = 0.0;
  double horizon = 0.0;   // 0 picks 40 / slowest pole
  double amplitude = 1.0;
  double dt = 0.0;        // 0 picks from the fastest pole, the delay and the probe
};

struct GainEstimate {
  double gamma_lb = 0.0;
  std::string probe;
  double omega = 0.0;
};

/// max ‖e‖/‖d‖ over windowed sinusoids and random-phase multisines. A lower
/// bound on the induced gain up to integration error.
GainEstimate empirical_l2_gain(const DelayedModel& model, const Matrix& linear_a, const DelayTrajectory& delay,
                               const ProbeOptions& options = {});
GainEstimate empirical_l2_gain(const StateSpace& g, int nv, const DelayTrajectory& delay,
                               const ProbeOptions& options = {});
GainEstimate empirical_l2_gain(const PolynomialSystem& sys, const DelayTrajectory& delay,
                               const ProbeOptions& options = {});

struct IqcProbeOptions {
  int probes = 20;
  std::uint64_t seed = 7;
  std::vector<double> horizons = {5.0, 20.0, 60.0};
  double dt = 1e-3;
  double omega_lo = 0.05;
  double omega_hi = 20.0;
};

struct IqcCheckResult {
  double min_normalized = 0.0;  // min ∫ z^T M z / ∫ |v|²
  int worst_probe = -1;
  double worst_horizon = 0.0;
};

/// Drives (v, w) with w = v(t - τ(t)) - v(t) through Ψ and integrates z^T M z.
IqcCheckResult empirical_iqc_check(const Factorization& f, const DelayTrajectory& delay,
                                   const IqcProbeOptions& options = {});

}  // namespace delayiqc
