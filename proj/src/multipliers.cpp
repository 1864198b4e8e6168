#include "delayiqc/multipliers.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "delayiqc/error.hpp"
#include "delayiqc/kernels.hpp"

namespace delayiqc {

namespace {

constexpr double kRateWeightMargin = 1.1;

StateSpace scalar_gain(double k) { return StateSpace::gain(Matrix::Constant(1, 1, k)); }

// |G|^2 realized as G~ G.
StateSpace magnitude_squared(const StateSpace& g) { return series(g, para_hermitian_conjugate(g)); }

Matrix row_selector(int n, int which) {
  Matrix e = Matrix::Zero(n, 2 * n);
  e.block(0, which * n, n, n) = Matrix::Identity(n, n);
  return e;
}

StateSpace kron_system(const StateSpace& g, const Matrix& x) {
  const auto n = x.rows();
  const Matrix id = Matrix::Identity(n, n);
  return StateSpace(kron(g.a(), id), kron(g.b(), id), kron(g.c(), x), kron(g.d(), x));
}

void require_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::kRateBoundTooLarge, "rate bound must satisfy 0 <= r < 1");
  }
}

void require_tau(double tau_bar) {
  if (!(tau_bar > 0.0) || std::isinf(tau_bar)) {
    throw Error(ErrorCode::kInvalidArgument, "maximum delay must be positive and finite");
  }
}

double rate_bound_level(double rate) { return 1.0 + 1.0 / std::sqrt(1.0 - rate); }

}  // namespace

std::string to_string(DelayValidity v) {
  return v == DelayValidity::kConstantDelay ? "constant-delay" : "varying-delay";
}

std::string to_string(HardnessClass h) {
  switch (h) {
    case HardnessClass::kNaturalHard: return "natural-hard";
    case HardnessClass::kJSpectralCandidate: return "j-spectral-candidate";
    case HardnessClass::kUnchecked: return "unchecked";
  }
  return "unchecked";
}

std::string to_string(CircleCase c) {
  switch (c) {
    case CircleCase::kDiskInterior: return "disk-interior";
    case CircleCase::kHalfPlane: return "half-plane";
    case CircleCase::kDiskExterior: return "disk-exterior";
  }
  return "disk-interior";
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix Multiplier::evaluate(double omega) const {
  const int n = channels();
  CMatrix out(2 * n, 2 * n);
  const CMatrix p21 = freq_response(pi21, omega);
  out.topLeftCorner(n, n) = freq_response(pi11, omega);
  out.topRightCorner(n, n) = p21.adjoint();
  out.bottomLeftCorner(n, n) = p21;
  out.bottomRightCorner(n, n) = freq_response(pi22, omega);
  return out;
}

StateSpace Multiplier::as_system() const {
  const StateSpace top = stack_inputs(pi11, para_hermitian_conjugate(pi21));
  const StateSpace bottom = stack_inputs(pi21, pi22);
  return minimal_realization(stack_outputs(top, bottom));
}

StateSpace phi2(double tau_bar) {
  require_tau(tau_bar);
  const std::array<double, 3> num{2.0, 7.0, 2e-6};
  const std::array<double, 3> den{1.0, 4.5, 7.1};
  return scale_frequency(from_transfer_function(num, den), tau_bar);
}

StateSpace phi3(double tau_bar) {
  require_tau(tau_bar);
  const std::array<double, 3> num{-2.19, 9.02, 0.089};
  const std::array<double, 3> den{1.0, -5.64, -17.0};
  return scale_frequency(from_transfer_function(num, den), tau_bar);
}

StateSpace rate_weight(double tau_bar, double rate, bool half) {
  require_tau(tau_bar);
  require_rate(rate);
  const double g = kRateWeightMargin;
  const double bound = rate_bound_level(rate);
  const double eps = std::sqrt(g * g - 1.0) / (g * bound);
  const double c = half ? 0.5 * tau_bar : tau_bar;
  const std::array<double, 2> num{g * c, 0.0};
  const std::array<double, 2> den{eps * c, 1.0};
  StateSpace phi = from_transfer_function(num, den);
  // |phi(jω)| > min(cω, bound), checked where it is tightest.
  for (const double x : {1e-3, 0.1, 0.5, 1.0, 0.999 * bound, bound, 1.001 * bound, 10.0 * bound,
                         1e3 * bound}) {
    const double mag = std::abs(freq_response(phi, x / c)(0, 0));
    if (!(mag > std::min(x, bound))) {
      throw Error(ErrorCode::kSolverFailure, "rate weight violates its magnitude bound");
    }
  }
  return phi;
}

StateSpace pade33(double tau) {
  require_tau(tau);
  const std::array<double, 4> num{-1.0 / 120.0, 1.0 / 10.0, -0.5, 1.0};
  const std::array<double, 4> den{1.0 / 120.0, 1.0 / 10.0, 0.5, 1.0};
  return scale_frequency(from_transfer_function(num, den), tau);
}

Multiplier make_pi1() {
  Multiplier m;
  m.name = "pi1";
  m.pi11 = scalar_gain(0.0);
  m.pi21 = scalar_gain(-1.0);
  m.pi22 = scalar_gain(-1.0);
  m.hardness = HardnessClass::kNaturalHard;
  Matrix pi(2, 2);
  pi << 0.0, -1.0, -1.0, -1.0;
  m.natural = NaturalFactor{StateSpace::identity(2), pi};
  return m;
}

Multiplier make_pi2_bar(double tau_bar) {
  const StateSpace phi = phi2(tau_bar);
  Multiplier m;
  m.name = "pi2bar";
  m.pi11 = magnitude_squared(phi);
  m.pi21 = scalar_gain(0.0);
  m.pi22 = scalar_gain(-1.0);
  m.tau_bar = tau_bar;
  m.hardness = HardnessClass::kJSpectralCandidate;
  m.natural = NaturalFactor{append(phi, scalar_gain(1.0)), Matrix(Vector{{1.0, -1.0}}.asDiagonal())};
  return m;
}

Multiplier make_pi3_bar(double tau_bar) {
  Multiplier m;
  m.name = "pi3bar";
  m.pi11 = scalar_gain(0.0);
  m.pi21 = phi3(tau_bar);
  m.pi22 = scalar_gain(-1.0);
  m.tau_bar = tau_bar;
  m.hardness = HardnessClass::kUnchecked;
  return m;
}

Multiplier make_pi4(double rate, const Matrix& x) {
  require_rate(rate);
  if (x.rows() != x.cols() || x.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "scaling must be square");
  }
  if (min_eigenvalue_sym(x) < -1e-12 * std::max(1.0, x.norm()) || (x - x.transpose()).norm() > 1e-12) {
    throw Error(ErrorCode::kNotPsd, "scaling must be symmetric positive semidefinite");
  }
  const auto n = x.rows();
  Multiplier m;
  m.name = "pi4";
  m.pi11 = StateSpace::gain(rate / (1.0 - rate) * x);
  m.pi21 = StateSpace::gain(-x);
  m.pi22 = StateSpace::gain(-x);
  m.validity = DelayValidity::kVaryingDelay;
  m.rate = rate;
  m.hardness = HardnessClass::kNaturalHard;
  Matrix pi(2 * n, 2 * n);
  pi << rate / (1.0 - rate) * x, -x, -x, -x;
  m.natural = NaturalFactor{StateSpace::identity(static_cast<int>(2 * n)), pi};
  return m;
}

Multiplier make_pi5(double tau_bar, double rate) {
  const StateSpace phi = rate_weight(tau_bar, rate, false);
  Multiplier m;
  m.name = "pi5";
  m.pi11 = magnitude_squared(phi);
  m.pi21 = scalar_gain(0.0);
  m.pi22 = scalar_gain(-1.0);
  m.validity = DelayValidity::kVaryingDelay;
  m.tau_bar = tau_bar;
  m.rate = rate;
  m.hardness = HardnessClass::kJSpectralCandidate;
  m.natural = NaturalFactor{append(phi, scalar_gain(1.0)), Matrix(Vector{{1.0, -1.0}}.asDiagonal())};
  return m;
}

double pi6_pade_inflation(double tau_bar, double rate) {
  const StateSpace base = rate_weight(tau_bar, rate, true);
  const StateSpace pade = pade33(tau_bar);
  const double w_max = 4.0 * std::numbers::pi / tau_bar;
  constexpr int kSamples = 4000;
  double worst = 0.0;
  for (int i = 1; i <= kSamples; ++i) {
    const double w = w_max * i / kSamples;
    const double err = std::abs(std::polar(1.0, -w * tau_bar) - freq_response(pade, w)(0, 0));
    worst = std::max(worst, err / std::abs(freq_response(base, w)(0, 0)));
  }
  // Tail past w_max: error at most 2.
  const double tail = 2.0 / std::abs(freq_response(base, w_max)(0, 0));
  // 1% slack on the sampled maximum.
  return 1.0 + 0.5 * std::max(1.01 * worst, tail);
}

Multiplier make_pi6(double tau_bar, double rate) {
  const double kappa = pi6_pade_inflation(tau_bar, rate);
  const StateSpace phi = kappa * rate_weight(tau_bar, rate, true);
  const StateSpace dev = parallel(pade33(tau_bar), scalar_gain(-1.0));
  Multiplier m;
  m.name = "pi6";
  m.pi11 = magnitude_squared(phi) - 0.25 * magnitude_squared(dev);
  m.pi21 = 0.5 * dev;
  m.pi22 = scalar_gain(-1.0);
  m.validity = DelayValidity::kVaryingDelay;
  m.tau_bar = tau_bar;
  m.rate = rate;
  m.hardness = HardnessClass::kJSpectralCandidate;
  const Matrix e1 = row_selector(1, 0);
  const Matrix e2 = row_selector(1, 1);
  const StateSpace psi = stack_outputs(phi * e1, parallel(-0.5 * dev * e1, StateSpace::gain(e2)));
  m.natural = NaturalFactor{psi, Matrix(Vector{{1.0, -1.0}}.asDiagonal())};
  return m;
}

NormalizedQC circle_geometry(const Multiplier& pi, double omega) {
  if (pi.channels() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "circle geometry needs scalar channels");
  }
  const CMatrix v = pi.evaluate(omega);
  const double p11 = v(0, 0).real();
  const Complex p21 = v(1, 0);
  const double p22 = v(1, 1).real();
  const double tol = 1e-12 * std::max(1.0, v.norm());
  NormalizedQC out;
  out.omega = omega;
  if (std::abs(p22) > tol) {
    const double scale = std::abs(p22);
    const double q11 = p11 / scale;
    const Complex q21 = p21 / scale;
    if (p22 < 0.0) {
      out.kind = CircleCase::kDiskInterior;
      out.center = q21;
      out.radius = std::sqrt(std::max(0.0, q11 + std::norm(q21)));
    } else {
      out.kind = CircleCase::kDiskExterior;
      out.center = -q21;
      out.radius = std::sqrt(std::max(0.0, std::norm(q21) - q11));
    }
    return out;
  }
  if (std::abs(p21) <= tol) {
    throw Error(ErrorCode::kDegenerateMultiplier, "pi22 and pi21 both vanish");
  }
  // p11 + 2 Re(conj(p21) S) >= 0
  out.kind = CircleCase::kHalfPlane;
  out.normal = p21 / std::abs(p21);
  out.center = -p11 / (2.0 * std::abs(p21)) * out.normal;
  return out;
}

Multiplier conic_combine(const std::vector<Multiplier>& parts, const std::vector<double>& lambda) {
  if (parts.empty() || parts.size() != lambda.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one coefficient per multiplier");
  }
  for (double l : lambda) {
    if (!(l >= 0.0)) throw Error(ErrorCode::kNegativeCoefficient, "coefficients must be >= 0");
  }
  const int n = parts.front().channels();
  Multiplier out;
  out.name = "combination";
  out.validity = DelayValidity::kVaryingDelay;
  out.hardness = HardnessClass::kNaturalHard;
  out.pi11 = StateSpace::zero(n, n);
  out.pi21 = StateSpace::zero(n, n);
  out.pi22 = StateSpace::zero(n, n);
  bool all_natural = true;
  std::vector<std::pair<const NaturalFactor*, double>> factors;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Multiplier& p = parts[k];
    if (p.channels() != n) throw Error(ErrorCode::kDimensionMismatch, "channel widths differ");
    if (p.validity == DelayValidity::kConstantDelay) out.validity = DelayValidity::kConstantDelay;
    out.covering = out.covering && p.covering;
    out.tau_bar = std::min(out.tau_bar, p.tau_bar);
    out.rate = std::max(out.rate, p.rate);
    if (p.hardness != HardnessClass::kNaturalHard) out.hardness = HardnessClass::kUnchecked;
    if (lambda[k] == 0.0) continue;
    out.pi11 = out.pi11 + lambda[k] * p.pi11;
    out.pi21 = out.pi21 + lambda[k] * p.pi21;
    out.pi22 = out.pi22 + lambda[k] * p.pi22;
    if (p.natural) {
      factors.emplace_back(&*p.natural, lambda[k]);
    } else {
      all_natural = false;
    }
  }
  if (parts.size() == 1) out.name = parts.front().name;
  if (all_natural && !factors.empty()) {
    StateSpace psi = factors.front().first->psi;
    Matrix m = factors.front().second * factors.front().first->m;
    for (std::size_t k = 1; k < factors.size(); ++k) {
      psi = stack_outputs(psi, factors[k].first->psi);
      const Matrix mk = factors[k].second * factors[k].first->m;
      Matrix blk = Matrix::Zero(m.rows() + mk.rows(), m.cols() + mk.cols());
      blk.topLeftCorner(m.rows(), m.cols()) = m;
      blk.bottomRightCorner(mk.rows(), mk.cols()) = mk;
      m = std::move(blk);
    }
    out.natural = NaturalFactor{psi, m};
  }
  return out;
}

Multiplier scale_repeated(const Multiplier& pi, int n, const Matrix& x) {
  if (pi.channels() != 1) throw Error(ErrorCode::kDimensionMismatch, "base multiplier must be 2x2");
  if (n < 1 || x.rows() != n || x.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "scaling must be n x n");
  }
  if ((x - x.transpose()).norm() > 1e-12 * std::max(1.0, x.norm()) ||
      min_eigenvalue_sym(x) < -1e-12 * std::max(1.0, x.norm())) {
    throw Error(ErrorCode::kNotPsd, "scaling must be symmetric positive semidefinite");
  }
  Multiplier out = pi;
  out.pi11 = kron_system(pi.pi11, x);
  out.pi21 = kron_system(pi.pi21, x);
  out.pi22 = kron_system(pi.pi22, x);
  if (pi.natural) {
    const Matrix id = Matrix::Identity(n, n);
    const StateSpace& psi = pi.natural->psi;
    out.natural = NaturalFactor{
        StateSpace(kron(psi.a(), id), kron(psi.b(), id), kron(psi.c(), id), kron(psi.d(), id)),
        kron(pi.natural->m, x)};
  }
  return out;
}

CoveringReport check_covering(const Multiplier& pi, const std::vector<double>& tau_grid,
                              const FrequencyGrid& omega_grid) {
  if (pi.channels() != 1) throw Error(ErrorCode::kDimensionMismatch, "covering needs scalar channels");
  constexpr int kCircleSamples = 256;
  CoveringReport report;
  report.min_margin = std::numeric_limits<double>::infinity();
  std::vector<double> p11, p21r, p21i, p22, sr, si;
  for (double w : omega_grid) {
    const CMatrix v = pi.evaluate(w);
    std::vector<Complex> samples;
    std::vector<double> taus;
    if (std::isinf(w)) {
      for (int k = 0; k < kCircleSamples; ++k) {
        const double th = 2.0 * std::numbers::pi * k / kCircleSamples;
        samples.push_back(std::polar(1.0, -th) - 1.0);
        taus.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    } else {
      for (double t : tau_grid) {
        samples.push_back(delay_deviation_response(t, w));
        taus.push_back(t);
      }
    }
    const std::size_t count = samples.size();
    p11.assign(count, v(0, 0).real());
    p21r.assign(count, v(1, 0).real());
    p21i.assign(count, v(1, 0).imag());
    p22.assign(count, v(1, 1).real());
    sr.resize(count);
    si.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      sr[k] = samples[k].real();
      si[k] = samples[k].imag();
    }
    const double row_min = kernels::qc_margin_min({p11, p21r, p21i, p22, sr, si});
    report.points += count;
    if (row_min < report.min_margin) {
      report.min_margin = row_min;
      report.worst_omega = w;
      for (std::size_t k = 0; k < count; ++k) {
        const double val =
            p11[k] + 2.0 * (p21r[k] * sr[k] + p21i[k] * si[k]) + p22[k] * (sr[k] * sr[k] + si[k] * si[k]);
        if (val <= row_min) {
          report.worst_tau = taus[k];
          break;
        }
      }
    }
  }
  return report;
}

FrequencyGrid covering_frequency_grid(double tau_bar, int count) {
  require_tau(tau_bar);
  return FrequencyGrid::log_spaced(1e-3 / tau_bar, 1e3 / tau_bar, count, false, true);
}

std::vector<double> covering_delay_grid(double tau_bar, int count) {
  require_tau(tau_bar);
  if (count < 2) throw Error(ErrorCode::kInvalidArgument, "delay grid needs >= 2 points");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = tau_bar * i / (count - 1);
  return out;
}

std::string circle_csv(const Multiplier& pi, const FrequencyGrid& grid) {
  std::ostringstream os;
  os << "omega,case,center_re,center_im,radius\n";
  char buf[256];
  for (double w : grid) {
    const NormalizedQC q = circle_geometry(pi, w);
    char wbuf[32];
    if (std::isinf(w)) {
      std::snprintf(wbuf, sizeof wbuf, "inf");
    } else {
      std::snprintf(wbuf, sizeof wbuf, "%.10g", w);
    }
    std::snprintf(buf, sizeof buf, "%s,%s,%.10g,%.10g,%.10g\n", wbuf, to_string(q.kind).c_str(),
                  q.center.real(), q.center.imag(), q.radius);
    os << buf;
  }
  return os.str();
}

}  // namespace delayiqc
