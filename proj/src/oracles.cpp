#include "delayiqc/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "delayiqc/error.hpp"

namespace delayiqc {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_2pi(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  return r;
}

Complex siso(const StateSpace& l, double omega) {
  const CMatrix g = freq_response(l, omega);
  return g(0, 0);
}

double sigma_max(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<CMatrix>(m).singularValues()(0);
}

// Closed-loop response with w = (e^{-jωτ} - 1) v; +inf when ill-posed.
double delayed_gain_at(const StateSpace& g, int nv, double tau, double omega) {
  const CMatrix h = freq_response(g, omega);
  const int nd = g.inputs() - nv;
  const int ne = g.outputs() - nv;
  const Complex delta = std::exp(Complex(0.0, -omega * tau)) - 1.0;
  const CMatrix gvw = h.topLeftCorner(nv, nv);
  const CMatrix gvd = h.topRightCorner(nv, nd);
  const CMatrix gew = h.bottomLeftCorner(ne, nv);
  const CMatrix ged = h.bottomRightCorner(ne, nd);
  const CMatrix loop = CMatrix::Identity(nv, nv) - delta * gvw;
  Eigen::PartialPivLU<CMatrix> lu(loop);
  if (std::abs(lu.determinant()) < 1e-14) return std::numeric_limits<double>::infinity();
  const CMatrix t = ged + gew * (delta * lu.solve(gvd));
  return sigma_max(t);
}

template <class F>
double golden_max(const F& f, double lo, double hi, double* arg, int iterations = 80) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(lo), b = std::log(hi);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(std::exp(c)), fd = f(std::exp(d));
  for (int i = 0; i < iterations; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(std::exp(d));
    }
  }
  *arg = std::exp(fc > fd ? c : d);
  return std::max(fc, fd);
}

Vector poly_eval(const std::vector<Polynomial>& ps, const Vector& point) {
  Vector out(static_cast<Eigen::Index>(ps.size()));
  for (std::size_t i = 0; i < ps.size(); ++i) out(static_cast<Eigen::Index>(i)) = ps[i].evaluate(point);
  return out;
}

Matrix linear_part(const PolynomialSystem& sys) {
  Matrix a = Matrix::Zero(sys.nx, sys.nx);
  for (int i = 0; i < sys.nx; ++i) {
    for (const auto& [m, c] : sys.f[i].terms()) {
      if (degree(m) != 1) continue;
      for (int j = 0; j < sys.nx; ++j) {
        if (m[j] == 1) a(i, j) += c;
      }
    }
  }
  return a;
}

double hann(double s) { return s <= 0.0 || s >= 1.0 ? 0.0 : 0.5 - 0.5 * std::cos(2.0 * kPi * s); }

}  // namespace

FrMargin fr_delay_margin(const StateSpace& loop, double omega_lo, double omega_hi, int scan) {
  if (loop.inputs() != 1 || loop.outputs() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "frequency-response margin needs a SISO loop");
  }
  std::vector<double> w(scan), mag(scan), phase(scan);
  for (int k = 0; k < scan; ++k) {
    w[k] = omega_lo * std::pow(omega_hi / omega_lo, static_cast<double>(k) / (scan - 1));
    const Complex l = siso(loop, w[k]);
    mag[k] = std::log(std::abs(l));
    phase[k] = std::arg(l);
    if (k > 0) {
      while (phase[k] - phase[k - 1] > kPi) phase[k] -= 2.0 * kPi;
      while (phase[k] - phase[k - 1] < -kPi) phase[k] += 2.0 * kPi;
    }
  }
  FrMargin best;
  best.tau = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int k = 0; k + 1 < scan; ++k) {
    if ((mag[k] > 0.0) == (mag[k + 1] > 0.0) && mag[k] != 0.0) continue;
    double a = std::log(w[k]), b = std::log(w[k + 1]);
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (a + b);
      const bool above = std::log(std::abs(siso(loop, std::exp(mid)))) > 0.0;
      if (above == (mag[k] > 0.0)) {
        a = mid;
      } else {
        b = mid;
      }
    }
    const double wc = std::exp(0.5 * (a + b));
    double ph = std::arg(siso(loop, wc));
    while (ph - phase[k] > kPi) ph -= 2.0 * kPi;
    while (ph - phase[k] < -kPi) ph += 2.0 * kPi;
    const double pm = wrap_2pi(ph + kPi);
    const double tau = pm / wc;
    found = true;
    if (tau < best.tau) best = FrMargin{tau, wc, pm};
  }
  if (!found) throw Error(ErrorCode::kNoCrossover, "|L(jw)| does not cross 1 on the scan");
  return best;
}

double hinf_norm_grid(const StateSpace& sys, const FrequencyGrid& grid) {
  double best = 0.0;
  for (double w : grid) best = std::max(best, sigma_max(freq_response(sys, w)));
  return best;
}

DelayedGain delayed_fr_gain(const StateSpace& g, int nv, double tau, const FrequencyGrid& grid) {
  std::vector<double> pts;
  for (double w : grid) {
    if (std::isfinite(w) && w > 0.0) pts.push_back(w);
  }
  if (pts.empty()) throw Error(ErrorCode::kInvalidArgument, "grid has no finite positive frequency");
  DelayedGain out;
  std::size_t arg = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double v = delayed_gain_at(g, nv, tau, pts[k]);
    if (v > out.gain) {
      out.gain = v;
      out.omega = pts[k];
      arg = k;
    }
  }
  if (!std::isfinite(out.gain)) return out;
  const double lo = pts[arg > 0 ? arg - 1 : arg];
  const double hi = pts[arg + 1 < pts.size() ? arg + 1 : arg];
  if (hi > lo) {
    double w = 0.0;
    const double v = golden_max([&](double x) { return delayed_gain_at(g, nv, tau, x); }, lo, hi, &w);
    if (v > out.gain) {
      out.gain = v;
      out.omega = w;
    }
  }
  return out;
}

DelayTrajectory DelayTrajectory::constant(double tau) {
  if (!(tau >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "delay must be nonnegative");
  DelayTrajectory d;
  d.kind_ = Kind::kConstant;
  d.tau_bar_ = tau;
  d.tau_max_ = d.tau_min_ = tau;
  return d;
}

DelayTrajectory DelayTrajectory::sinusoidal(double tau_bar, double rate) {
  if (!(tau_bar > 0.0) || !(rate >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sinusoidal delay needs tau_bar > 0 and rate >= 0");
  }
  DelayTrajectory d;
  d.kind_ = Kind::kSinusoidal;
  d.tau_bar_ = tau_bar;
  d.rate_ = rate;
  d.tau_max_ = rate > 0.0 ? tau_bar : 0.5 * tau_bar;
  d.tau_min_ = rate > 0.0 ? 0.0 : 0.5 * tau_bar;
  d.rate_max_ = rate;
  return d;
}

DelayTrajectory DelayTrajectory::piecewise(std::vector<double> times, std::vector<double> taus) {
  if (times.empty() || times.size() != taus.size()) {
    throw Error(ErrorCode::kInvalidArgument, "piecewise delay needs matching nonempty knots");
  }
  DelayTrajectory d;
  d.kind_ = Kind::kPiecewise;
  d.tau_max_ = *std::max_element(taus.begin(), taus.end());
  d.tau_min_ = *std::min_element(taus.begin(), taus.end());
  if (d.tau_min_ < 0.0) throw Error(ErrorCode::kInvalidArgument, "delay must be nonnegative");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw Error(ErrorCode::kInvalidArgument, "knot times must increase");
    d.rate_max_ = std::max(d.rate_max_, std::abs(taus[k] - taus[k - 1]) / (times[k] - times[k - 1]));
  }
  d.times_ = std::move(times);
  d.taus_ = std::move(taus);
  return d;
}

double DelayTrajectory::operator()(double t) const {
  switch (kind_) {
    case Kind::kConstant: return tau_bar_;
    case Kind::kSinusoidal:
      if (rate_ == 0.0) return 0.5 * tau_bar_;
      return 0.5 * tau_bar_ * (1.0 + std::sin(2.0 * rate_ * t / tau_bar_));
    case Kind::kPiecewise: {
      if (t <= times_.front()) return taus_.front();
      if (t >= times_.back()) return taus_.back();
      const auto it = std::upper_bound(times_.begin(), times_.end(), t);
      const std::size_t k = static_cast<std::size_t>(it - times_.begin());
      const double s = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
      return taus_[k - 1] + s * (taus_[k] - taus_[k - 1]);
    }
  }
  return 0.0;
}

void DelayTrajectory::validate(double horizon) const {
  const int n = 10000;
  double prev = (*this)(0.0);
  for (int k = 0; k <= n; ++k) {
    const double t = horizon * k / n;
    const double tau = (*this)(t);
    if (tau < -1e-15 || tau > tau_max_ * (1.0 + 1e-12) + 1e-15) {
      throw Error(ErrorCode::kInvalidArgument, "delay leaves [0, tau_max]");
    }
    if (k > 0 && std::abs(tau - prev) > rate_max_ * (horizon / n) * (1.0 + 1e-9) + 1e-14) {
      throw Error(ErrorCode::kInvalidArgument, "delay exceeds its rate bound");
    }
    prev = tau;
  }
}

DelayLine::DelayLine(int width, double dt, double max_delay)
    : width_(width), dt_(dt), ring_(static_cast<std::size_t>(std::ceil(max_delay / dt)) + 4, Vector::Zero(width)) {}

void DelayLine::push(const Vector& v) {
  ring_[static_cast<std::size_t>(count_ % static_cast<long>(ring_.size()))] = v;
  ++count_;
}

Vector DelayLine::sample(long k) const {
  if (k < 0) return Vector::Zero(width_);
  if (k >= count_ || k < count_ - static_cast<long>(ring_.size())) {
    throw Error(ErrorCode::kInvalidArgument, "delay line queried outside its history");
  }
  return ring_[static_cast<std::size_t>(k % static_cast<long>(ring_.size()))];
}

Vector DelayLine::at(double t) const {
  if (t < 0.0 || count_ == 0) return Vector::Zero(width_);
  double s = t / dt_;
  const double r = std::round(s);
  if (std::abs(s - r) < 1e-9) s = r;
  long k = static_cast<long>(std::floor(s));
  if (k >= count_ - 1) {
    if (count_ == 1) return sample(0);
    k = count_ - 2;
  }
  const double frac = s - static_cast<double>(k);
  return (1.0 - frac) * sample(k) + frac * sample(k + 1);
}

double SimResult::energy(const Matrix& signal, double dt) {
  if (signal.rows() == 0) return 0.0;
  const Vector sq = signal.rowwise().squaredNorm();
  return dt * (sq.sum() - 0.5 * (sq(0) + sq(sq.size() - 1)));
}

DelayedModel delayed_model(const StateSpace& g, int nv) {
  const int nx = g.states();
  const int nd = g.inputs() - nv;
  const int ne = g.outputs() - nv;
  if (nv <= 0 || nd < 0 || ne < 0) throw Error(ErrorCode::kDimensionMismatch, "bad delay-channel width");
  const Matrix a = g.a();
  const Matrix bw = g.b().leftCols(nv), bd = g.b().rightCols(nd);
  const Matrix cv = g.c().topRows(nv), ce = g.c().bottomRows(ne);
  const Matrix dvw = g.d().topLeftCorner(nv, nv), dvd = g.d().topRightCorner(nv, nd);
  const Matrix dew = g.d().bottomLeftCorner(ne, nv), ded = g.d().bottomRightCorner(ne, nd);
  const Eigen::PartialPivLU<Matrix> loop(Matrix::Identity(nv, nv) + dvw);
  if (std::abs(loop.determinant()) < 1e-12) throw Error(ErrorCode::kIllPosedLoop, "I + D_vw is singular");
  DelayedModel m;
  m.nx = nx;
  m.nv = nv;
  m.nd = nd;
  m.ne = ne;
  m.v = [=](const Vector& x, const Vector& vdel, const Vector& d) -> Vector {
    Vector rhs = dvw * vdel + dvd * d;
    if (nx > 0) rhs += cv * x;
    return loop.solve(rhs);
  };
  m.v0 = [=](const Vector& x, const Vector& d) -> Vector {
    Vector out = dvd * d;
    if (nx > 0) out += cv * x;
    return out;
  };
  m.f = [=](const Vector& x, const Vector& w, const Vector& d) -> Vector {
    if (nx == 0) return Vector(0);
    return a * x + bw * w + bd * d;
  };
  m.e = [=](const Vector& x, const Vector& w, const Vector& d) -> Vector {
    Vector out = dew * w + ded * d;
    if (nx > 0) out += ce * x;
    return out;
  };
  return m;
}

DelayedModel delayed_model(const PolynomialSystem& sys) {
  sys.validate();
  for (const Polynomial& p : sys.h1) {
    for (const auto& [mono, c] : p.terms()) {
      for (int j = 0; j < sys.nw; ++j) {
        if (mono[sys.nx + j] != 0) throw Error(ErrorCode::kInvalidArgument, "v must not depend on w");
      }
    }
  }
  const int nx = sys.nx, nw = sys.nw, nd = sys.nd;
  auto point = [=](const Vector& x, const Vector& w, const Vector& d) {
    Vector p(nx + nw + nd);
    p << x, w, d;
    return p;
  };
  DelayedModel m;
  m.nx = nx;
  m.nv = nw;
  m.nd = nd;
  m.ne = static_cast<int>(sys.h2.size());
  m.v = [=](const Vector& x, const Vector&, const Vector& d) { return poly_eval(sys.h1, point(x, Vector::Zero(nw), d)); };
  m.v0 = [=](const Vector& x, const Vector& d) { return poly_eval(sys.h1, point(x, Vector::Zero(nw), d)); };
  m.f = [=](const Vector& x, const Vector& w, const Vector& d) { return poly_eval(sys.f, point(x, w, d)); };
  m.e = [=](const Vector& x, const Vector& w, const Vector& d) { return poly_eval(sys.h2, point(x, w, d)); };
  return m;
}

SimResult simulate_delayed(const DelayedModel& model, const DelayTrajectory& delay, const InputFn& d,
                           double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dt and horizon must be positive");
  if (delay.tau_min() > 0.0 && dt > delay.tau_min() / 10.0) {
    throw Error(ErrorCode::kStepTooLarge, "dt must not exceed a tenth of the smallest delay");
  }
  const long steps = std::lround(horizon / dt);
  DelayLine line(model.nv, dt, delay.tau_max());
  SimResult r;
  r.dt = dt;
  r.t.resize(static_cast<std::size_t>(steps + 1));
  r.v.resize(steps + 1, model.nv);
  r.w.resize(steps + 1, model.nv);
  r.e.resize(steps + 1, model.ne);
  r.d.resize(steps + 1, model.nd);

  // v and w at time t for state x; zero delay closes w = 0.
  auto loop = [&](double t, const Vector& x, const Vector& dv, Vector& v, Vector& w) {
    const double tau = delay(t);
    if (tau <= 0.0) {
      v = model.v0(x, dv);
      w = Vector::Zero(model.nv);
      return;
    }
    const Vector vdel = line.at(t - tau);
    v = model.v(x, vdel, dv);
    w = vdel - v;
  };
  auto rhs = [&](double t, const Vector& x) {
    const Vector dv = d(t);
    Vector v, w;
    loop(t, x, dv, v, w);
    return model.f(x, w, dv);
  };

  Vector x = Vector::Zero(model.nx);
  for (long n = 0; n <= steps; ++n) {
    const double t = n * dt;
    const Vector dv = d(t);
    Vector v, w;
    loop(t, x, dv, v, w);
    line.push(v);
    const auto row = static_cast<Eigen::Index>(n);
    r.t[static_cast<std::size_t>(n)] = t;
    r.v.row(row) = v.transpose();
    r.w.row(row) = w.transpose();
    r.d.row(row) = dv.transpose();
    r.e.row(row) = model.e(x, w, dv).transpose();
    if (n == steps) break;
    if (model.nx > 0) {
      const Vector k1 = rhs(t, x);
      const Vector k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1);
      const Vector k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2);
      const Vector k4 = rhs(t + dt, x + dt * k3);
      x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x.allFinite() || x.norm() > 1e12) {
      r.t.resize(static_cast<std::size_t>(n + 1));
      r.v.conservativeResize(row + 1, Eigen::NoChange);
      r.w.conservativeResize(row + 1, Eigen::NoChange);
      r.e.conservativeResize(row + 1, Eigen::NoChange);
      r.d.conservativeResize(row + 1, Eigen::NoChange);
      r.e.row(row).setConstant(std::numeric_limits<double>::infinity());
      break;
    }
  }
  return r;
}

GainEstimate empirical_l2_gain(const DelayedModel& model, const Matrix& linear_a, const DelayTrajectory& delay,
                               const ProbeOptions& options) {
  double slow = 1.0, fast = 1.0;
  if (linear_a.rows() > 0) {
    const CVector ev = eigenvalues(linear_a);
    slow = std::numeric_limits<double>::infinity();
    fast = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      const double m = std::max(std::abs(ev(i)), 1e-3);
      slow = std::min(slow, m);
      fast = std::max(fast, m);
    }
  }
  const double tau_max = delay.tau_max();
  const double horizon = options.horizon > 0.0 ? options.horizon : 40.0 / slow;
  const double w_lo = options.omega_lo > 0.0 ? options.omega_lo
                                             : 0.1 * std::min(slow, tau_max > 0.0 ? 1.0 / tau_max : slow);
  const double w_hi = options.omega_hi > 0.0 ? options.omega_hi
                                             : 10.0 * std::max(fast, tau_max > 0.0 ? 1.0 / tau_max : fast);
  double dt_base = options.dt > 0.0 ? options.dt : 0.25 / fast;
  if (options.dt <= 0.0) {
    if (delay.tau_min() > 0.0) dt_base = std::min(dt_base, delay.tau_min() / 10.0);
    if (tau_max > 0.0) dt_base = std::min(dt_base, tau_max / 20.0);
  }

  GainEstimate best;
  auto run = [&](const InputFn& d, double length, double dt, const std::string& name, double omega) {
    const SimResult r = simulate_delayed(model, delay, d, dt, length);
    const double ed = SimResult::energy(r.d, dt);
    const double ee = SimResult::energy(r.e, dt);
    if (ed <= 0.0) return 0.0;
    const double ratio = std::isfinite(ee) ? std::sqrt(ee / ed) : std::numeric_limits<double>::infinity();
    if (ratio > best.gamma_lb) best = GainEstimate{ratio, name, omega};
    return ratio;
  };

  auto sine = [&](double omega, int channel) {
    const double period = 2.0 * kPi / omega;
    const double window = std::max(horizon, std::min(40.0 * period, 20.0 * horizon));
    const double dt = options.dt > 0.0 ? options.dt : std::min(dt_base, period / 40.0);
    const double amp = options.amplitude;
    const int nd = model.nd;
    return run([=](double t) {
                 Vector d = Vector::Zero(nd);
                 if (nd > 0) d(channel) = amp * std::sin(omega * t) * hann(t / window);
                 return d;
               },
               window + horizon, dt, "sine", omega);
  };
  std::vector<double> omegas(static_cast<std::size_t>(std::max(options.sines, 0)));
  std::size_t peak = 0;
  double peak_ratio = -1.0;
  for (int k = 0; k < options.sines; ++k) {
    omegas[k] = options.sines == 1 ? w_lo : w_lo * std::pow(w_hi / w_lo, static_cast<double>(k) / (options.sines - 1));
    const double r = sine(omegas[k], model.nd > 0 ? k % model.nd : 0);
    if (r > peak_ratio) {
      peak_ratio = r;
      peak = static_cast<std::size_t>(k);
    }
  }
  if (options.sines > 2 && std::isfinite(peak_ratio)) {
    const int channel = model.nd > 0 ? static_cast<int>(peak) % model.nd : 0;
    double w = 0.0;
    golden_max([&](double om) { return sine(om, channel); }, omegas[peak > 0 ? peak - 1 : 0],
               omegas[std::min(peak + 1, omegas.size() - 1)], &w, 12);
  }

  std::mt19937_64 gen(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < options.multisines; ++k) {
    const int comps = 8;
    std::vector<double> om(comps), ph(comps);
    std::vector<Vector> dir(comps);
    for (int c = 0; c < comps; ++c) {
      om[c] = w_lo * std::pow(w_hi / w_lo, unit(gen));
      ph[c] = 2.0 * kPi * unit(gen);
      Vector u = Vector::Zero(model.nd);
      for (int i = 0; i < model.nd; ++i) u(i) = unit(gen) - 0.5;
      if (u.norm() > 0.0) u /= u.norm();
      dir[c] = u;
    }
    const double window = 4.0 * horizon;
    const double dt = options.dt > 0.0 ? options.dt : std::min(dt_base, 2.0 * kPi / w_hi / 40.0);
    const double amp = options.amplitude / std::sqrt(static_cast<double>(comps));
    const int nd = model.nd;
    run([=](double t) {
          Vector d = Vector::Zero(nd);
          const double h = hann(t / window);
          if (h == 0.0) return d;
          for (int c = 0; c < comps; ++c) d += amp * h * std::sin(om[c] * t + ph[c]) * dir[c];
          return d;
        },
        window + horizon, dt, "multisine", 0.0);
  }
  return best;
}

GainEstimate empirical_l2_gain(const StateSpace& g, int nv, const DelayTrajectory& delay,
                               const ProbeOptions& options) {
  return empirical_l2_gain(delayed_model(g, nv), g.a(), delay, options);
}

GainEstimate empirical_l2_gain(const PolynomialSystem& sys, const DelayTrajectory& delay,
                               const ProbeOptions& options) {
  return empirical_l2_gain(delayed_model(sys), linear_part(sys), delay, options);
}

IqcCheckResult empirical_iqc_check(const Factorization& f, const DelayTrajectory& delay,
                                   const IqcProbeOptions& options) {
  const StateSpace& psi = f.psi;
  if (psi.inputs() % 2 != 0) throw Error(ErrorCode::kDimensionMismatch, "filter must take (v, w)");
  const int nv = psi.inputs() / 2;
  const double horizon = *std::max_element(options.horizons.begin(), options.horizons.end());
  const double dt = options.dt;
  const long steps = std::lround(horizon / dt);
  std::mt19937_64 gen(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  IqcCheckResult out;
  out.min_normalized = std::numeric_limits<double>::infinity();
  for (int p = 0; p < options.probes; ++p) {
    const int comps = 1 + p % 5;
    std::vector<double> om(comps), ph(comps);
    std::vector<Vector> dir(comps);
    for (int c = 0; c < comps; ++c) {
      om[c] = options.omega_lo * std::pow(options.omega_hi / options.omega_lo, unit(gen));
      ph[c] = 2.0 * kPi * unit(gen);
      Vector u(nv);
      for (int i = 0; i < nv; ++i) u(i) = unit(gen) - 0.5;
      dir[c] = u / std::max(u.norm(), 1e-12);
    }
    const bool windowed = p % 2 == 1;
    const double window = horizon * (0.3 + 0.7 * unit(gen));
    auto v = [&](double t) {
      Vector out_v = Vector::Zero(nv);
      if (t < 0.0) return out_v;
      const double h = windowed ? hann(t / window) : 1.0;
      for (int c = 0; c < comps; ++c) out_v += h * std::sin(om[c] * t + ph[c]) * dir[c];
      return out_v;
    };
    auto input = [&](double t) {
      const Vector vt = v(t);
      const Vector vd = v(t - delay(t));
      Vector u(2 * nv);
      u << vt, vd - vt;
      return u;
    };
    auto rhs = [&](double t, const Vector& x) -> Vector { return psi.a() * x + psi.b() * input(t); };

    Vector x = Vector::Zero(psi.states());
    double zmz = 0.0, vv = 0.0, prev_zmz = 0.0, prev_vv = 0.0;
    std::size_t next = 0;
    std::vector<double> marks = options.horizons;
    std::sort(marks.begin(), marks.end());
    for (long n = 0; n <= steps; ++n) {
      const double t = n * dt;
      const Vector u = input(t);
      Vector z = psi.d() * u;
      if (psi.states() > 0) z += psi.c() * x;
      const double qz = z.dot(f.m * z);
      const double qv = u.head(nv).squaredNorm();
      if (n > 0) {
        zmz += 0.5 * dt * (prev_zmz + qz);
        vv += 0.5 * dt * (prev_vv + qv);
      }
      prev_zmz = qz;
      prev_vv = qv;
      while (next < marks.size() && t >= marks[next] - 0.5 * dt) {
        const double val = vv > 0.0 ? zmz / vv : 0.0;
        if (val < out.min_normalized) {
          out.min_normalized = val;
          out.worst_probe = p;
          out.worst_horizon = marks[next];
        }
        ++next;
      }
      if (n == steps || psi.states() == 0) continue;
      const Vector k1 = rhs(t, x);
      const Vector k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1);
      const Vector k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2);
      const Vector k4 = rhs(t + dt, x + dt * k3);
      x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return out;
}

}  // namespace delayiqc
