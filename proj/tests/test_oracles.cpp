#include <cmath>
#include <numbers>

#include "doctest.h"
#include "delayiqc/builtins.hpp"
#include "delayiqc/error.hpp"
#include "delayiqc/oracles.hpp"

using namespace delayiqc;

namespace {

// Frozen from tests/oracle/derive.py.
constexpr double kFrMargin = 2.04515044676921;
constexpr double kFrOmega = 0.36097282026404065;

Matrix m(int r, int c, std::initializer_list<double> v) {
  Matrix out(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out(i, j) = *it++;
  return out;
}

// v = d, e = v + w: e(t) = d(t - τ).
StateSpace pure_delay() {
  return StateSpace(m(1, 1, {-1.0}), m(1, 2, {0.0, 0.0}), m(2, 1, {0.0, 0.0}), m(2, 2, {0.0, 1.0, 1.0, 1.0}));
}

// Plain RK4 on x' = Ax + Bd, e = Cx + Dd.
std::vector<double> undelayed(const StateSpace& g, const InputFn& d, double dt, double horizon) {
  Vector x = Vector::Zero(g.states());
  std::vector<double> out;
  const long n = std::lround(horizon / dt);
  for (long k = 0; k <= n; ++k) {
    const double t = k * dt;
    out.push_back((g.c() * x + g.d() * d(t))(0));
    auto f = [&](double s, const Vector& y) -> Vector { return g.a() * y + g.b() * d(s); };
    const Vector k1 = f(t, x), k2 = f(t + dt / 2, x + dt / 2 * k1), k3 = f(t + dt / 2, x + dt / 2 * k2),
                 k4 = f(t + dt, x + dt * k3);
    x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return out;
}

Vector scalar(double v) { return Vector::Constant(1, v); }

}  // namespace

TEST_SUITE("oracles") {

TEST_CASE("frequency-response delay margin") {
  const FrMargin fr = fr_delay_margin(classical_loop_open());
  CHECK(fr.tau == doctest::Approx(kFrMargin).epsilon(1e-7));
  CHECK(fr.omega == doctest::Approx(kFrOmega).epsilon(1e-7));
  CHECK(fr.phase_margin == doctest::Approx(kFrMargin * kFrOmega).epsilon(1e-7));

  // k/s crosses at ω = k with 90 degrees of phase margin.
  const StateSpace integrator(m(1, 1, {0.0}), m(1, 1, {1.0}), m(1, 1, {2.0}), m(1, 1, {0.0}));
  const FrMargin i = fr_delay_margin(integrator);
  CHECK(i.omega == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(i.tau == doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-9));

  const StateSpace small(m(1, 1, {-1.0}), m(1, 1, {1.0}), m(1, 1, {0.5}), m(1, 1, {0.0}));
  CHECK_THROWS_AS(fr_delay_margin(small), Error);
}

TEST_CASE("delayed closed-loop gain") {
  const StateSpace g = classical_loop_lin().vertices.front();
  const FrequencyGrid grid = FrequencyGrid::log_spaced(1e-3, 1e3, 2000, false, false);
  const std::pair<double, double> frozen[] = {
      {0.25, 4.348917003068409}, {0.5, 5.069981943105217}, {1.0, 7.543108899783406}, {1.5, 14.549737931970668}};
  for (const auto& [tau, gain] : frozen) {
    CHECK(delayed_fr_gain(g, 1, tau, grid).gain == doctest::Approx(gain).epsilon(1e-6));
  }
  CHECK(hinf_norm_grid(select_outputs(select_inputs(g, 1, 1), 1, 1), grid) > 0.0);
}

TEST_CASE("delay trajectories") {
  const DelayTrajectory s = DelayTrajectory::sinusoidal(1.0, 0.4);
  CHECK(s.tau_max() == doctest::Approx(1.0));
  CHECK(s.tau_min() == 0.0);
  CHECK(s.rate_max() == doctest::Approx(0.4));
  double worst_rate = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double t = k * 1e-3;
    CHECK(s(t) >= -1e-15);
    CHECK(s(t) <= 1.0 + 1e-15);
    worst_rate = std::max(worst_rate, std::abs(s(t + 1e-3) - s(t)) / 1e-3);
  }
  CHECK(worst_rate <= 0.4 + 1e-6);
  const DelayTrajectory p = DelayTrajectory::piecewise({0.0, 1.0, 3.0}, {0.2, 0.6, 0.6});
  CHECK(p(0.5) == doctest::Approx(0.4));
  CHECK(p(10.0) == doctest::Approx(0.6));
  CHECK(p.rate_max() == doctest::Approx(0.4));
  CHECK_THROWS_AS(DelayTrajectory::constant(-1.0).validate(1.0), Error);
}

TEST_CASE("delay line interpolates exactly on linear signals") {
  const double dt = 0.01;
  DelayLine line(1, dt, 0.5);
  for (int k = 0; k < 300; ++k) line.push(scalar(1.0 + 3.0 * k * dt));
  CHECK(line.at(2.5)(0) == doctest::Approx(1.0 + 7.5).epsilon(1e-12));
  CHECK(line.at(2.5 + 0.3 * dt)(0) == doctest::Approx(1.0 + 3.0 * (2.5 + 0.3 * dt)).epsilon(1e-12));
  CHECK(line.at(line.last_time() + 0.5 * dt)(0) ==
        doctest::Approx(1.0 + 3.0 * (line.last_time() + 0.5 * dt)).epsilon(1e-12));
  DelayLine fresh(1, dt, 0.5);
  fresh.push(scalar(4.0));
  CHECK(fresh.at(-0.2)(0) == 0.0);
}

TEST_CASE("pure delay shifts a step") {
  const double tau = 0.37, dt = 1e-3;
  const SimResult r = simulate_delayed(delayed_model(pure_delay(), 1), DelayTrajectory::constant(tau),
                                       [](double) { return scalar(1.0); }, dt, 2.0);
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    const double t = r.t[k];
    if (t < tau - 2 * dt) CHECK(std::abs(r.e(k, 0)) < 1e-12);
    if (t > tau + 2 * dt) CHECK(r.e(k, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(simulate_delayed(delayed_model(pure_delay(), 1), DelayTrajectory::constant(tau),
                                   [](double) { return scalar(1.0); }, 0.05, 1.0),
                  Error);
}

TEST_CASE("zero delay matches the undelayed plant") {
  const StateSpace g = classical_loop_lin().vertices.front();
  const InputFn d = [](double t) { return scalar(std::sin(1.3 * t)); };
  const SimResult r = simulate_delayed(delayed_model(g, 1), DelayTrajectory::constant(0.0), d, 1e-3, 5.0);
  const StateSpace plain = select_outputs(select_inputs(g, 1, 1), 1, 1);
  const std::vector<double> ref = undelayed(plain, d, 1e-3, 5.0);
  REQUIRE(ref.size() == r.t.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(ref[k] - r.e(k, 0)));
  CHECK(worst < 1e-9);
  CHECK(r.w.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("integrator is fourth order") {
  const StateSpace g = classical_loop_lin().vertices.front();
  const InputFn d = [](double t) { return scalar(std::sin(1.3 * t)); };
  const DelayedModel model = delayed_model(g, 1);
  auto end = [&](double dt) {
    const SimResult r = simulate_delayed(model, DelayTrajectory::constant(0.0), d, dt, 2.0);
    return r.e(static_cast<Eigen::Index>(r.t.size() - 1), 0);
  };
  const double ref = end(1e-4);
  const double e1 = std::abs(end(0.02) - ref), e2 = std::abs(end(0.01) - ref);
  CHECK(e1 / e2 >= 8.0);
}

TEST_CASE("empirical gain sits below the frequency-domain gain") {
  const StateSpace g = classical_loop_lin().vertices.front();
  const double fr = delayed_fr_gain(g, 1, 0.5, FrequencyGrid::log_spaced(1e-3, 1e3, 2000, false, false)).gain;
  ProbeOptions o;
  o.sines = 12;
  o.multisines = 2;
  const GainEstimate e = empirical_l2_gain(g, 1, DelayTrajectory::constant(0.5), o);
  CHECK(e.gamma_lb <= fr * 1.01);
  CHECK(e.gamma_lb >= 0.9 * fr);
}

TEST_CASE("static gain estimate") {
  // e = 2d with no loop.
  const StateSpace g(m(1, 1, {-1.0}), m(1, 2, {0.0, 0.0}), m(2, 1, {0.0, 0.0}), m(2, 2, {0.0, 0.0, 0.0, 2.0}));
  ProbeOptions o;
  o.sines = 4;
  o.multisines = 1;
  const GainEstimate e = empirical_l2_gain(g, 1, DelayTrajectory::constant(0.2), o);
  CHECK(e.gamma_lb == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("delay channel satisfies the shipped IQCs") {
  IqcProbeOptions o;
  o.probes = 6;
  o.horizons = {5.0, 20.0};
  const IqcCheckResult c = empirical_iqc_check(factorize(make_pi3_bar(1.0)), DelayTrajectory::constant(0.8), o);
  CHECK(c.min_normalized >= -1e-3);
  const IqcCheckResult s = empirical_iqc_check(factorize(make_pi1()), DelayTrajectory::constant(0.8), o);
  CHECK(s.min_normalized >= -1e-6);
  const IqcCheckResult t =
      empirical_iqc_check(factorize(make_pi6(1.0, 0.3)), DelayTrajectory::sinusoidal(1.0, 0.3), o);
  CHECK(t.min_normalized >= -1e-3);
}

TEST_CASE("ill-posed loop is rejected") {
  // Dvw = -1 makes I + Dvw singular.
  const StateSpace g(m(1, 1, {-1.0}), m(1, 2, {0.0, 0.0}), m(2, 1, {0.0, 0.0}), m(2, 2, {-1.0, 0.0, 0.0, 0.0}));
  CHECK_THROWS_AS(delayed_model(g, 1), Error);
}

}
