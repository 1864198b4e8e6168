#include <cmath>

#include "doctest.h"
#include "delayiqc/error.hpp"
#include "delayiqc/multipliers.hpp"

using namespace delayiqc;

namespace {

double qc(const Multiplier& pi, double w, Complex s) {
  const CMatrix p = pi.evaluate(w);
  return (p(0, 0) + 2.0 * (std::conj(p(1, 0)) * s).real() + p(1, 1) * std::norm(s)).real();
}

Multiplier constant(double a, double b, double c) {
  Multiplier m;
  m.name = "const";
  m.pi11 = StateSpace::gain(Matrix::Constant(1, 1, a));
  m.pi21 = StateSpace::gain(Matrix::Constant(1, 1, b));
  m.pi22 = StateSpace::gain(Matrix::Constant(1, 1, c));
  return m;
}

}  // namespace

TEST_SUITE("multipliers") {

TEST_CASE("every catalog entry is Hermitian on the covering grid") {
  const FrequencyGrid grid = covering_frequency_grid(1.0);
  for (const Multiplier& pi : {make_pi1(), make_pi2_bar(1.0), make_pi3_bar(1.0), make_pi4(0.5), make_pi5(1.0, 0.5),
                               make_pi6(1.0, 0.5)}) {
    for (double w : grid) {
      const CMatrix p = pi.evaluate(w);
      CHECK((p - p.adjoint()).norm() <= 1e-10 * std::max(1.0, p.norm()));
    }
  }
}

TEST_CASE("pi1 geometry") {
  const NormalizedQC q = circle_geometry(make_pi1(), 2.3);
  CHECK(q.kind == CircleCase::kDiskInterior);
  CHECK(std::abs(q.center - Complex(-1.0, 0.0)) < 1e-14);
  CHECK(q.radius == doctest::Approx(1.0));
  CHECK(qc(make_pi1(), 2.3, delay_deviation_response(0.7, 2.3)) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(check_covering(make_pi1(), covering_delay_grid(5.0), covering_frequency_grid(1.0)).min_margin >= -1e-12);
}

TEST_CASE("pi2bar values and covering") {
  const Multiplier pi = make_pi2_bar(1.0);
  CHECK(pi.evaluate(kInfiniteFrequency)(0, 0).real() == doctest::Approx(4.0));
  const NormalizedQC q0 = circle_geometry(pi, 0.0);
  CHECK(q0.kind == CircleCase::kDiskInterior);
  CHECK(std::abs(q0.center) < 1e-15);
  CHECK(q0.radius == doctest::Approx(2e-6 / 7.1).epsilon(1e-9));
  const double w = std::numbers::pi;
  const double phi = std::abs(freq_response(phi2(1.0), w)(0, 0));
  for (double tau : covering_delay_grid(1.0)) CHECK(phi >= std::abs(delay_deviation_response(tau, w)) - 1e-12);
  // Measured small violation of the published coefficients near tau = tau_bar.
  const CoveringReport r = check_covering(pi, covering_delay_grid(1.0), covering_frequency_grid(1.0));
  CHECK(r.min_margin > -6e-3);
  CHECK(check_covering(pi, {3.0}, covering_frequency_grid(1.0)).min_margin < -0.1);
}

TEST_CASE("pi3bar geometry and covering") {
  const Multiplier pi = make_pi3_bar(1.0);
  for (double w : {0.1, 0.361, 2.0, 14.0}) {
    const NormalizedQC q = circle_geometry(pi, w);
    const Complex f = freq_response(phi3(1.0), w)(0, 0);
    CHECK(q.kind == CircleCase::kDiskInterior);
    CHECK(std::abs(q.center - f) < 1e-12);
    CHECK(q.radius == doctest::Approx(std::abs(f)));
  }
  const CoveringReport r = check_covering(pi, covering_delay_grid(1.0), covering_frequency_grid(1.0));
  CHECK(r.min_margin > -2.5e-2);
}

TEST_CASE("pi4 constant forms") {
  CHECK(make_pi4(0.0).evaluate(1.0).isApprox(make_pi1().evaluate(1.0)));
  const CMatrix p = make_pi4(0.5).evaluate(1.0);
  CHECK(p.real().isApprox((Matrix(2, 2) << 1, -1, -1, -1).finished()));
  Matrix x = Matrix::Zero(2, 2);
  x.diagonal() << 2.0, 3.0;
  const CMatrix px = make_pi4(0.5, x).evaluate(0.0);
  CHECK(px.real().topLeftCorner(2, 2).isApprox(x));
  CHECK(px.real().topRightCorner(2, 2).isApprox(-x));
  CHECK(px.real().bottomRightCorner(2, 2).isApprox(-x));
  CHECK_THROWS_AS(make_pi4(1.0), Error);
  CHECK_THROWS_AS(make_pi4(0.5, -Matrix::Identity(1, 1)), Error);
}

TEST_CASE("pi5 weight satisfies its bound") {
  for (double r : {0.0, 0.3, 0.5, 0.9}) {
    const double cap = 1.0 + 1.0 / std::sqrt(1.0 - r);
    const StateSpace phi = rate_weight(1.0, r, false);
    for (double w : covering_frequency_grid(1.0)) {
      if (std::isinf(w) || w == 0.0) continue;
      CHECK(std::abs(freq_response(phi, w)(0, 0)) > std::min(w, cap));
    }
    CHECK(std::abs(freq_response(phi, 1e-6)(0, 0)) / 1e-6 >= 1.1 * (1.0 - 1e-6));
  }
  CHECK(std::abs(freq_response(rate_weight(1.0, 0.0, false), kInfiniteFrequency)(0, 0)) > 2.0);
  CHECK_THROWS_AS(make_pi5(1.0, 1.2), Error);
}

TEST_CASE("pi6 matches the pi3 disk at low frequency for slow rates") {
  const Multiplier pi = make_pi6(1.0, 1e-6);
  for (double w : {0.01, 0.05}) {
    const NormalizedQC q = circle_geometry(pi, w);
    const Complex s = delay_deviation_response(1.0, w);
    CHECK(std::abs(q.center - 0.5 * s) < 1e-3 * std::abs(s) + 1e-9);
    CHECK(q.radius == doctest::Approx(0.5 * std::abs(s)).epsilon(0.05));
  }
  CHECK(pi6_pade_inflation(1.0, 0.5) >= 1.0);
}

TEST_CASE("circle cases") {
  CHECK(circle_geometry(constant(1, 0.5, 0), 1.0).kind == CircleCase::kHalfPlane);
  const NormalizedQC ext = circle_geometry(constant(-1, 0, 1), 1.0);
  CHECK(ext.kind == CircleCase::kDiskExterior);
  CHECK(std::abs(ext.center) < 1e-15);
  CHECK(ext.radius == doctest::Approx(1.0));
  CHECK_THROWS_AS(circle_geometry(constant(1, 0, 0), 1.0), Error);
}

TEST_CASE("conic combinations") {
  const Multiplier p1 = make_pi1(), p3 = make_pi3_bar(1.96);
  CHECK(conic_combine({p1}, {1.0}).evaluate(0.7).isApprox(p1.evaluate(0.7)));
  const Multiplier two = conic_combine({p1, p1}, {1.0, 1.0});
  CHECK(two.evaluate(0.3).isApprox(2.0 * p1.evaluate(0.3)));
  CHECK(std::abs(circle_geometry(two, 0.3).center - circle_geometry(p1, 0.3).center) < 1e-14);
  const Multiplier opt = conic_combine({p1, p3}, {5310.0, 7210.0});
  const Complex s = delay_deviation_response(1.96, 0.361);
  const NormalizedQC q = circle_geometry(opt, 0.361);
  CHECK(std::abs(s - q.center) <= q.radius);
  for (double w : {0.05, 0.361, 3.0}) {
    const Complex t(0.3, -0.8);
    CHECK(qc(opt, w, t) == doctest::Approx(5310.0 * qc(p1, w, t) + 7210.0 * qc(p3, w, t)).epsilon(1e-12));
    CHECK(std::abs(circle_geometry(conic_combine({p3}, {3.5}), w).center - circle_geometry(p3, w).center) < 1e-12);
  }
  CHECK_THROWS_AS(conic_combine({p1}, {-1.0}), Error);
}

TEST_CASE("repeated-channel scaling") {
  CHECK(scale_repeated(make_pi1(), 1, Matrix::Identity(1, 1)).evaluate(1.0).isApprox(make_pi1().evaluate(1.0)));
  const CMatrix p = scale_repeated(make_pi1(), 2, Matrix::Identity(2, 2)).evaluate(1.0);
  Matrix want(4, 4);
  want << Matrix::Zero(2, 2), -Matrix::Identity(2, 2), -Matrix::Identity(2, 2), -Matrix::Identity(2, 2);
  CHECK(p.real().isApprox(want));
  CHECK_THROWS_AS(scale_repeated(make_pi1(), 2, -Matrix::Identity(2, 2)), Error);
}

}
