#include <cmath>
#include <numbers>

#include "doctest.h"
#include "delayiqc/error.hpp"
#include "delayiqc/factorization.hpp"

using namespace delayiqc;

namespace {

Multiplier diag(double a, double c) {
  Multiplier m;
  m.name = "diag";
  m.pi11 = StateSpace::gain(Matrix::Constant(1, 1, a));
  m.pi21 = StateSpace::gain(Matrix::Zero(1, 1));
  m.pi22 = StateSpace::gain(Matrix::Constant(1, 1, c));
  return m;
}

Matrix jpq(int p, int q) {
  Matrix j = Matrix::Zero(p + q, p + q);
  j.diagonal().head(p).setOnes();
  j.diagonal().tail(q).setConstant(-1.0);
  return j;
}

}  // namespace

TEST_SUITE("factorization") {

TEST_CASE("generic split") {
  const Factorization f1 = factorize_generic(make_pi1());
  CHECK(f1.psi.states() == 0);
  CHECK(f1.psi.d().isApprox(Matrix::Identity(2, 2)));
  CHECK(f1.m.isApprox(make_pi1().evaluate(0.0).real()));

  for (const Multiplier& pi : {make_pi2_bar(1.0), make_pi3_bar(1.0)}) {
    const Factorization f = factorize_generic(pi);
    CHECK(f.psi.states() == 2);
    CHECK(f.psi.is_stable());
    CHECK(f.z_size() == 4);
    CHECK(factorization_residual(f.psi, f.m, pi, verification_grid(1.0)) < 1e-6);
  }
}

TEST_CASE("every shipped multiplier factorizes") {
  for (const Multiplier& pi : {make_pi1(), make_pi2_bar(1.0), make_pi3_bar(1.0), make_pi4(0.5), make_pi5(1.0, 0.5),
                               make_pi6(1.0, 0.5)}) {
    const Factorization f = factorize(pi);
    CHECK(f.psi.is_stable());
    CHECK(factorization_residual(f.psi, f.m, pi, verification_grid(1.0)) < 1e-6);
  }
}

TEST_CASE("signature decomposition") {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4.0, -9.0;
  Signature s = signature_decomposition(d);
  CHECK(s.p == 1);
  CHECK(s.q == 1);
  CHECK((s.w.transpose() * jpq(1, 1) * s.w - d).norm() < 1e-10);
  CHECK(s.w.cwiseAbs().isApprox((Matrix(2, 2) << 2, 0, 0, 3).finished()));

  s = signature_decomposition(Matrix::Identity(3, 3));
  CHECK(s.p == 3);
  CHECK(s.q == 0);
  CHECK((s.w.transpose() * s.w - Matrix::Identity(3, 3)).norm() < 1e-12);

  const Matrix swap = (Matrix(2, 2) << 0, 1, 1, 0).finished();
  s = signature_decomposition(swap);
  CHECK(s.p == 1);
  CHECK(s.q == 1);
  CHECK((s.w.transpose() * jpq(1, 1) * s.w - swap).norm() < 1e-10);

  CHECK_THROWS_AS(signature_decomposition(Matrix::Zero(2, 2)), Error);
}

TEST_CASE("J-spectral factors") {
  const Factorization c = j_spectral(diag(1.0, -1.0));
  CHECK(c.m.isApprox(jpq(1, 1)));
  CHECK((c.psi.d().transpose() * c.m * c.psi.d() - diag(1.0, -1.0).evaluate(0.0).real()).norm() < 1e-12);

  const Multiplier pi = make_pi2_bar(1.0);
  const Factorization f = j_spectral(pi);
  CHECK(f.kind == FactorKind::kJSpectral);
  CHECK(f.m.isApprox(jpq(1, 1)));
  CHECK(f.psi.is_stable());
  CHECK(inverse(f.psi).is_stable());
  CHECK(f.are_residual < 1e-8);
  CHECK(factorization_residual(f.psi, f.m, pi, verification_grid(1.0)) < 1e-6);
  // |Ψ11| = |φ2| on the axis.
  for (double w : {0.01, 0.5, 3.0, 50.0}) {
    CHECK(std::abs(freq_response(f.psi, w)(0, 0)) ==
          doctest::Approx(std::abs(freq_response(phi2(1.0), w)(0, 0))).epsilon(1e-6));
  }
  CHECK_THROWS_AS(j_spectral(diag(0.0, 0.0)), Error);
}

TEST_CASE("hard-factorization conditions") {
  FrequencyGrid grid = verification_grid(1.0);
  const HardCheck p2 = check_hard_conditions(make_pi2_bar(1.0), grid);
  CHECK_FALSE(p2.pass);
  CHECK(p2.block == "pi11");
  CHECK(p2.omega == 0.0);
  CHECK(check_hard_conditions(make_pi2_bar(1.0), grid, 1e-9, 1e-7).pass);
  CHECK_FALSE(check_hard_conditions(make_pi1(), grid).pass);
  CHECK(check_hard_conditions(diag(1.0, -1.0), grid).pass);
  const Factorization reg = j_spectral(make_pi2_bar(1.0), 1e-7);
  CHECK(reg.hardness == FactorHardness::kHardCertified);
}

TEST_CASE("time-domain integral matches the frequency-domain one") {
  // v(t) = e^{-t} sin(2t), w = v(t - tau) - v(t), z = Ψ (v, w).
  const double tau = 0.6;
  const Multiplier pi = make_pi3_bar(1.0);
  const Factorization f = factorize_generic(pi);
  auto v = [](double t) { return t < 0.0 ? 0.0 : std::exp(-t) * std::sin(2.0 * t); };
  const double dt = 1e-3, horizon = 40.0;
  Vector x = Vector::Zero(f.psi.states());
  auto u = [&](double t) { return Vector((Vector(2) << v(t), v(t - tau) - v(t)).finished()); };
  auto rhs = [&](double t, const Vector& s) -> Vector { return f.psi.a() * s + f.psi.b() * u(t); };
  double time_int = 0.0, prev = 0.0;
  const long n = std::lround(horizon / dt);
  for (long k = 0; k <= n; ++k) {
    const double t = k * dt;
    const Vector z = f.psi.c() * x + f.psi.d() * u(t);
    const double q = z.dot(f.m * z);
    if (k > 0) time_int += 0.5 * dt * (prev + q);
    prev = q;
    const Vector k1 = rhs(t, x), k2 = rhs(t + dt / 2, x + dt / 2 * k1), k3 = rhs(t + dt / 2, x + dt / 2 * k2),
                 k4 = rhs(t + dt, x + dt * k3);
    x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  // (1/2π) ∫ [v̂; ŵ]* Π [v̂; ŵ] dω over the real line, by symmetry 2 × (0, ∞).
  double freq_int = 0.0;
  const int m = 400000;
  const double wmax = 400.0;
  for (int k = 0; k < m; ++k) {
    const double w = (k + 0.5) * wmax / m;
    const Complex vh = 2.0 / ((Complex(1.0, w)) * Complex(1.0, w) + 4.0);
    const Complex wh = delay_deviation_response(tau, w) * vh;
    const CMatrix p = pi.evaluate(w);
    const Complex val = std::conj(vh) * (p(0, 0) * vh + p(0, 1) * wh) + std::conj(wh) * (p(1, 0) * vh + p(1, 1) * wh);
    freq_int += val.real() * (wmax / m);
  }
  freq_int /= std::numbers::pi;
  CHECK(time_int == doctest::Approx(freq_int).epsilon(0.01));
}

}
