#include <cmath>
#include <random>

#include "doctest.h"
#include "delayiqc/builtins.hpp"
#include "delayiqc/error.hpp"
#include "delayiqc/recipe.hpp"
#include "delayiqc/sos.hpp"

using namespace delayiqc;

namespace {

Polynomial poly(const std::string& text) { return parse_polynomial(text, {"x", "y"}); }

Recipe standard() {
  Recipe r;
  r.items = {{"pi1"}, {"pi3bar"}};
  return r;
}

}  // namespace

TEST_SUITE("sos") {

TEST_CASE("polynomial parsing and arithmetic") {
  const Polynomial p = poly("x^2 - 2*x*y + y^2");
  const Polynomial q = poly("x - y");
  CHECK((p - q * q).is_zero());
  CHECK(p.degree() == 2);
  CHECK(p.evaluate((Vector(2) << 3.0, 1.0).finished()) == doctest::Approx(4.0));
  CHECK((p.derivative(0) - poly("2*x - 2*y")).is_zero());
  CHECK_THROWS_AS(poly("x + z"), Error);
  CHECK_THROWS_AS(poly("x +"), Error);
}

TEST_CASE("SOS decisions") {
  const auto a = is_sos(poly("x^4 + 2*x^2 + 1"));
  REQUIRE(a.has_value());
  double min_eig = 0.0;
  CHECK(certificate_mismatch(poly("x^4 + 2*x^2 + 1"), *a, &min_eig) < 1e-7);
  CHECK(min_eig >= -1e-9);
  CHECK(is_sos(poly("x^2*y^2")).has_value());
  CHECK(is_sos(poly("x^2 + 2*x*y + 5*y^2")).has_value());
  CHECK_FALSE(is_sos(poly("-x^2")).has_value());
  CHECK_FALSE(is_sos(poly("x^2 + 4*x*y + y^2")).has_value());
  CHECK_FALSE(is_sos(poly("x^3")).has_value());
}

TEST_CASE("static plant e = 2d") {
  // No states, v = 0, e = 2d: gain exactly 2.
  PolynomialSystem s;
  s.nx = 0;
  s.nw = 1;
  s.nd = 1;
  s.h1 = {Polynomial(2)};
  s.h2 = {parse_polynomial("2*d1", {"w1", "d1"})};
  s.names = {"w1", "d1"};
  const std::vector<IqcTerm> terms = standard().instantiate(0.5);
  SosOptions o;
  o.v_degree = 2;
  const SosResult r = sos_gain(build_extended_poly(s, terms), terms, o);
  REQUIRE(r.status == AnalysisStatus::kFeasible);
  CHECK(r.gamma == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("quadratic storage on a linear plant matches the LMI") {
  const std::vector<IqcTerm> terms = standard().instantiate(0.5);
  const LpvPlant lin = classical_loop_lin();
  const double lmi = solve_gain(build_extended(lin, terms), terms).gamma;
  SosOptions o;
  o.v_degree = 2;
  const SosResult r = sos_gain(build_extended_poly(from_state_space(lin.vertices.front(), 1), terms), terms, o);
  REQUIRE(r.status == AnalysisStatus::kFeasible);
  CHECK(r.gamma == doctest::Approx(lmi).epsilon(0.01));
  CHECK(r.certificate_error < 1e-6);
}

TEST_CASE("dissipation inequality holds at sampled points") {
  const std::vector<IqcTerm> terms = standard().instantiate(0.5);
  const ExtendedPoly ext = build_extended_poly(nl_classical_loop(), terms);
  SosOptions o;
  o.v_degree = 4;
  const SosResult r = sos_gain(ext, terms, o);
  REQUIRE(r.status == AnalysisStatus::kFeasible);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = -1e300;
  for (int k = 0; k < 200; ++k) {
    Vector pt(ext.nvars());
    for (int i = 0; i < pt.size(); ++i) pt(i) = 2.0 * n(rng);
    worst = std::max(worst, dissipation_value(ext, terms, r, pt) / (1.0 + pt.squaredNorm() * pt.squaredNorm()));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("nonlinear loop certificate at a short delay") {
  const std::vector<IqcTerm> terms = standard().instantiate(0.3);
  SosOptions o;
  o.v_degree = 4;
  const SosResult r = sos_feasibility(build_extended_poly(nl_classical_loop(), terms), terms, o);
  CHECK(r.status == AnalysisStatus::kFeasible);
  CHECK(r.min_gram_eig >= -1e-9);
}

TEST_CASE("plant validation") {
  PolynomialSystem s = nl_classical_loop();
  s.f[0].add_term(Monomial(s.nvars(), 0), 1.0);
  CHECK_THROWS_AS(s.validate(), Error);
}

}
