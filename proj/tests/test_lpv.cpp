#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "delayiqc/builtins.hpp"
#include "delayiqc/error.hpp"
#include "delayiqc/recipe.hpp"

using namespace delayiqc;

namespace {

Matrix m(int r, int c, std::initializer_list<double> v) {
  Matrix out(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out(i, j) = *it++;
  return out;
}

Recipe recipe(std::initializer_list<RecipeItem> items) {
  Recipe r;
  r.items = items;
  return r;
}

// Independent reference values: tests/oracle/derive.py (cvxpy, Clarabel).
constexpr double kGainHalf = 5.32041200992581;
constexpr double kGainOne = 7.954602631541782;
constexpr double kHinf = 0.5970666250540949;

// States and (d -> e) channel of the seeded random system, with v = 0 and w unused.
LpvPlant decoupled(double shift = 0.0) {
  const Matrix a = m(3, 3, {-2.9987698466425172, 0.2987455375084699, -0.2741378553622176, -0.8905918387572742,
                            -3.4546707851717224, -0.9916465549964624, 0.06014360259743848, 1.3402152455545335,
                            -3.49220651855133});
  const Matrix b = m(3, 2, {-0.6204748998199404, 0.4898420501851982, 0.35688700816006075, 0.10541424899789856,
                            -0.9304680447082047, -0.02925182246327349});
  const Matrix c = m(2, 3, {0.6953031944582878, -1.344214547285082, -0.45761576104021817, -1.901222739800844,
                            -1.289537739784976, -1.8417350377917323});
  Matrix bb = Matrix::Zero(3, 3), cc = Matrix::Zero(3, 3);
  bb.rightCols(2) = b;
  cc.bottomRows(2) = c;
  LpvPlant g;
  g.vertices = {StateSpace(a + shift * Matrix::Identity(3, 3), bb, cc, Matrix::Zero(3, 3))};
  g.rho = {0.0};
  g.nv = 1;
  return g;
}

AnalysisResult gain(const LpvPlant& g, const Recipe& r, double tau) {
  const std::vector<IqcTerm> terms = r.instantiate(tau);
  return solve_gain(build_extended(g, terms), terms);
}

}  // namespace

TEST_SUITE("lpv") {

TEST_CASE("linearized loop gain matches the reference") {
  const Recipe r = recipe({{"pi1"}, {"pi3bar"}});
  const AnalysisResult half = gain(classical_loop_lin(), r, 0.5);
  REQUIRE(half.status == AnalysisStatus::kFeasible);
  CHECK(half.gamma == doctest::Approx(kGainHalf).epsilon(1e-3));
  CHECK(half.lmi_max_eig < 0.0);
  const AnalysisResult one = gain(classical_loop_lin(), r, 1.0);
  REQUIRE(one.status == AnalysisStatus::kFeasible);
  CHECK(one.gamma == doctest::Approx(kGainOne).epsilon(1e-3));
}

TEST_CASE("re-assembled LMI confirms the certificate and is tight") {
  const Recipe r = recipe({{"pi1"}, {"pi3bar"}});
  const std::vector<IqcTerm> terms = r.instantiate(0.5);
  const ExtendedPlant ext = build_extended(classical_loop_lin(), terms);
  const AnalysisResult res = solve_gain(ext, terms);
  REQUIRE(res.status == AnalysisStatus::kFeasible);
  CHECK(assemble_lmi_max_eig(ext, terms, res.p, res.scalings, res.gamma * res.gamma) < 0.0);
  CHECK(assemble_lmi_max_eig(ext, terms, res.p, res.scalings, 0.9 * res.gamma * res.gamma) > 0.0);
}

TEST_CASE("no delay coupling gives the H-infinity norm") {
  const AnalysisResult r = gain(decoupled(), recipe({{"pi1"}, {"pi3bar"}}), 0.5);
  REQUIRE(r.status == AnalysisStatus::kFeasible);
  CHECK(r.gamma == doctest::Approx(kHinf).epsilon(0.01));
  CHECK(r.gamma >= kHinf * (1.0 - 1e-6));
}

TEST_CASE("unstable plant is infeasible") {
  const Recipe r = recipe({{"pi1"}, {"pi3bar"}});
  const std::vector<IqcTerm> terms = r.instantiate(0.5);
  const ExtendedPlant ext = build_extended(decoupled(4.0), terms);
  CHECK(check_feasibility(ext, terms).status == AnalysisStatus::kInfeasible);
  CHECK(solve_gain(ext, terms).status != AnalysisStatus::kFeasible);
}

TEST_CASE("delay margins") {
  BisectOptions b;
  b.lo = 0.01;
  b.hi = 3.0;
  const MarginResult coarse = delay_margin(classical_loop_lin(), recipe({{"pi1"}, {"pi2bar"}}).fn(), b);
  CHECK(coarse.margin >= 0.04);
  CHECK(coarse.margin <= 0.10);
  const MarginResult fine = delay_margin(classical_loop_lin(), recipe({{"pi1"}, {"pi3bar"}}).fn(), b);
  CHECK(fine.margin == doctest::Approx(1.956).epsilon(0.01));
  CHECK_FALSE(fine.exceeds_cap);
  CHECK(fine.steps <= 15);
}

TEST_CASE("bisection contract") {
  BisectOptions b;
  b.lo = 0.1;
  b.hi = 4.0;
  b.tol = 1e-4;
  const MarginResult r = bisect_margin([](double t) { return t <= 1.2345; }, b);
  CHECK(r.margin <= 1.2345);
  CHECK(r.margin == doctest::Approx(1.2345).epsilon(1e-4));
  CHECK(bisect_margin([](double) { return true; }, b).exceeds_cap);
  CHECK_THROWS_AS(bisect_margin([](double) { return false; }, b), Error);
}

TEST_CASE("gain sweep is monotone in the delay") {
  const std::vector<double> taus = {0.1, 0.3, 0.5, 0.8, 1.1, 1.4};
  const std::vector<SweepPoint> pts = gain_sweep(classical_loop_lin(), recipe({{"pi1"}, {"pi3bar"}}).fn(), taus);
  REQUIRE(pts.size() == taus.size());
  for (std::size_t k = 1; k < pts.size(); ++k) {
    REQUIRE(pts[k].result.status == AnalysisStatus::kFeasible);
    CHECK(pts[k].result.gamma >= pts[k - 1].result.gamma * (1.0 - 1e-6));
  }
  const std::string csv = sweep_csv(pts);
  CHECK(csv.rfind("tau,gamma,status", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(taus.size()) + 1);
}

TEST_CASE("rate-bounded multiplier at zero rate reproduces the constant one") {
  const double a = gain(classical_loop_lin(), recipe({{"pi1"}, {"pi3bar"}}), 0.5).gamma;
  const double b = gain(classical_loop_lin(), recipe({{"pi4", 0.0}, {"pi3bar"}}), 0.5).gamma;
  CHECK(b == doctest::Approx(a).epsilon(1e-4));
}

TEST_CASE("time-varying multipliers never beat the constant-delay bound") {
  const double c = gain(classical_loop_lin(), recipe({{"pi1"}, {"pi3bar"}}), 0.5).gamma;
  const AnalysisResult tv = gain(classical_loop_lin(), recipe({{"pi4", 0.3}, {"pi6", 0.3}}), 0.5);
  if (tv.status == AnalysisStatus::kFeasible) CHECK(tv.gamma >= c * (1.0 - 1e-4));
}

TEST_CASE("dimension errors") {
  LpvPlant g = classical_loop_lin();
  g.nv = 5;
  CHECK_THROWS_AS(g.validate(), Error);
}

}
