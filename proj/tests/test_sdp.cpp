#include <cmath>

#include "doctest.h"
#include "delayiqc/sdp.hpp"

using namespace delayiqc;
using namespace delayiqc::sdp;

TEST_SUITE("sdp") {

TEST_CASE("linear program") {
  // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  (1.6, 1.2)
  Problem p;
  const Var x = p.add_lp(), y = p.add_lp();
  p.add_nonnegative(LinExpr(4.0).add(x, -1.0).add(y, -2.0));
  p.add_nonnegative(LinExpr(6.0).add(x, -3.0).add(y, -1.0));
  p.minimize(LinExpr().add(x, -1.0).add(y, -1.0));
  const Solution s = InteriorPoint().solve(p, {});
  REQUIRE(s.ok());
  CHECK(s.value(x) == doctest::Approx(1.6).epsilon(1e-6));
  CHECK(s.value(y) == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(s.primal_objective == doctest::Approx(-2.8).epsilon(1e-7));
}

TEST_CASE("free variable with equality") {
  Problem p;
  const Var a = p.add_free(), b = p.add_lp();
  p.add_equality(LinExpr(-3.0).add(a, 1.0).add(b, 1.0));
  p.add_nonnegative(LinExpr(-1.0).add(b, 1.0));
  p.minimize(LinExpr().add(a, -1.0));
  const Solution s = default_backend().solve(p, {});
  REQUIRE(s.ok());
  CHECK(s.value(a) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("smallest eigenvalue as an SDP") {
  // max t s.t. A - t I >= 0
  const Matrix a = (Matrix(3, 3) << 4, 1, 0, 1, 3, 1, 0, 1, 2).finished();
  Problem p;
  const Var t = p.add_free();
  SymExpr f(3);
  f.add_constant(a);
  for (int i = 0; i < 3; ++i) f.at(i, i).add(t, -1.0);
  p.add_lmi(f);
  p.minimize(LinExpr().add(t, -1.0));
  const Solution s = InteriorPoint().solve(p, {});
  REQUIRE(s.ok());
  const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues()(0);
  CHECK(s.value(t) == doctest::Approx(lmin).epsilon(1e-6));
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(s.value(f)).eigenvalues()(0) >= -1e-9);
}

TEST_CASE("PSD block with trace constraint") {
  // min <C, Y> s.t. tr Y = 1, Y >= 0  ->  smallest eigenvalue of C
  const Matrix c = (Matrix(2, 2) << 2, 1, 1, 2).finished();
  Problem p;
  const int blk = p.add_psd(2);
  p.add_equality(LinExpr(-1.0).add(Problem::psd(blk, 0, 0), 1.0).add(Problem::psd(blk, 1, 1), 1.0));
  p.minimize(LinExpr()
                 .add(Problem::psd(blk, 0, 0), c(0, 0))
                 .add(Problem::psd(blk, 1, 1), c(1, 1))
                 .add(Problem::psd(blk, 0, 1), 2.0 * c(0, 1)));
  const Solution s = InteriorPoint().solve(p, {});
  REQUIRE(s.ok());
  CHECK(s.primal_objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.psd.at(0).trace() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("infeasible problem is reported") {
  Problem p;
  const Var x = p.add_lp();
  p.add_nonnegative(LinExpr(-1.0).add(x, -1.0));  // -1 - x >= 0 with x >= 0
  p.minimize(LinExpr().add(x, 1.0));
  const Solution s = InteriorPoint().solve(p, {});
  CHECK_FALSE(s.status == Status::kOptimal);
}

}
