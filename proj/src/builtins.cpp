#include "delayiqc/builtins.hpp"

#include <cstdlib>
#include <regex>

#include "delayiqc/error.hpp"

namespace delayiqc {

namespace {

const Matrix& loop_a() {
  static const Matrix a = (Matrix(2, 2) << -49.0, 0.0, 1.0, 0.0).finished();
  return a;
}
const Matrix& loop_b() {
  static const Matrix b = (Matrix(2, 1) << 8.0, 0.0).finished();
  return b;
}
const Matrix& loop_c() {
  static const Matrix c = (Matrix(1, 2) << -4.5, 1.5).finished();
  return c;
}

}  // namespace

StateSpace classical_loop_open() { return StateSpace(loop_a(), loop_b(), loop_c(), Matrix::Zero(1, 1)); }

LpvPlant classical_loop_lin() {
  Matrix b(2, 2);
  b << loop_b(), loop_b();
  Matrix c(2, 2);
  c << -loop_c(), -loop_c();
  Matrix d(2, 2);
  d << 0.0, 1.0, 0.0, 1.0;
  LpvPlant g;
  g.vertices.emplace_back(loop_a() - loop_b() * loop_c(), b, c, d);
  g.rho = {0.0};
  g.nv = 1;
  return g;
}

LpvPlant milling_unshifted(double k, int grid) {
  if (grid < 2) throw Error(ErrorCode::kInvalidArgument, "milling grid needs both vertices");
  LpvPlant g;
  for (int i = 0; i < grid; ++i) {
    const double rho = -1.0 + 2.0 * i / (grid - 1);
    Matrix a = Matrix::Zero(4, 4);
    a(0, 2) = 1.0;
    a(1, 3) = 1.0;
    a(2, 0) = -(10.0 + 0.171 * k) + 0.5 * k * rho;
    a(2, 1) = 10.0;
    a(3, 0) = 5.0;
    a(3, 1) = -15.0;
    a(3, 3) = -0.25;
    Matrix b = Matrix::Zero(4, 2);
    b(2, 0) = 0.171 * k - 0.5 * k * rho;
    b(2, 1) = b(2, 0);
    Matrix c = Matrix::Zero(2, 4);
    c(0, 0) = 1.0;
    c(1, 0) = 1.0;
    g.vertices.emplace_back(a, b, c, Matrix::Zero(2, 2));
    g.rho.push_back(rho);
  }
  return g;
}

LpvPlant milling(double k, int grid) { return loop_shift(milling_unshifted(k, grid)); }

LpvPlant builtin_lpv(const std::string& name, int grid) {
  if (name == "nl-classical-loop-lin") return classical_loop_lin();
  static const std::regex re(R"(milling\((?:k\s*=\s*)?([-+0-9.eE]+)\))");
  std::smatch m;
  if (std::regex_match(name, m, re)) return milling(std::strtod(m[1].str().c_str(), nullptr), grid);
  throw Error(ErrorCode::kConfig, "unknown builtin plant '" + name + "'");
}

}  // namespace delayiqc
