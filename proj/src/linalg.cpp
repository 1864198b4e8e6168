#include "delayiqc/linalg.hpp"

#include <lapacke.h>

#include <cmath>
#include <limits>
#include <string>

#include "delayiqc/error.hpp"

namespace delayiqc {

namespace {

lapack_logical select_left_half_plane(const double* re, const double* /*im*/) {
  return *re < 0.0 ? 1 : 0;
}

}  // namespace

OrderedSchur ordered_real_schur(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  if (a.rows() != a.cols()) throw Error(ErrorCode::kDimensionMismatch, "Schur of non-square matrix");
  OrderedSchur out;
  if (n == 0) {
    out.u = Matrix(0, 0);
    out.t = Matrix(0, 0);
    return out;
  }
  // LAPACK is column-major, as is Eigen's default storage.
  Matrix t = a;
  Matrix u(n, n);
  Vector wr(n), wi(n);
  lapack_int sdim = 0;
  const lapack_int info = LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'S', select_left_half_plane, n,
                                        t.data(), n, &sdim, wr.data(), wi.data(), u.data(), n);
  if (info != 0) {
    throw Error(ErrorCode::kSolverFailure, "dgees failed, info=" + std::to_string(info));
  }
  out.u = std::move(u);
  out.t = std::move(t);
  out.stable_count = static_cast<int>(sdim);
  return out;
}

CVector eigenvalues(const Matrix& a) {
  if (a.size() == 0) return CVector(0);
  return Eigen::EigenSolver<Matrix>(a, false).eigenvalues();
}

double spectral_abscissa(const Matrix& a) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& l : eigenvalues(a)) m = std::max(m, l.real());
  return m;
}

bool is_hurwitz(const Matrix& a, double margin) { return spectral_abscissa(a) < -margin; }

double imaginary_axis_distance(const Matrix& a) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& l : eigenvalues(a)) m = std::min(m, std::abs(l.real()));
  return m;
}

Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(b.rows());
  if (a.cols() != m || b.cols() != n || c.rows() != m || c.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "Sylvester operands");
  }
  if (m == 0 || n == 0) return Matrix::Zero(m, n);
  Eigen::RealSchur<Matrix> sa(a);
  Eigen::RealSchur<Matrix> sb(b);
  Matrix ta = sa.matrixT();
  Matrix tb = sb.matrixT();
  Matrix f = sa.matrixU().transpose() * c * sb.matrixU();
  double scale = 1.0;
  const lapack_int info = LAPACKE_dtrsyl(LAPACK_COL_MAJOR, 'N', 'N', 1, m, n, ta.data(), m,
                                         tb.data(), n, f.data(), m, &scale);
  if (info < 0) throw Error(ErrorCode::kSolverFailure, "dtrsyl argument error");
  if (info == 1) {
    throw Error(ErrorCode::kSolverFailure, "Sylvester equation has (nearly) common eigenvalues");
  }
  return sa.matrixU() * (f / scale) * sb.matrixU().transpose();
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  return symmetrize(solve_sylvester(a, a.transpose(), -q));
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue_sym(const Matrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  return Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(m), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

double max_eigenvalue_sym(const Matrix& m) {
  if (m.size() == 0) return -std::numeric_limits<double>::infinity();
  return Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(m), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

Matrix orthonormal_range(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return Matrix(m.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * std::max(smax, 1.0)) ++rank;
  }
  return svd.matrixU().leftCols(rank);
}

Matrix solve_are(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& r) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (a.cols() != n || b.rows() != n || c.rows() != m || c.cols() != n || r.rows() != m ||
      r.cols() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "ARE operands");
  }
  if (n == 0) return Matrix(0, 0);
  Eigen::FullPivLU<Matrix> rlu(r);
  if (!rlu.isInvertible()) throw Error(ErrorCode::kSingularDpi, "ARE weight is singular");
  const Matrix rinv = rlu.inverse();
  const Matrix at = a - b * rinv * c;
  const Matrix g = b * rinv * b.transpose();
  const Matrix q = -c.transpose() * rinv * c;

  Matrix h(2 * n, 2 * n);
  h << at, -g, -q, -at.transpose();
  const double hscale = std::max(1.0, h.norm());
  if (imaginary_axis_distance(h) < 1e-10 * hscale) {
    throw Error(ErrorCode::kNoStabilizingSolution, "Hamiltonian has imaginary-axis eigenvalues");
  }
  const OrderedSchur schur = ordered_real_schur(h);
  if (schur.stable_count != n) {
    throw Error(ErrorCode::kNoStabilizingSolution, "Hamiltonian stable subspace has wrong dimension");
  }
  const Matrix u1 = schur.u.topLeftCorner(n, n);
  const Matrix u2 = schur.u.bottomLeftCorner(n, n);
  Eigen::FullPivLU<Matrix> lu(u1);
  if (!lu.isInvertible() || lu.rcond() < 1e-13) {
    throw Error(ErrorCode::kNoStabilizingSolution, "stable subspace is not a graph");
  }
  Matrix x = symmetrize(u2 * lu.inverse());
  const Matrix closed = a - b * rinv * (b.transpose() * x + c);
  if (!is_hurwitz(closed)) {
    throw Error(ErrorCode::kNoStabilizingSolution, "ARE closed loop is not Hurwitz");
  }
  return x;
}

double are_residual(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& r,
                    const Matrix& x) {
  const Matrix k = b.transpose() * x + c;
  const Matrix res = a.transpose() * x + x * a - k.transpose() * r.inverse() * k;
  return res.norm();
}

}  // namespace delayiqc
