#pragma once

#include <Eigen/Dense>

namespace delayiqc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Default Hurwitz margin: every pole must satisfy Re(p) < -kStabilityMargin.
inline constexpr double kStabilityMargin = 1e-9;

/// Real Schur form A = U T U^T with the eigenvalues satisfying Re < 0 in the
/// leading block. `stable_count` is the size of that block.
struct OrderedSchur {
  Matrix u;
  Matrix t;
  int stable_count = 0;
};

OrderedSchur ordered_real_schur(const Matrix& a);

CVector eigenvalues(const Matrix& a);

/// Largest real part over the spectrum (-inf for an empty matrix).
double spectral_abscissa(const Matrix& a);

bool is_hurwitz(const Matrix& a, double margin = kStabilityMargin);

/// Smallest |Re(λ)| over the spectrum; +inf for an empty matrix.
double imaginary_axis_distance(const Matrix& a);

/// Solves A X + X B = C.
Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c);

/// Solves A X + X A^T + Q = 0 (A Hurwitz).
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

/// Stabilizing solution of
///   A^T X + X A - (X B + C^T) R^{-1} (B^T X + C) = 0,
/// computed from the stable invariant subspace of the Hamiltonian. Throws
/// NoStabilizingSolution when the Hamiltonian has imaginary-axis eigenvalues
/// or the stable subspace is not a graph.
Matrix solve_are(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& r);

/// Residual norm of the equation above.
double are_residual(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& r,
                    const Matrix& x);

Matrix symmetrize(const Matrix& m);

double min_eigenvalue_sym(const Matrix& m);
double max_eigenvalue_sym(const Matrix& m);

/// Orthonormal basis of range(M) using an SVD rank cut at tol * sigma_max.
Matrix orthonormal_range(const Matrix& m, double rel_tol);

}  // namespace delayiqc
